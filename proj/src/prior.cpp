#include "tumorinv/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace tumorinv {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

double law_scale(const ScalarLaw& law) {
  return std::visit(overloaded{[](const UniformLaw& u) { return (u.hi - u.lo) / std::sqrt(12.0); },
                               [](const NormalLaw& n) { return n.sd; }},
                    law);
}

void PriorSpec::validate() const {
  std::ostringstream errs;
  for (const ParamPrior& p : params) {
    std::visit(overloaded{[&](const UniformLaw& u) {
                            if (!(u.lo < u.hi)) errs << " " << p.name << ": uniform needs lo < hi;";
                          },
                          [&](const NormalLaw& n) {
                            if (!(n.sd > 0.0)) errs << " " << p.name << ": normal needs sd > 0;";
                          }},
               p.law);
  }
  for (std::size_t a = 0; a < params.size(); ++a) {
    for (std::size_t b = a + 1; b < params.size(); ++b) {
      if (params[a].name == params[b].name) errs << " duplicate parameter " << params[a].name << ";";
    }
  }
  if (field.basis != BasisKind::None) {
    if (field.stddevs.empty()) errs << " field prior needs at least one mode;";
    for (double c : field.stddevs) {
      if (!(c > 0.0)) errs << " field coefficient stddevs must be > 0;";
    }
    if (field.basis == BasisKind::Test3 && field.stddevs.size() > 3) errs << " test3 basis has 3 modes;";
    if (field.basis == BasisKind::TensorSine && !(field.decay > 1.0)) errs << " decay s must be > 1;";
  } else if (!field.stddevs.empty()) {
    errs << " field stddevs given without a basis;";
  }
  const std::string msg = errs.str();
  if (!msg.empty()) throw std::invalid_argument("prior:" + msg);
}

std::vector<std::string> PriorSpec::names() const {
  std::vector<std::string> out;
  for (const ParamPrior& p : params) out.push_back(p.name);
  for (std::size_t i = 0; i < field.stddevs.size(); ++i) out.push_back("g" + std::to_string(i + 1));
  return out;
}

int PriorSpec::find(const std::string& name) const {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<double> PriorSpec::scales() const {
  std::vector<double> out;
  for (const ParamPrior& p : params) out.push_back(law_scale(p.law));
  for (double c : field.stddevs) out.push_back(c);
  return out;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> out(z);
  out.insert(out.end(), g.begin(), g.end());
  return out;
}

ModelParams ModelParams::from_flat(const PriorSpec& spec, std::span<const double> flat) {
  if (flat.size() != spec.dimension()) throw std::invalid_argument("ModelParams: wrong flat length");
  ModelParams u;
  const auto nz = spec.params.size();
  u.z.assign(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(nz));
  u.g.assign(flat.begin() + static_cast<std::ptrdiff_t>(nz), flat.end());
  return u;
}

double ModelParams::sup_norm() const {
  double s = 0.0;
  for (double v : z) s = std::max(s, std::abs(v));
  for (double v : g) s = std::max(s, std::abs(v));
  return s;
}

ModelParams sample_prior(const PriorSpec& spec, Rng& rng) {
  ModelParams u;
  for (const ParamPrior& p : spec.params) {
    u.z.push_back(std::visit(overloaded{[&](const UniformLaw& l) {
                                          return std::uniform_real_distribution<double>(l.lo, l.hi)(rng);
                                        },
                                        [&](const NormalLaw& l) {
                                          return std::normal_distribution<double>(l.mean, l.sd)(rng);
                                        }},
                             p.law));
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double c : spec.field.stddevs) u.g.push_back(c * normal(rng));
  return u;
}

double log_prior_density(const PriorSpec& spec, const ModelParams& u) {
  if (u.z.size() != spec.params.size() || u.g.size() != spec.field.stddevs.size()) {
    throw std::invalid_argument("log_prior_density: parameter layout does not match prior");
  }
  double lp = 0.0;
  for (std::size_t i = 0; i < spec.params.size(); ++i) {
    const double v = u.z[i];
    lp += std::visit(overloaded{[&](const UniformLaw& l) {
                                  if (!(v >= l.lo && v <= l.hi)) return -std::numeric_limits<double>::infinity();
                                  return -std::log(l.hi - l.lo);
                                },
                                [&](const NormalLaw& l) {
                                  const double d = (v - l.mean) / l.sd;
                                  return -0.5 * d * d - std::log(l.sd);
                                }},
                     spec.params[i].law);
  }
  for (std::size_t i = 0; i < u.g.size(); ++i) {
    const double c = spec.field.stddevs[i];
    const double d = u.g[i] / c;
    lp += -0.5 * d * d - std::log(c);
  }
  return lp;
}

double SineBasis::operator()(std::size_t i, double x, double y) const {
  const Mode& m = modes.at(i);
  return std::sin(m.k * kPi * (x - x_lo) / x_len) * std::sin(m.l * kPi * (y - y_lo) / y_len);
}

SineBasis tensor_sine_basis(const Grid& grid, int n_modes, double decay) {
  if (grid.dim() != 2) throw std::invalid_argument("tensor_sine_basis: needs a 2D grid");
  if (n_modes < 1) throw std::invalid_argument("tensor_sine_basis: n_modes must be >= 1");
  SineBasis basis;
  basis.x_lo = grid.x_axis().lo;
  basis.x_len = grid.x_axis().length();
  basis.y_lo = grid.y_axis().lo;
  basis.y_len = grid.y_axis().length();
  std::vector<SineBasis::Mode> all;
  for (int k = 1; k <= n_modes; ++k) {
    for (int l = 1; l <= n_modes; ++l) {
      const double lambda =
          kPi * kPi * (k * k / (basis.x_len * basis.x_len) + l * l / (basis.y_len * basis.y_len));
      all.push_back({k, l, lambda, std::pow(lambda, -decay / 2.0)});
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const SineBasis::Mode& a, const SineBasis::Mode& b) { return a.eigenvalue < b.eigenvalue; });
  all.resize(static_cast<std::size_t>(n_modes));
  basis.modes = std::move(all);
  return basis;
}

double test3_basis(int i, double x, double y) {
  switch (i) {
    case 0: return std::sin(kPi * x);
    case 1: return std::sin(kPi * y);
    case 2: return std::cos(kPi * x) * std::cos(kPi * y);
    default: throw std::out_of_range("test3_basis: mode index must be 0, 1 or 2");
  }
}

double test3_gamma(int i) {
  switch (i) {
    case 0:
    case 1: return 1.0 / (kPi * kPi);
    case 2: return 1.0 / (2.0 * kPi * kPi);
    default: throw std::out_of_range("test3_gamma: mode index must be 0, 1 or 2");
  }
}

GrowthField evaluate_growth_field(const PriorSpec& spec, const ModelParams& u, const Grid& grid) {
  double base = spec.field.h0;
  if (const int ih = spec.find("h"); ih >= 0) base = u.z.at(static_cast<std::size_t>(ih));
  GrowthField h(grid, base);
  if (spec.field.basis == BasisKind::None || u.g.empty()) return h;

  SineBasis sine;
  if (spec.field.basis == BasisKind::TensorSine) {
    sine = tensor_sine_basis(grid, static_cast<int>(u.g.size()), spec.field.decay);
  }
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const double x = grid.xc(i);
      const double y = grid.yc(j);
      double sum = 0.0;
      for (std::size_t k = 0; k < u.g.size(); ++k) {
        const double phi = spec.field.basis == BasisKind::Test3 ? test3_basis(static_cast<int>(k), x, y)
                                                                : sine(k, x, y);
        sum += u.g[k] * phi;
      }
      h[grid.cell(i, j)] += sum;
    }
  }
  return h;
}

}  // namespace tumorinv
