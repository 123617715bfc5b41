#include "tumorinv/observation.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace tumorinv {

std::string to_string(ObservationMode mode) {
  return mode == ObservationMode::FullGrid ? "full_grid" : "functionals";
}

double GaussianBump::operator()(double x, double y) const {
  const double dx = x - cx;
  const double dy = y - cy;
  return std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
}

void ObservationOperator::validate(double t_final) const {
  if (times.empty()) throw std::invalid_argument("observation: at least one time is required");
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (!(times[j] > 0.0) || times[j] > t_final * (1.0 + 1e-12)) {
      throw std::invalid_argument("observation: time " + std::to_string(times[j]) + " outside (0, T]");
    }
    if (j > 0 && !(times[j] > times[j - 1])) {
      throw std::invalid_argument("observation: times must be strictly increasing");
    }
  }
  if (mode == ObservationMode::Functionals) {
    if (bumps.empty()) throw std::invalid_argument("observation: functionals mode needs test functions");
    for (const GaussianBump& b : bumps) {
      if (!(b.width > 0.0)) throw std::invalid_argument("observation: bump width must be > 0");
    }
  }
}

std::size_t ObservationOperator::per_time(const Grid& grid) const {
  return mode == ObservationMode::FullGrid ? grid.cell_count() : bumps.size();
}

std::string to_string(BumpScale scale) {
  switch (scale) {
    case BumpScale::Peak: return "peak";
    case BumpScale::UnitMass: return "unit_mass";
    case BumpScale::CellSum: return "cell_sum";
  }
  return "?";
}

double ObservationOperator::amplitude(const Grid& grid, std::size_t k) const {
  const double w = bumps.at(k).width;
  switch (scale) {
    case BumpScale::Peak: return 1.0;
    case BumpScale::UnitMass: return grid.dim() == 2 ? 1.0 / (2.0 * std::numbers::pi * w * w)
                                                     : 1.0 / (std::sqrt(2.0 * std::numbers::pi) * w);
    case BumpScale::CellSum: return 1.0 / grid.cell_volume();
  }
  return 1.0;
}

double ObservationOperator::max_weight(const Grid& grid, std::size_t k) const {
  return mode == ObservationMode::FullGrid ? 1.0 : amplitude(grid, k);
}

std::vector<double> observe_density(const Grid& grid, const CellField& rho, const ObservationOperator& op) {
  if (op.mode == ObservationMode::FullGrid) return rho.values;
  std::vector<double> out;
  out.reserve(op.bumps.size());
  const double vol = grid.cell_volume();
  for (std::size_t k = 0; k < op.bumps.size(); ++k) {
    const GaussianBump& b = op.bumps[k];
    const double scale = op.amplitude(grid, k);
    double sum = 0.0;
    for (int j = 0; j < grid.ny(); ++j) {
      for (int i = 0; i < grid.nx(); ++i) {
        const double r = rho[grid.cell(i, j)];
        if (r != 0.0) sum += b(grid.xc(i), grid.yc(j)) * r;
      }
    }
    out.push_back(scale * sum * vol);
  }
  return out;
}

ObservationVector apply_observation(const Grid& grid, const ForwardSolution& solution,
                                    const ObservationOperator& op) {
  ObservationVector y;
  y.J = static_cast<int>(op.times.size());
  y.K = static_cast<int>(op.per_time(grid));
  y.values.reserve(static_cast<std::size_t>(y.J) * y.K);
  for (double t : op.times) {
    const Snapshot& snap = solution.at(t);
    const std::vector<double> obs = observe_density(grid, snap.density, op);
    y.values.insert(y.values.end(), obs.begin(), obs.end());
  }
  return y;
}

void NoiseModel::validate(std::size_t n) const {
  if (variances.empty()) throw std::invalid_argument("noise: no variance given");
  if (variances.size() != 1 && variances.size() != n) {
    throw std::invalid_argument("noise: variance list length does not match the observation vector");
  }
  for (double v : variances) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("noise: variances must be > 0");
  }
}

ObservationVector add_noise(const ObservationVector& clean, const NoiseModel& noise) {
  noise.validate(clean.size());
  ObservationVector y = clean;
  Rng rng(noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] += std::sqrt(noise.variance(i)) * normal(rng);
  return y;
}

DensityField ForwardMap::initial_density(const ModelParams& u) const {
  double cx = initial.cx;
  double cy = initial.cy;
  if (const int k = prior.find("c1"); k >= 0) cx = u.z.at(static_cast<std::size_t>(k));
  if (const int k = prior.find("c2"); k >= 0) cy = u.z.at(static_cast<std::size_t>(k));
  switch (initial.shape) {
    case InitialShape::Flower: return initial_density_flower(grid, cx, cy, initial.amplitude);
    case InitialShape::Disk: return initial_density_disk(grid, initial.radius2, initial.amplitude, cx, cy);
  }
  throw std::logic_error("unknown initial shape");
}

GrowthField ForwardMap::growth(const ModelParams& u) const { return evaluate_growth_field(prior, u, grid); }

ForwardSolution ForwardMap::solve(const ModelParams& u) const {
  return solve_forward(grid, initial_density(u), growth(u), solver, observation.times);
}

ObservationVector ForwardMap::operator()(const ModelParams& u) const {
  return apply_observation(grid, solve(u), observation);
}

SyntheticData synthesize_data(const ForwardMap& forward, const ModelParams& truth, const NoiseModel& noise) {
  SyntheticData data;
  data.solution = forward.solve(truth);
  data.clean = apply_observation(forward.grid, data.solution, forward.observation);
  data.noisy = add_noise(data.clean, noise);
  return data;
}

void write_observation_file(const std::filesystem::path& path, const ObservationVector& y,
                            ObservationMode mode, const NoiseModel& noise) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "mode=" << to_string(mode) << " J=" << y.J << " K=" << y.K << " sigma=";
  for (std::size_t i = 0; i < noise.variances.size(); ++i) {
    if (i) out << ',';
    out << std::sqrt(noise.variances[i]);
  }
  out << " seed=" << noise.seed << '\n';
  for (int j = 0; j < y.J; ++j) {
    for (int k = 0; k < y.K; ++k) out << j << ' ' << k << ' ' << y.values[y.index(j, k)] << '\n';
  }
}

ObservationFile read_observation_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string header;
  std::getline(in, header);
  ObservationFile file;
  std::istringstream hs(header);
  std::string token;
  while (hs >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "mode") {
      if (value == "full_grid") file.mode = ObservationMode::FullGrid;
      else if (value == "functionals") file.mode = ObservationMode::Functionals;
      else throw std::runtime_error("observation file: unknown mode " + value);
    } else if (key == "J") {
      file.y.J = std::stoi(value);
    } else if (key == "K") {
      file.y.K = std::stoi(value);
    } else if (key == "sigma") {
      std::istringstream vs(value);
      std::string item;
      while (std::getline(vs, item, ',')) file.sigmas.push_back(std::stod(item));
    } else if (key == "seed") {
      file.seed = std::stoull(value);
    }
  }
  file.y.values.assign(static_cast<std::size_t>(file.y.J) * file.y.K, 0.0);
  int j = 0;
  int k = 0;
  double v = 0.0;
  std::size_t count = 0;
  while (in >> j >> k >> v) {
    if (j < 0 || j >= file.y.J || k < 0 || k >= file.y.K) {
      throw std::runtime_error("observation file: index out of range");
    }
    file.y.values[file.y.index(j, k)] = v;
    ++count;
  }
  if (count != file.y.values.size()) throw std::runtime_error("observation file: wrong number of entries");
  return file;
}

}  // namespace tumorinv
