#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <stdexcept>

#include "tumorinv/posterior.hpp"

namespace tumorinv {

namespace {

struct Estimate {
  double distance = 0.0;
  double log_z1 = 0.0;
  double log_z2 = 0.0;
};

// d^2 = 1/2 sum_s (sqrt(p1_s) - sqrt(p2_s))^2 with p_i the self-normalised
// weights exp(-Phi_i) / sum exp(-Phi_i). Equal to 1 - mean(exp(-(Phi1+Phi2)/2)) / sqrt(Z1 Z2).
Estimate estimate(std::span<const double> phi1, std::span<const double> phi2, std::span<const std::size_t> idx) {
  double c1 = std::numeric_limits<double>::infinity();
  double c2 = std::numeric_limits<double>::infinity();
  for (std::size_t s : idx) {
    c1 = std::min(c1, phi1[s]);
    c2 = std::min(c2, phi2[s]);
  }
  if (!std::isfinite(c1) || !std::isfinite(c2)) {
    throw std::runtime_error(
        "hellinger_estimate: every importance weight is zero; recentre the potentials (log-sum-exp)");
  }
  double s1 = 0.0;
  double s2 = 0.0;
  for (std::size_t s : idx) {
    s1 += std::exp(-(phi1[s] - c1));
    s2 += std::exp(-(phi2[s] - c2));
  }
  double d2 = 0.0;
  for (std::size_t s : idx) {
    const double a = std::sqrt(std::exp(-(phi1[s] - c1)) / s1);
    const double b = std::sqrt(std::exp(-(phi2[s] - c2)) / s2);
    d2 += (a - b) * (a - b);
  }
  d2 = std::clamp(0.5 * d2, 0.0, 1.0);
  const double n = static_cast<double>(idx.size());
  return {std::sqrt(d2), -c1 + std::log(s1 / n), -c2 + std::log(s2 / n)};
}

}  // namespace

HellingerReport hellinger_estimate(std::span<const double> phi1, std::span<const double> phi2, int bootstrap,
                                   std::uint64_t seed) {
  if (phi1.size() != phi2.size()) throw std::invalid_argument("hellinger_estimate: sample counts differ");
  const std::size_t n = phi1.size();
  if (n < 100) throw std::invalid_argument("hellinger_estimate: needs at least 100 prior samples");
  if (bootstrap < 200) throw std::invalid_argument("hellinger_estimate: needs at least 200 bootstrap resamples");
  for (std::size_t s = 0; s < n; ++s) {
    if (std::isnan(phi1[s]) || std::isnan(phi2[s])) throw std::invalid_argument("hellinger_estimate: NaN potential");
  }

  std::vector<std::size_t> idx(n);
  for (std::size_t s = 0; s < n; ++s) idx[s] = s;
  const Estimate full = estimate(phi1, phi2, idx);

  HellingerReport report;
  report.samples = n;
  report.distance = full.distance;
  report.log_z1 = full.log_z1;
  report.log_z2 = full.log_z2;
  report.z1 = std::exp(full.log_z1);
  report.z2 = std::exp(full.log_z2);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  double sum = 0.0;
  double sum2 = 0.0;
  for (int b = 0; b < bootstrap; ++b) {
    for (std::size_t& s : idx) s = pick(rng);
    double d = 0.0;
    try {
      d = estimate(phi1, phi2, idx).distance;
    } catch (const std::runtime_error&) {
      d = 1.0;  // resample drew only zero-weight points
    }
    sum += d;
    sum2 += d * d;
  }
  const double mean = sum / bootstrap;
  report.standard_error = std::sqrt(std::max(0.0, (sum2 - bootstrap * mean * mean) / (bootstrap - 1)));
  return report;
}

void write_hellinger_csv(const std::filesystem::path& path, std::span<const HellingerReport> reports) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "m1,m2,N,Z1,Z2,dH,SE\n";
  for (const HellingerReport& r : reports) {
    out << r.m1 << ',' << r.m2 << ',' << r.samples << ',' << r.z1 << ',' << r.z2 << ',' << r.distance << ','
        << r.standard_error << '\n';
  }
}

}  // namespace tumorinv
