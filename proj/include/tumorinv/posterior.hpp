#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "tumorinv/observation.hpp"
#include "tumorinv/prior.hpp"

namespace tumorinv {

/// Phi(u, y) = misfit - offset with
///   misfit = 1/2 |Gamma^{-1/2}(G(u) - y)|^2,  offset = 1/2 |Gamma^{-1/2} y|^2.
struct PotentialEvaluation {
  double phi = 0.0;
  double misfit = 0.0;
  double offset = 0.0;
  double seconds = 0.0;  ///< forward-solve wall time (0 on a cache hit)
};

/// 1/2 sum_i r_i^2 / variance_i
double half_weighted_norm2(std::span<const double> r, const NoiseModel& noise);

/// u -> G(u), the noise-free observation vector.
using ForwardModel = std::function<std::vector<double>(const ModelParams&)>;

/// Unnormalised posterior over u for fixed data y.
///
/// Forward evaluations are cached by the parameter vector rounded to 16
/// significant digits. All const members are safe to call concurrently.
class Posterior {
 public:
  Posterior(PriorSpec prior, ForwardModel forward, std::vector<double> data, NoiseModel noise,
            std::size_t cache_capacity = 4096);

  /// Wraps a PDE forward map.
  static Posterior from_forward_map(const ForwardMap& map, const ObservationVector& y, const NoiseModel& noise);

  const PriorSpec& prior() const { return prior_; }
  const std::vector<double>& data() const { return data_; }
  const NoiseModel& noise() const { return noise_; }

  /// G(u) through the cache. Solver failures propagate as SolverError.
  std::vector<double> forward(const ModelParams& u) const;

  PotentialEvaluation potential(const ModelParams& u) const;

  /// log mu0(u) - misfit(u). Returns -inf outside the prior support without
  /// calling the forward model.
  double log_unnormalized(const ModelParams& u) const;

  /// log_unnormalized on the flattened parameter vector.
  double log_density(std::span<const double> flat) const;

  std::uint64_t cache_hits() const;
  std::uint64_t cache_misses() const;

 private:
  struct Cache;

  PriorSpec prior_;
  ForwardModel forward_;
  std::vector<double> data_;
  NoiseModel noise_;
  double offset_ = 0.0;
  std::shared_ptr<Cache> cache_;
};

/// Prior-sample estimate of the Hellinger distance between two posteriors
/// sharing the prior mu0 and the data y.
struct HellingerReport {
  double m1 = 0.0;
  double m2 = 0.0;
  std::size_t samples = 0;
  double z1 = 0.0;  ///< mean exp(-Phi_1)
  double z2 = 0.0;
  double log_z1 = 0.0;
  double log_z2 = 0.0;
  double distance = 0.0;
  double standard_error = 0.0;  ///< bootstrap
};

/// `phi1[s]`, `phi2[s]` are potentials at the same prior draws u_s. Each array
/// is recentred by its minimum before exponentiating. Requires N >= 100 and at
/// least 200 bootstrap resamples. Throws std::runtime_error if every weight of
/// either posterior is zero (all potentials infinite).
HellingerReport hellinger_estimate(std::span<const double> phi1, std::span<const double> phi2,
                                   int bootstrap = 200, std::uint64_t seed = 0);

/// CSV with header "m1,m2,N,Z1,Z2,dH,SE".
void write_hellinger_csv(const std::filesystem::path& path, std::span<const HellingerReport> reports);

}  // namespace tumorinv
