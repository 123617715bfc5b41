#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tumorinv/grid.hpp"
#include "tumorinv/posterior.hpp"
#include "tumorinv/prior.hpp"

namespace tumorinv {

class McmcError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class InitialRule { PriorDraw, Fixed };

struct McmcConfig {
  int iterations = 1000;              ///< M
  double burn_in = 0.25;              ///< fraction of M discarded
  std::vector<double> proposal_sd;    ///< diagonal of Gamma^{1/2}, one per coordinate
  std::uint64_t seed = 0;
  InitialRule initial = InitialRule::PriorDraw;
  std::vector<double> u0;             ///< InitialRule::Fixed only
  bool keep_full_log = false;         ///< also record the burn-in phase

  /// Throws std::invalid_argument listing every violated constraint.
  void validate(std::size_t dimension) const;
  std::size_t burn_count() const;
  std::size_t sample_count() const { return static_cast<std::size_t>(iterations) - burn_count(); }
};

/// 0.1 x the prior standard deviation of each coordinate, times `factor / 0.1`.
std::vector<double> default_proposal_sd(const PriorSpec& prior, double factor = 0.1);

/// What the sampler needs from a posterior: a log density over flat vectors
/// and a way to draw starting points.
struct Target {
  std::size_t dimension = 0;
  std::function<double(std::span<const double>)> log_density;
  std::function<std::vector<double>(Rng&)> sample_initial;
  std::vector<std::string> names;
};

Target make_target(const Posterior& posterior);

/// A proposal the forward model could not evaluate; it was rejected.
struct FailedProposal {
  std::size_t iteration = 0;
  std::vector<double> proposal;
  std::string message;
};

struct ChainRecord {
  std::vector<double> state;
  double logpost = 0.0;
  bool accepted = false;
};

struct Chain {
  std::vector<ChainRecord> samples;  ///< post burn-in
  std::vector<ChainRecord> full_log; ///< every iteration, if requested
  std::size_t iterations = 0;
  std::size_t accepted = 0;
  std::uint64_t seed = 0;
  std::vector<FailedProposal> failures;
  std::vector<std::string> warnings;

  double acceptance_rate() const {
    return iterations ? static_cast<double>(accepted) / static_cast<double>(iterations) : 0.0;
  }
};

/// Accept iff log(uniform) < delta. A non-finite delta of -inf never accepts.
bool accept_proposal(double delta_logpost, double uniform);

struct StepResult {
  std::vector<double> state;
  double logpost = 0.0;
  bool accepted = false;
  bool failed = false;
  std::string failure;
  std::vector<double> proposal;
};

/// One random-walk Metropolis-Hastings step. Always consumes one standard
/// normal per coordinate and then one uniform, so the random stream does not
/// depend on the outcome. A SolverError or LinearSolveError at the proposal is
/// treated as log density -inf.
StepResult mh_step(std::span<const double> state, double logpost, const McmcConfig& config, Rng& rng,
                   const Target& target);

Chain run_chain(const McmcConfig& config, const Target& target);

std::vector<double> posterior_mean(const Chain& chain);

struct RunEnsemble {
  std::vector<Chain> chains;
  std::vector<std::vector<double>> means;  ///< u-bar^(k)
  std::vector<double> ensemble_mean;
};

/// K chains with seeds config.seed + k, run on up to `threads` workers
/// (0 = hardware concurrency).
RunEnsemble run_ensemble(const McmcConfig& config, const Target& target, int runs, int threads = 0);

/// Per-coordinate (1/K) sum_k (u-bar^(k) - truth)^2.
std::vector<double> mse_over_runs(const RunEnsemble& ensemble, std::span<const double> truth);

/// (1/K) sum_k |h-bar^(k) - h*|^2_{L2}, by midpoint quadrature on the grid.
double field_mse(const RunEnsemble& ensemble, const PriorSpec& prior, const ModelParams& truth, const Grid& grid);

/// Header "iter,logpost,accepted,<names>". Iteration numbers count from the
/// first post burn-in step.
void write_chain_csv(const std::filesystem::path& path, const Chain& chain, std::span<const std::string> names,
                     std::size_t first_iteration);

/// Rows: one per run, then "mean", "truth", "mse".
void write_ensemble_csv(const std::filesystem::path& path, const RunEnsemble& ensemble,
                        std::span<const std::string> names, std::span<const double> truth);

}  // namespace tumorinv
