#include "tumorinv/mcmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <thread>

#include "tumorinv/forward_solver.hpp"
#include "tumorinv/linear_solvers.hpp"

namespace tumorinv {

void McmcConfig::validate(std::size_t dimension) const {
  std::vector<std::string> errors;
  if (iterations < 10) errors.push_back("mcmc: iterations must be >= 10");
  if (!(burn_in >= 0.0 && burn_in < 1.0)) errors.push_back("mcmc: burn-in fraction must lie in [0, 1)");
  if (proposal_sd.size() != dimension) {
    errors.push_back("mcmc: proposal has " + std::to_string(proposal_sd.size()) + " entries, expected " +
                     std::to_string(dimension));
  }
  for (double s : proposal_sd) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      errors.push_back("mcmc: proposal entries must be > 0");
      break;
    }
  }
  if (initial == InitialRule::Fixed && u0.size() != dimension) {
    errors.push_back("mcmc: fixed initial state has the wrong dimension");
  }
  if (!errors.empty()) {
    std::string msg;
    for (const std::string& e : errors) msg += (msg.empty() ? "" : "; ") + e;
    throw std::invalid_argument(msg);
  }
}

std::size_t McmcConfig::burn_count() const {
  // ceil with a guard against 0.25 * M landing a hair above an integer
  const double b = burn_in * iterations;
  return static_cast<std::size_t>(std::ceil(b - 1e-9 * std::max(1.0, b)));
}

std::vector<double> default_proposal_sd(const PriorSpec& prior, double factor) {
  std::vector<double> sd = prior.scales();
  for (double& s : sd) s *= factor;
  return sd;
}

Target make_target(const Posterior& posterior) {
  Target t;
  t.dimension = posterior.prior().dimension();
  t.names = posterior.prior().names();
  t.log_density = [&posterior](std::span<const double> u) { return posterior.log_density(u); };
  t.sample_initial = [&posterior](Rng& rng) { return sample_prior(posterior.prior(), rng).flatten(); };
  return t;
}

bool accept_proposal(double delta_logpost, double uniform) {
  if (std::isnan(delta_logpost)) return false;
  return std::log(uniform) < delta_logpost;
}

StepResult mh_step(std::span<const double> state, double logpost, const McmcConfig& config, Rng& rng,
                   const Target& target) {
  if (!std::isfinite(logpost)) throw McmcError("mh_step: current log-posterior is not finite");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  StepResult r;
  r.proposal.resize(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) r.proposal[i] = state[i] + config.proposal_sd[i] * normal(rng);
  const double uniform = unif(rng);

  double proposed = -std::numeric_limits<double>::infinity();
  try {
    proposed = target.log_density(r.proposal);
  } catch (const SolverError& e) {
    r.failed = true;
    r.failure = e.what();
  } catch (const LinearSolveError& e) {
    r.failed = true;
    r.failure = e.what();
  }

  r.accepted = accept_proposal(proposed - logpost, uniform);
  if (r.accepted) {
    r.state = r.proposal;
    r.logpost = proposed;
  } else {
    r.state.assign(state.begin(), state.end());
    r.logpost = logpost;
  }
  return r;
}

namespace {

double safe_log_density(const Target& target, std::span<const double> u) {
  try {
    return target.log_density(u);
  } catch (const SolverError&) {
  } catch (const LinearSolveError&) {
  }
  return -std::numeric_limits<double>::infinity();
}

}  // namespace

Chain run_chain(const McmcConfig& config, const Target& target) {
  config.validate(target.dimension);
  Rng rng(config.seed);

  std::vector<double> state;
  double logpost = -std::numeric_limits<double>::infinity();
  if (config.initial == InitialRule::Fixed) {
    state = config.u0;
    logpost = safe_log_density(target, state);
    if (!std::isfinite(logpost)) throw McmcError("run_chain: fixed initial state has log-posterior -inf");
  } else {
    for (int attempt = 0; attempt < 100 && !std::isfinite(logpost); ++attempt) {
      state = target.sample_initial(rng);
      logpost = safe_log_density(target, state);
    }
    if (!std::isfinite(logpost)) {
      throw McmcError("run_chain: no prior draw with finite log-posterior after 100 attempts");
    }
  }

  Chain chain;
  chain.seed = config.seed;
  chain.iterations = static_cast<std::size_t>(config.iterations);
  const std::size_t burn = config.burn_count();
  chain.samples.reserve(config.sample_count());
  for (std::size_t it = 0; it < chain.iterations; ++it) {
    StepResult step = mh_step(state, logpost, config, rng, target);
    if (step.failed) chain.failures.push_back({it, std::move(step.proposal), std::move(step.failure)});
    if (step.accepted) ++chain.accepted;
    state = std::move(step.state);
    logpost = step.logpost;
    ChainRecord rec{state, logpost, step.accepted};
    if (config.keep_full_log) chain.full_log.push_back(rec);
    if (it >= burn) chain.samples.push_back(std::move(rec));
  }

  if (chain.acceptance_rate() > 0.99) {
    chain.warnings.push_back("acceptance rate " + std::to_string(chain.acceptance_rate()) +
                             " is close to 1; the proposal is probably too small");
  }
  if (!chain.failures.empty()) {
    chain.warnings.push_back(std::to_string(chain.failures.size()) + " proposals rejected after solver failures");
  }
  return chain;
}

std::vector<double> posterior_mean(const Chain& chain) {
  if (chain.samples.empty()) throw McmcError("posterior_mean: empty chain");
  std::vector<double> mean(chain.samples.front().state.size(), 0.0);
  for (const ChainRecord& s : chain.samples) {
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += s.state[i];
  }
  for (double& v : mean) v /= static_cast<double>(chain.samples.size());
  return mean;
}

RunEnsemble run_ensemble(const McmcConfig& config, const Target& target, int runs, int threads) {
  if (runs < 1) throw std::invalid_argument("run_ensemble: need at least one run");
  config.validate(target.dimension);
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, runs);

  RunEnsemble ens;
  ens.chains.resize(static_cast<std::size_t>(runs));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int k = next++; k < runs; k = next++) {
      try {
        McmcConfig c = config;
        c.seed = config.seed + static_cast<std::uint64_t>(k);
        ens.chains[static_cast<std::size_t>(k)] = run_chain(c, target);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  ens.ensemble_mean.assign(target.dimension, 0.0);
  for (const Chain& c : ens.chains) {
    ens.means.push_back(posterior_mean(c));
    for (std::size_t i = 0; i < target.dimension; ++i) ens.ensemble_mean[i] += ens.means.back()[i];
  }
  for (double& v : ens.ensemble_mean) v /= runs;
  return ens;
}

std::vector<double> mse_over_runs(const RunEnsemble& ensemble, std::span<const double> truth) {
  if (ensemble.means.empty()) throw McmcError("mse_over_runs: empty ensemble");
  std::vector<double> mse(truth.size(), 0.0);
  for (const std::vector<double>& m : ensemble.means) {
    if (m.size() != truth.size()) throw std::invalid_argument("mse_over_runs: dimension mismatch");
    for (std::size_t i = 0; i < truth.size(); ++i) mse[i] += (m[i] - truth[i]) * (m[i] - truth[i]);
  }
  for (double& v : mse) v /= static_cast<double>(ensemble.means.size());
  return mse;
}

double field_mse(const RunEnsemble& ensemble, const PriorSpec& prior, const ModelParams& truth, const Grid& grid) {
  if (ensemble.means.empty()) throw McmcError("field_mse: empty ensemble");
  const GrowthField h_true = evaluate_growth_field(prior, truth, grid);
  double total = 0.0;
  for (const std::vector<double>& m : ensemble.means) {
    const GrowthField h = evaluate_growth_field(prior, ModelParams::from_flat(prior, m), grid);
    double sum = 0.0;
    for (std::size_t c = 0; c < h.values.size(); ++c) {
      const double d = h.values[c] - h_true.values[c];
      sum += d * d;
    }
    total += sum * grid.cell_volume();
  }
  return total / static_cast<double>(ensemble.means.size());
}

void write_chain_csv(const std::filesystem::path& path, const Chain& chain, std::span<const std::string> names,
                     std::size_t first_iteration) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "iter,logpost,accepted";
  for (const std::string& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t s = 0; s < chain.samples.size(); ++s) {
    const ChainRecord& r = chain.samples[s];
    out << first_iteration + s << ',' << r.logpost << ',' << (r.accepted ? 1 : 0);
    for (double v : r.state) out << ',' << v;
    out << '\n';
  }
}

void write_ensemble_csv(const std::filesystem::path& path, const RunEnsemble& ensemble,
                        std::span<const std::string> names, std::span<const double> truth) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "run,seed,acceptance";
  for (const std::string& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t k = 0; k < ensemble.means.size(); ++k) {
    out << k << ',' << ensemble.chains[k].seed << ',' << ensemble.chains[k].acceptance_rate();
    for (double v : ensemble.means[k]) out << ',' << v;
    out << '\n';
  }
  out << "mean,,";
  for (double v : ensemble.ensemble_mean) out << ',' << v;
  out << "\ntruth,,";
  for (double v : truth) out << ',' << v;
  out << "\nmse,,";
  for (double v : mse_over_runs(ensemble, truth)) out << ',' << v;
  out << '\n';
}

}  // namespace tumorinv
