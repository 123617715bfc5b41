#include "tumorinv/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "tumorinv/linear_solvers.hpp"
#include "tumorinv/mcmc.hpp"

namespace tumorinv {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

std::string cell_tag(std::size_t c) { return "cell" + std::to_string(c); }

/// Tracks written files and flushes manifest.txt, also on failure.
class Manifest {
 public:
  explicit Manifest(fs::path dir) : dir_(std::move(dir)) {}
  ~Manifest() {
    try {
      write();
    } catch (...) {
    }
  }

  fs::path add(const fs::path& relative) {
    files_.push_back(relative);
    return dir_ / relative;
  }
  const std::vector<fs::path>& files() const { return files_; }

  void write() const {
    std::ofstream out(dir_ / "manifest.txt");
    for (const fs::path& f : files_) out << f.generic_string() << '\n';
  }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
};

fs::path prepare_directory(const ExperimentConfig& config) {
  const fs::path dir = config.output / config.id;
  for (const char* sub : {"data", "chains", "tables", "fields"}) fs::create_directories(dir / sub);
  return dir;
}

void say(const RunOptions& options, const std::string& line) {
  if (options.log) *options.log << line << std::endl;
}

void write_data(Manifest& manifest, const std::string& tag, const SyntheticData& data, ObservationMode mode,
                const NoiseModel& noise) {
  const fs::path rel = fs::path("data") / (tag + ".dat");
  write_observation_file(manifest.add(rel), data.noisy, mode, noise);
  write_observation_file(manifest.add(fs::path(rel.string() + ".clean")), data.clean, mode, noise);
}

void write_field_csv(const fs::path& path, const Grid& grid, const GrowthField& mean, const GrowthField& truth) {
  std::ofstream out = open_csv(path);
  out << "x,y,h_mean,h_true,difference\n";
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const std::size_t c = grid.cell(i, j);
      out << grid.xc(i) << ',' << grid.yc(j) << ',' << mean[c] << ',' << truth[c] << ',' << mean[c] - truth[c]
          << '\n';
    }
  }
}

}  // namespace

ExperimentConfig apply_options(ExperimentConfig config, const RunOptions& options) {
  if (options.seed) config.mcmc.seed = *options.seed;
  if (options.out) config.output = *options.out;
  if (options.paper_scale) {
    config.mcmc.iterations = config.mcmc.paper_iterations;
    config.mcmc.runs = config.mcmc.paper_runs;
  }
  return config;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 finaliser over a combination of the three inputs
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1) + 0xbf58476d1ce4e5b9ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<SweepCell> expand_sweep(const ExperimentConfig& config) {
  std::vector<SweepCell> cells;
  switch (config.sweep.parameter) {
    case SweepParameter::None:
      cells.push_back({config.observation.sigma, config.solver.m, config.solver.m});
      break;
    case SweepParameter::Sigma:
      for (double s : config.sweep.values) cells.push_back({{s}, config.solver.m, s});
      break;
    case SweepParameter::M:
      for (double m : config.sweep.values) cells.push_back({config.observation.sigma, m, m});
      break;
  }
  return cells;
}

NoiseModel cell_noise(const ExperimentConfig& config, const SweepCell& cell) {
  NoiseModel noise;
  for (double s : cell.sigma) noise.variances.push_back(s * s);
  noise.seed = derive_seed(config.mcmc.seed, 0, 0);
  return noise;
}

void write_histogram_csv(const fs::path& path, const std::vector<double>& samples, int bins) {
  if (samples.empty()) throw std::invalid_argument("write_histogram_csv: no samples");
  if (bins < 1) throw std::invalid_argument("write_histogram_csv: bins must be >= 1");
  auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  const double width = (hi - lo) / bins;
  for (double v : samples) {
    const int b = std::min(bins - 1, static_cast<int>((v - lo) / width));
    ++counts[static_cast<std::size_t>(b)];
  }
  std::ofstream out = open_csv(path);
  out << "bin_lo,bin_hi,count\n";
  for (int b = 0; b < bins; ++b) {
    out << lo + b * width << ',' << (b + 1 == bins ? hi : lo + (b + 1) * width) << ',' << counts[b] << '\n';
  }
}

ExperimentReport run_experiment(const ExperimentConfig& base, const RunOptions& options) {
  const auto start = Clock::now();
  const ExperimentConfig config = apply_options(base, options);
  config.validate();

  ExperimentReport report;
  report.id = config.id;
  report.directory = prepare_directory(config);
  report.names = config.prior.names();
  report.iterations = config.mcmc.iterations;
  report.runs = config.mcmc.runs;
  Manifest manifest(report.directory);

  {
    std::ofstream out(manifest.add("config.cfg"));
    out << to_text(config);
  }

  const std::vector<SweepCell> cells = expand_sweep(config);
  const std::vector<double> truth = config.truth.flatten();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto cell_start = Clock::now();
    const SweepCell& cell = cells[c];
    const std::string tag = cell_tag(c);
    ForwardMap map = config.forward_map();
    map.solver.m = cell.m;
    const NoiseModel noise = cell_noise(config, cell);
    const SyntheticData data = synthesize_data(map, config.truth, noise);
    write_data(manifest, tag, data, map.observation.mode, noise);
    say(options, tag + ": m=" + std::to_string(cell.m) + " sigma=" + std::to_string(cell.sigma.front()) +
                     " data written");
    if (options.dry_run) continue;

    const Posterior posterior = Posterior::from_forward_map(map, data.noisy, noise);
    McmcConfig mc;
    mc.iterations = config.mcmc.iterations;
    mc.burn_in = config.mcmc.burn_in;
    mc.proposal_sd = config.mcmc.proposal_sd.empty() ? default_proposal_sd(config.prior, config.mcmc.proposal_scale)
                                                     : config.mcmc.proposal_sd;
    mc.seed = derive_seed(config.mcmc.seed, 1, 0);  // run k of every cell uses the same stream
    const RunEnsemble ens = run_ensemble(mc, make_target(posterior), config.mcmc.runs, config.mcmc.threads);

    ReportRow row;
    row.value = cell.value;
    row.sigma = cell.sigma.front();
    row.m = cell.m;
    row.mean = ens.ensemble_mean;
    row.mse = mse_over_runs(ens, truth);
    if (config.prior.field.basis != BasisKind::None) {
      row.field_mse = field_mse(ens, config.prior, config.truth, map.grid);
    }
    for (std::size_t k = 0; k < ens.chains.size(); ++k) {
      const Chain& chain = ens.chains[k];
      row.acceptance += chain.acceptance_rate() / static_cast<double>(ens.chains.size());
      row.solver_failures += chain.failures.size();
      write_chain_csv(manifest.add(fs::path("chains") / (tag + "_run" + std::to_string(k) + ".csv")), chain,
                      report.names, mc.burn_count());
      for (const std::string& w : chain.warnings) say(options, tag + " run " + std::to_string(k) + ": " + w);
    }
    write_ensemble_csv(manifest.add(fs::path("tables") / ("ensemble_" + tag + ".csv")), ens, report.names, truth);
    for (std::size_t i = 0; i < report.names.size(); ++i) {
      std::vector<double> pooled;
      for (const Chain& chain : ens.chains) {
        for (const ChainRecord& r : chain.samples) pooled.push_back(r.state[i]);
      }
      write_histogram_csv(manifest.add(fs::path("tables") / ("hist_" + tag + "_" + report.names[i] + ".csv")),
                          pooled);
    }
    if (row.field_mse) {
      const GrowthField mean = evaluate_growth_field(config.prior, ModelParams::from_flat(config.prior, row.mean),
                                                     map.grid);
      const GrowthField h_true = evaluate_growth_field(config.prior, config.truth, map.grid);
      write_field_csv(manifest.add(fs::path("fields") / ("h_" + tag + ".csv")), map.grid, mean, h_true);
    }
    row.seconds = seconds_since(cell_start);

    std::ostringstream line;
    line << tag << ": acceptance " << std::setprecision(3) << row.acceptance;
    for (std::size_t i = 0; i < report.names.size(); ++i) {
      line << "  E(" << report.names[i] << ")=" << std::setprecision(5) << row.mean[i] << " MSE=" << row.mse[i];
    }
    if (row.field_mse) line << "  MSE(h)=" << *row.field_mse;
    line << "  [" << std::setprecision(3) << row.seconds << " s]";
    say(options, line.str());
    report.rows.push_back(std::move(row));
  }

  if (!options.dry_run) {
    std::ofstream out = open_csv(manifest.add(fs::path("tables") / "mse.csv"));
    out << "cell,sigma,m,acceptance,solver_failures";
    for (const std::string& n : report.names) out << ",E(" << n << ')';
    for (const std::string& n : report.names) out << ",MSE(" << n << ')';
    if (config.prior.field.basis != BasisKind::None) out << ",MSE(h)";
    out << '\n';
    for (std::size_t c = 0; c < report.rows.size(); ++c) {
      const ReportRow& r = report.rows[c];
      out << c << ',' << r.sigma << ',' << r.m << ',' << r.acceptance << ',' << r.solver_failures;
      for (double v : r.mean) out << ',' << v;
      for (double v : r.mse) out << ',' << v;
      if (r.field_mse) out << ',' << *r.field_mse;
      out << '\n';
    }
  }

  report.seconds = seconds_since(start);
  report.files = manifest.files();
  manifest.write();
  return report;
}

ExperimentReport run_forward(const ExperimentConfig& base, const RunOptions& options) {
  const auto start = Clock::now();
  const ExperimentConfig config = apply_options(base, options);
  config.validate();

  ExperimentReport report;
  report.id = config.id;
  report.directory = prepare_directory(config);
  Manifest manifest(report.directory);

  const ForwardMap map = config.forward_map();
  std::vector<double> times = config.observation.op.times;
  if (times.back() < config.solver.t_final - 1e-12) times.push_back(config.solver.t_final);
  const ForwardSolution sol =
      solve_forward(map.grid, map.initial_density(config.truth), map.growth(config.truth), config.solver, times);

  std::ofstream out = open_csv(manifest.add(fs::path("tables") / "forward.csv"));
  out << "time,mass,max_density,radius_0.5\n";
  const DensityField rho0 = map.initial_density(config.truth);
  write_snapshot(manifest.add(fs::path("fields") / "rho_0.dat"), map.grid, rho0, 0.0);
  manifest.add(fs::path("fields") / "rho_0.dat.meta");
  const bool two_d = map.grid.dim() == 2;
  double cx = config.initial.cx;
  double cy = config.initial.cy;
  if (const int k = config.prior.find("c1"); k >= 0) cx = config.truth.z[static_cast<std::size_t>(k)];
  if (const int k = config.prior.find("c2"); k >= 0) cy = config.truth.z[static_cast<std::size_t>(k)];
  out << 0.0 << ',' << total_mass(map.grid, rho0) << ',' << max_value(rho0) << ','
      << (two_d ? level_set_radius(map.grid, rho0, 0.5, cx, cy) : 0.0) << '\n';
  for (std::size_t k = 0; k < sol.snapshots.size(); ++k) {
    const Snapshot& s = sol.snapshots[k];
    const std::string name = "rho_" + std::to_string(k + 1) + ".dat";
    write_snapshot(manifest.add(fs::path("fields") / name), map.grid, s.density, s.time);
    manifest.add(fs::path("fields") / (name + ".meta"));
    out << s.time << ',' << total_mass(map.grid, s.density) << ',' << max_value(s.density) << ','
        << (two_d ? level_set_radius(map.grid, s.density, 0.5, cx, cy) : 0.0) << '\n';
  }
  const SolverDiagnostics& d = sol.diagnostics;
  say(options, "forward: " + std::to_string(d.steps) + " steps, " + std::to_string(d.krylov_iterations) +
                   " CG iterations, " + std::to_string(d.clamp_events) + " clamp events, " +
                   std::to_string(d.courant_advisories) + " Courant advisories" +
                   (d.boundary_warning ? ", density reached the boundary" : ""));

  report.seconds = seconds_since(start);
  report.files = manifest.files();
  return report;
}

ExperimentReport run_synth(const ExperimentConfig& base, const RunOptions& options) {
  RunOptions opts = options;
  opts.dry_run = true;
  return run_experiment(base, opts);
}

ConvergenceReport run_m_convergence(const ExperimentConfig& base, const std::vector<double>& m_list,
                                    const RunOptions& options) {
  const auto start = Clock::now();
  const ExperimentConfig config = apply_options(base, options);
  config.validate();
  if (m_list.size() < 2) throw std::invalid_argument("run_m_convergence: need at least two values of m");
  if (!std::is_sorted(m_list.begin(), m_list.end())) {
    throw std::invalid_argument("run_m_convergence: m list must be ascending");
  }
  if (config.mconv.samples < 100) throw std::invalid_argument("run_m_convergence: need at least 100 prior samples");

  ConvergenceReport report;
  report.directory = prepare_directory(config);
  Manifest manifest(report.directory);

  // data at the largest m
  ForwardMap map = config.forward_map();
  map.solver.m = m_list.back();
  const SweepCell cell{config.observation.sigma, m_list.back(), m_list.back()};
  const NoiseModel noise = cell_noise(config, cell);
  const SyntheticData data = synthesize_data(map, config.truth, noise);
  write_data(manifest, "mconv", data, map.observation.mode, noise);

  Rng rng(derive_seed(config.mcmc.seed, 3, 0));
  std::vector<ModelParams> draws;
  for (int s = 0; s < config.mconv.samples; ++s) draws.push_back(sample_prior(config.prior, rng));

  std::vector<std::vector<double>> phi(m_list.size());
  std::vector<DensityField> final_density;
  for (std::size_t i = 0; i < m_list.size(); ++i) {
    ForwardMap mi = config.forward_map();
    mi.solver.m = m_list[i];
    const Posterior post = Posterior::from_forward_map(mi, data.noisy, noise);
    std::size_t failures = 0;
    for (const ModelParams& u : draws) {
      double value = std::numeric_limits<double>::infinity();
      try {
        value = post.potential(u).phi;
      } catch (const SolverError&) {
        ++failures;
      } catch (const LinearSolveError&) {
        ++failures;
      }
      phi[i].push_back(value);
    }
    const std::vector<double> t_final{config.solver.t_final};
    final_density.push_back(
        solve_forward(mi.grid, mi.initial_density(config.truth), mi.growth(config.truth), mi.solver, t_final)
            .snapshots.back()
            .density);
    say(options, "mconv: m=" + std::to_string(m_list[i]) + " potentials done" +
                     (failures ? ", " + std::to_string(failures) + " solver failures" : ""));
  }

  for (std::size_t i = 0; i + 1 < m_list.size(); ++i) {
    HellingerReport h = hellinger_estimate(phi[i], phi[i + 1], config.mconv.bootstrap, derive_seed(config.mcmc.seed, 4, i));
    h.m1 = m_list[i];
    h.m2 = m_list[i + 1];
    report.hellinger.push_back(h);
    report.l1.push_back({m_list[i], m_list[i + 1], l1_distance(map.grid, final_density[i], final_density[i + 1])});
    std::ostringstream line;
    line << "mconv: dH(" << h.m1 << ", " << h.m2 << ") = " << h.distance << " +- " << h.standard_error
         << "  L1 = " << report.l1.back().l1;
    say(options, line.str());
  }

  write_hellinger_csv(manifest.add(fs::path("tables") / "hellinger.csv"), report.hellinger);
  {
    std::ofstream out = open_csv(manifest.add(fs::path("tables") / "l1.csv"));
    out << "m1,m2,L1\n";
    for (const L1Row& r : report.l1) out << r.m1 << ',' << r.m2 << ',' << r.l1 << '\n';
  }
  {
    std::ofstream out = open_csv(manifest.add(fs::path("tables") / "potentials.csv"));
    out << "sample";
    for (double m : m_list) out << ",phi_m" << m;
    out << '\n';
    for (std::size_t s = 0; s < draws.size(); ++s) {
      out << s;
      for (const auto& p : phi) out << ',' << p[s];
      out << '\n';
    }
  }
  report.seconds = seconds_since(start);
  report.files = manifest.files();
  return report;
}

}  // namespace tumorinv
