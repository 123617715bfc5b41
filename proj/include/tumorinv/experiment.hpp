#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tumorinv/config.hpp"
#include "tumorinv/posterior.hpp"

namespace tumorinv {

struct RunOptions {
  bool paper_scale = false;  ///< use mcmc.paper_iterations / paper_runs
  bool dry_run = false;      ///< echo config and synthesize data, no chains
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::ostream* log = nullptr;
};

/// Config with the command-line overrides applied.
ExperimentConfig apply_options(ExperimentConfig config, const RunOptions& options);

/// Deterministic per-stream seed from the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// One (sigma, m) combination of a sweep.
struct SweepCell {
  std::vector<double> sigma;  ///< a sigma sweep replaces the configured list by one value
  double m = 0.0;
  double value = 0.0;        ///< the swept value, or m without a sweep
};

std::vector<SweepCell> expand_sweep(const ExperimentConfig& config);

/// Noise model for a cell: variances sigma^2 and a seed derived from the master
/// seed alone, so every cell of a sweep sees the same standard-normal draws.
NoiseModel cell_noise(const ExperimentConfig& config, const SweepCell& cell);

struct ReportRow {
  double value = 0.0;
  double sigma = 0.0;  ///< first sigma entry
  double m = 0.0;
  std::vector<double> mean;
  std::vector<double> mse;
  std::optional<double> field_mse;
  double acceptance = 0.0;
  std::size_t solver_failures = 0;
  double seconds = 0.0;
};

struct ExperimentReport {
  std::string id;
  std::filesystem::path directory;
  std::vector<std::string> names;
  std::vector<ReportRow> rows;
  std::vector<std::filesystem::path> files;  ///< relative to directory
  double seconds = 0.0;
  int iterations = 0;
  int runs = 0;
};

/// Synthesizes data, runs the K-chain ensemble per sweep cell and writes
/// chains/, tables/, fields/, data/, config.cfg and manifest.txt under
/// <output>/<id>. On failure the manifest lists what was written so far.
ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Solves at the truth and writes snapshots at every observation time.
ExperimentReport run_forward(const ExperimentConfig& config, const RunOptions& options = {});

/// Writes data files (and ".clean" twins) for every sweep cell.
ExperimentReport run_synth(const ExperimentConfig& config, const RunOptions& options = {});

struct L1Row {
  double m1 = 0.0;
  double m2 = 0.0;
  double l1 = 0.0;  ///< |rho^(m1)(T) - rho^(m2)(T)|_L1 at the truth
};

struct ConvergenceReport {
  std::filesystem::path directory;
  std::vector<HellingerReport> hellinger;
  std::vector<L1Row> l1;
  std::vector<std::filesystem::path> files;
  double seconds = 0.0;
};

/// Data generated once at the largest m; consecutive pairs of the m list are
/// compared through shared prior samples.
ConvergenceReport run_m_convergence(const ExperimentConfig& config, const std::vector<double>& m_list,
                                    const RunOptions& options = {});

/// 40 equal bins over [min, max] of the samples: "bin_lo,bin_hi,count".
void write_histogram_csv(const std::filesystem::path& path, const std::vector<double>& samples, int bins = 40);

}  // namespace tumorinv
