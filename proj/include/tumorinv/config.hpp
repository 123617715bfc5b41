#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tumorinv/forward_solver.hpp"
#include "tumorinv/grid.hpp"
#include "tumorinv/observation.hpp"
#include "tumorinv/prior.hpp"

namespace tumorinv {

/// Malformed text or an invalid configuration. `errors` holds every problem
/// found, each prefixed with "line N:" where a line is known.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

struct GridSection {
  int dim = 2;
  std::vector<double> bounds;  ///< lo, hi per axis
  std::vector<int> cells;
};

struct ObservationSection {
  ObservationOperator op;
  std::vector<double> sigma;  ///< noise standard deviations, one or one per entry
};

struct McmcSection {
  int iterations = 200;
  int runs = 5;
  int paper_iterations = 1000;
  int paper_runs = 15;
  double burn_in = 0.25;
  double proposal_scale = 0.1;     ///< multiple of the prior standard deviation
  std::vector<double> proposal_sd; ///< explicit override, empty if unset
  std::uint64_t seed = 1;
  int threads = 0;
};

enum class SweepParameter { None, Sigma, M };

struct SweepSection {
  SweepParameter parameter = SweepParameter::None;
  std::vector<double> values;
};

struct MconvSection {
  std::vector<double> m;
  int samples = 500;
  int bootstrap = 200;
};

struct ExperimentConfig {
  std::string id;
  std::filesystem::path output = "out";
  GridSection grid;
  SolverConfig solver;
  InitialDataSpec initial;
  PriorSpec prior;
  ModelParams truth;
  ObservationSection observation;
  McmcSection mcmc;
  SweepSection sweep;
  MconvSection mconv;

  Grid build() const;
  ForwardMap forward_map() const;
  /// Throws ConfigError listing every inconsistency.
  void validate() const;
};

/// Parses "[section]" headers and "key = value" lines; '#' starts a comment.
/// Lists are comma separated. Prior laws are written "normal, mean, sd" or
/// "uniform, lo, hi". Unknown keys are errors. The result is validated.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);

}  // namespace tumorinv
