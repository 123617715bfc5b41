#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tumorinv/forward_solver.hpp"
#include "tumorinv/grid.hpp"
#include "tumorinv/prior.hpp"

namespace tumorinv {

enum class ObservationMode {
  FullGrid,     ///< every cell value at each observation time
  Functionals,  ///< integrals of rho against Gaussian test functions
};

std::string to_string(ObservationMode mode);

/// Test function exp(-|x - c|^2 / (2 width^2)).
struct GaussianBump {
  double cx = 0.0;
  double cy = 0.0;
  double width = 0.1;

  double operator()(double x, double y) const;
};

/// Amplitude of each test function.
enum class BumpScale {
  Peak,      ///< unit peak
  UnitMass,  ///< unit integral, a Gaussian blur kernel
  CellSum,   ///< peak 1/(dx dy): the functional is the plain sum of weighted cell values
};

std::string to_string(BumpScale scale);

struct ObservationOperator {
  ObservationMode mode = ObservationMode::FullGrid;
  std::vector<GaussianBump> bumps;
  BumpScale scale = BumpScale::Peak;
  std::vector<double> times;

  /// Throws std::invalid_argument if times are not increasing inside (0, t_final].
  void validate(double t_final) const;
  /// K: observations per time.
  std::size_t per_time(const Grid& grid) const;
  /// Amplitude applied to bump k.
  double amplitude(const Grid& grid, std::size_t k) const;
  /// max |xi_k| (1 for full-grid point evaluation).
  double max_weight(const Grid& grid, std::size_t k) const;
};

/// Flat y of length J*K; entry (j, k) lives at j*K + k.
struct ObservationVector {
  std::vector<double> values;
  int J = 0;
  int K = 0;

  std::size_t index(int j, int k) const { return static_cast<std::size_t>(j) * K + k; }
  std::size_t size() const { return values.size(); }
};

/// Observations of a single density field (one time level), K entries.
std::vector<double> observe_density(const Grid& grid, const CellField& rho, const ObservationOperator& op);

/// Noise-free observation of a forward solution at every operator time.
/// Throws std::out_of_range if a time has no snapshot.
ObservationVector apply_observation(const Grid& grid, const ForwardSolution& solution,
                                    const ObservationOperator& op);

/// Diagonal Gaussian noise. A single variance is broadcast to every entry.
struct NoiseModel {
  std::vector<double> variances;
  std::uint64_t seed = 0;

  double variance(std::size_t i) const { return variances.size() == 1 ? variances[0] : variances.at(i); }
  void validate(std::size_t n) const;
};

ObservationVector add_noise(const ObservationVector& clean, const NoiseModel& noise);

enum class InitialShape { Flower, Disk };

struct InitialDataSpec {
  InitialShape shape = InitialShape::Flower;
  double cx = 0.0;
  double cy = 0.0;
  double amplitude = 0.9;
  double radius2 = 0.2;  ///< disk only
};

/// The forward map u -> G^m(u): builds rho0 and h from u, solves, observes.
/// Parametric entries "c1", "c2" move the initial-data centre.
struct ForwardMap {
  Grid grid;
  InitialDataSpec initial;
  PriorSpec prior;
  SolverConfig solver;
  ObservationOperator observation;

  DensityField initial_density(const ModelParams& u) const;
  GrowthField growth(const ModelParams& u) const;
  ForwardSolution solve(const ModelParams& u) const;
  ObservationVector operator()(const ModelParams& u) const;
};

struct SyntheticData {
  ObservationVector clean;
  ObservationVector noisy;
  ForwardSolution solution;
};

SyntheticData synthesize_data(const ForwardMap& forward, const ModelParams& truth, const NoiseModel& noise);

/// Writes "mode=.. J=.. K=.. sigma=.. seed=.." then "j k value" lines.
void write_observation_file(const std::filesystem::path& path, const ObservationVector& y,
                            ObservationMode mode, const NoiseModel& noise);

struct ObservationFile {
  ObservationMode mode = ObservationMode::FullGrid;
  ObservationVector y;
  std::vector<double> sigmas;
  std::uint64_t seed = 0;
};

ObservationFile read_observation_file(const std::filesystem::path& path);

}  // namespace tumorinv
