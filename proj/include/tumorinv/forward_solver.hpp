#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tumorinv/grid.hpp"

namespace tumorinv {

/// How the prediction-step system is solved.
enum class PredictionSolver {
  Auto,       ///< tridiagonal direct solve in 1D, Krylov in 2D
  Direct,     ///< tridiagonal direct solve (1D only)
  Krylov,     ///< Jacobi-preconditioned CG on the symmetrised system
};

struct SolverConfig {
  double m = 40.0;         ///< pressure-law exponent, p = m/(m-1) rho^(m-1)
  double dt = 0.005;
  double t_final = 0.5;
  double tolerance = 1e-10;
  int max_iterations = 20000;
  bool clamp_negative = true;
  PredictionSolver solver = PredictionSolver::Auto;

  /// Throws std::invalid_argument listing the violated constraints.
  void validate() const;
};

/// A failure inside the time loop, tagged with where it happened.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int step, double time)
      : std::runtime_error(what), step_(step), time_(time) {}
  int step() const { return step_; }
  double time() const { return time_; }

 private:
  int step_;
  double time_;
};

/// rho^e with the vacuum convention 0^e = 0 for every e >= 0.
double degenerate_power(double rho, double exponent);

/// Face velocity from the pressure gradient, u = -(m/(m-1)) grad rho^(m-1).
/// Boundary faces are zero.
VelocityField init_velocity(const Grid& grid, const DensityField& rho, double m);

/// Same map as init_velocity, applied after transport.
VelocityField correction_step(const Grid& grid, const DensityField& rho, const SolverConfig& config);

struct PredictionResult {
  VelocityField velocity;
  int iterations = 0;
  double residual = 0.0;
};

/// Implicit intermediate-velocity solve
///   (u* - u)/dt = m grad( rho^(m-2) (div(rho_face u*) - rho h) ).
/// Throws LinearSolveError if the iterative solve does not converge.
PredictionResult prediction_step(const Grid& grid, const DensityField& rho, const VelocityField& u,
                                 const GrowthField& h, const SolverConfig& config);

struct TransportResult {
  DensityField density;
  double clamped_mass = 0.0;
  int clamp_events = 0;
  double max_courant = 0.0;  ///< dt * max|u*| / dx over all faces
};

/// Upwind MUSCL transport with minmod edge reconstruction and an implicit
/// growth source: rho_new = (rho - dt div F) / (1 - dt h). No flux through the
/// domain boundary. Throws SolverError if 1 - dt h <= 0 anywhere.
TransportResult transport_step(const Grid& grid, const DensityField& rho, const VelocityField& u_star,
                               const GrowthField& h, const SolverConfig& config);

/// The interface flux 1/2 [ (rhoL + rhoR) u - |u| (rhoR - rhoL) ].
inline double upwind_flux(double rho_left, double rho_right, double u) {
  return 0.5 * ((rho_left + rho_right) * u - (u < 0.0 ? -u : u) * (rho_right - rho_left));
}

struct Snapshot {
  double time = 0.0;
  DensityField density;
};

struct SolverDiagnostics {
  int steps = 0;
  int krylov_iterations = 0;
  int clamp_events = 0;
  double clamped_mass = 0.0;
  int courant_advisories = 0;      ///< steps with dt max|u*|/dx > 1
  double max_boundary_density = 0.0;
  bool boundary_warning = false;   ///< a boundary cell exceeded 1e-8
};

struct ForwardSolution {
  std::vector<Snapshot> snapshots;
  VelocityField final_velocity;
  SolverDiagnostics diagnostics;

  /// Snapshot whose time is within 1e-9 of, or the first one after, `t`.
  const Snapshot& at(double t) const;
};

/// Runs prediction -> transport -> correction with fixed dt from t = 0 to
/// t_final. A snapshot is stored at the first step time >= each requested time.
/// Requested times must be sorted and inside (0, t_final].
ForwardSolution solve_forward(const Grid& grid, const DensityField& rho0, const GrowthField& h,
                              const SolverConfig& config, std::span<const double> snapshot_times);

/// Number of fixed steps needed to reach t_final.
int step_count(const SolverConfig& config);

}  // namespace tumorinv
