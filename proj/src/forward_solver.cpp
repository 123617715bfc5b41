#include "tumorinv/forward_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tumorinv/linear_solvers.hpp"

namespace tumorinv {

namespace {

constexpr double kPowerFloor = 1e-300;
constexpr double kBoundaryThreshold = 1e-8;

struct ActiveFace {
  bool is_x;
  int i;
  int j;
  std::size_t face;  // index into FaceField::x or ::y
  std::size_t low;   // cell on the low side
  std::size_t high;  // cell on the high side
  double rho_face;
  double spacing;
};

double boundary_max(const Grid& grid, const DensityField& rho) {
  double b = 0.0;
  const int nx = grid.nx();
  const int ny = grid.ny();
  for (int i = 0; i < nx; ++i) {
    b = std::max(b, rho[grid.cell(i, 0)]);
    b = std::max(b, rho[grid.cell(i, ny - 1)]);
  }
  if (grid.dim() == 2) {
    for (int j = 0; j < ny; ++j) {
      b = std::max(b, rho[grid.cell(0, j)]);
      b = std::max(b, rho[grid.cell(nx - 1, j)]);
    }
  }
  return b;
}

VelocityField pressure_gradient_velocity(const Grid& grid, const DensityField& rho, double m) {
  VelocityField u(grid);
  const double scale = m / (m - 1.0);
  std::vector<double> q(rho.size());
  for (std::size_t k = 0; k < q.size(); ++k) q[k] = degenerate_power(rho[k], m - 1.0);
  const int nx = grid.nx();
  const int ny = grid.ny();
  for (int j = 0; j < ny; ++j) {
    for (int i = 1; i < nx; ++i) {
      u.x[grid.x_face(i, j)] = -scale * (q[grid.cell(i, j)] - q[grid.cell(i - 1, j)]) / grid.dx();
    }
  }
  if (grid.dim() == 2) {
    for (int j = 1; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        u.y[grid.y_face(i, j)] = -scale * (q[grid.cell(i, j)] - q[grid.cell(i, j - 1)]) / grid.dy();
      }
    }
  }
  return u;
}

}  // namespace

void SolverConfig::validate() const {
  std::ostringstream errs;
  if (!(m >= 2.0) || !std::isfinite(m)) errs << " m must be >= 2;";
  if (!(dt > 0.0) || !std::isfinite(dt)) errs << " dt must be > 0;";
  if (!(t_final > 0.0) || !std::isfinite(t_final)) errs << " t_final must be > 0;";
  if (!(tolerance > 0.0)) errs << " tolerance must be > 0;";
  if (max_iterations < 1) errs << " max_iterations must be >= 1;";
  const std::string msg = errs.str();
  if (!msg.empty()) throw std::invalid_argument("solver config:" + msg);
}

double degenerate_power(double rho, double exponent) {
  if (!(rho > kPowerFloor)) return 0.0;
  return std::exp(exponent * std::log(rho));
}

int step_count(const SolverConfig& config) {
  return static_cast<int>(std::ceil(config.t_final / config.dt - 1e-9));
}

VelocityField init_velocity(const Grid& grid, const DensityField& rho, double m) {
  return pressure_gradient_velocity(grid, rho, m);
}

VelocityField correction_step(const Grid& grid, const DensityField& rho, const SolverConfig& config) {
  return pressure_gradient_velocity(grid, rho, config.m);
}

PredictionResult prediction_step(const Grid& grid, const DensityField& rho, const VelocityField& u,
                                 const GrowthField& h, const SolverConfig& config) {
  const double m = config.m;
  const double coef = config.dt * m;
  const std::size_t n_cells = grid.cell_count();
  std::vector<double> w(n_cells), q(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c) {
    w[c] = degenerate_power(rho[c], m - 2.0);
    q[c] = degenerate_power(rho[c], m - 1.0) * h[c];
  }
  const FaceField rho_face = face_average(grid, rho);
  const int nx = grid.nx();
  const int ny = grid.ny();

  PredictionResult result;
  result.velocity = VelocityField(grid);

  const bool direct = config.solver == PredictionSolver::Direct ||
                      (config.solver == PredictionSolver::Auto && grid.dim() == 1);
  if (direct) {
    if (grid.dim() != 1) throw std::invalid_argument("prediction_step: direct solve is 1D only");
    const int n = nx - 1;
    const double dx = grid.dx();
    const double c = coef / (dx * dx);
    std::vector<double> lower(n, 0.0), diag(n), upper(n, 0.0), rhs(n);
    for (int k = 0; k < n; ++k) {
      const int f = k + 1;  // face between cells f-1 and f
      const double wl = w[f - 1];
      const double wr = w[f];
      diag[k] = 1.0 + c * rho_face.x[f] * (wl + wr);
      if (k > 0) lower[k] = -c * wl * rho_face.x[f - 1];
      if (k + 1 < n) upper[k] = -c * wr * rho_face.x[f + 1];
      rhs[k] = u.x[f] + coef * (q[f - 1] - q[f]) / dx;
    }
    solve_tridiagonal(lower, diag, upper, rhs);
    for (int k = 0; k < n; ++k) result.velocity.x[k + 1] = rhs[k];
    return result;
  }

  // Scaling row f by rho_face[f] makes the system symmetric positive definite
  // on the faces with positive density. Vacuum faces (both cells below the
  // power floor) decouple with u* = u.
  std::vector<ActiveFace> active;
  active.reserve(grid.x_face_count() + grid.y_face_count());
  for (int j = 0; j < ny; ++j) {
    for (int i = 1; i < nx; ++i) {
      const std::size_t f = grid.x_face(i, j);
      if (rho_face.x[f] > kPowerFloor) {
        active.push_back({true, i, j, f, grid.cell(i - 1, j), grid.cell(i, j), rho_face.x[f], grid.dx()});
      } else {
        result.velocity.x[f] = u.x[f];
      }
    }
  }
  if (grid.dim() == 2) {
    for (int j = 1; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const std::size_t f = grid.y_face(i, j);
        if (rho_face.y[f] > kPowerFloor) {
          active.push_back({false, i, j, f, grid.cell(i, j - 1), grid.cell(i, j), rho_face.y[f], grid.dy()});
        } else {
          result.velocity.y[f] = u.y[f];
        }
      }
    }
  }

  const std::size_t n = active.size();
  std::vector<double> diag(n), rhs(n), x(n);
  for (std::size_t k = 0; k < n; ++k) {
    const ActiveFace& a = active[k];
    const double hs = a.spacing;
    diag[k] = a.rho_face + coef * a.rho_face * a.rho_face * (w[a.low] + w[a.high]) / (hs * hs);
    const double u_old = a.is_x ? u.x[a.face] : u.y[a.face];
    rhs[k] = a.rho_face * (u_old + coef * (q[a.low] - q[a.high]) / hs);
    x[k] = u_old;
  }

  std::vector<double> t(n_cells, 0.0);
  auto apply = [&](std::span<const double> v, std::span<double> out) {
    std::fill(t.begin(), t.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const ActiveFace& a = active[k];
      const double flux = a.rho_face * v[k] / a.spacing;
      t[a.low] += flux;
      t[a.high] -= flux;
    }
    for (std::size_t c = 0; c < n_cells; ++c) t[c] *= w[c];
    for (std::size_t k = 0; k < n; ++k) {
      const ActiveFace& a = active[k];
      out[k] = a.rho_face * (v[k] + coef * (t[a.low] - t[a.high]) / a.spacing);
    }
  };

  const KrylovResult kr = conjugate_gradient(apply, diag, rhs, x, config.tolerance, config.max_iterations);
  result.iterations = kr.iterations;
  result.residual = kr.residual;
  for (std::size_t k = 0; k < n; ++k) {
    const ActiveFace& a = active[k];
    (a.is_x ? result.velocity.x : result.velocity.y)[a.face] = x[k];
  }
  return result;
}

TransportResult transport_step(const Grid& grid, const DensityField& rho, const VelocityField& u_star,
                               const GrowthField& h, const SolverConfig& config) {
  const int nx = grid.nx();
  const int ny = grid.ny();
  const double dx = grid.dx();
  const double dy = grid.dy();
  const double dt = config.dt;
  const std::size_t n_cells = grid.cell_count();

  for (std::size_t c = 0; c < n_cells; ++c) {
    if (!(1.0 - dt * h[c] > 0.0)) {
      throw SolverError("transport_step: 1 - dt*h <= 0 at cell " + std::to_string(c) +
                            " (h = " + std::to_string(h[c]) + ")",
                        -1, std::numeric_limits<double>::quiet_NaN());
    }
  }

  TransportResult out;
  std::vector<double> div(n_cells, 0.0);

  std::vector<double> slope(n_cells, 0.0);
  for (int j = 0; j < ny; ++j) {
    for (int i = 1; i + 1 < nx; ++i) {
      slope[grid.cell(i, j)] =
          minmod_slope(rho[grid.cell(i - 1, j)], rho[grid.cell(i, j)], rho[grid.cell(i + 1, j)], dx);
    }
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 1; i < nx; ++i) {
      const std::size_t lo = grid.cell(i - 1, j);
      const std::size_t hi = grid.cell(i, j);
      const double u = u_star.x[grid.x_face(i, j)];
      out.max_courant = std::max(out.max_courant, dt * std::abs(u) / dx);
      const double f = upwind_flux(rho[lo] + 0.5 * dx * slope[lo], rho[hi] - 0.5 * dx * slope[hi], u) / dx;
      div[lo] += f;
      div[hi] -= f;
    }
  }

  if (grid.dim() == 2) {
    std::fill(slope.begin(), slope.end(), 0.0);
    for (int j = 1; j + 1 < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        slope[grid.cell(i, j)] =
            minmod_slope(rho[grid.cell(i, j - 1)], rho[grid.cell(i, j)], rho[grid.cell(i, j + 1)], dy);
      }
    }
    for (int j = 1; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const std::size_t lo = grid.cell(i, j - 1);
        const std::size_t hi = grid.cell(i, j);
        const double u = u_star.y[grid.y_face(i, j)];
        out.max_courant = std::max(out.max_courant, dt * std::abs(u) / dy);
        const double f = upwind_flux(rho[lo] + 0.5 * dy * slope[lo], rho[hi] - 0.5 * dy * slope[hi], u) / dy;
        div[lo] += f;
        div[hi] -= f;
      }
    }
  }

  out.density = DensityField(grid);
  const double vol = grid.cell_volume();
  for (std::size_t c = 0; c < n_cells; ++c) {
    double v = (rho[c] - dt * div[c]) / (1.0 - dt * h[c]);
    if (!std::isfinite(v)) {
      throw SolverError("transport_step: non-finite density at cell " + std::to_string(c), -1,
                        std::numeric_limits<double>::quiet_NaN());
    }
    if (v < 0.0 && config.clamp_negative) {
      out.clamped_mass += -v * vol;
      ++out.clamp_events;
      v = 0.0;
    }
    out.density[c] = v;
  }
  return out;
}

const Snapshot& ForwardSolution::at(double t) const {
  for (const Snapshot& s : snapshots) {
    if (s.time >= t - 1e-9) return s;
  }
  throw std::out_of_range("no snapshot at or after t = " + std::to_string(t));
}

ForwardSolution solve_forward(const Grid& grid, const DensityField& rho0, const GrowthField& h,
                              const SolverConfig& config, std::span<const double> snapshot_times) {
  config.validate();
  if (rho0.size() != grid.cell_count() || h.size() != grid.cell_count()) {
    throw std::invalid_argument("solve_forward: field sizes do not match the grid");
  }
  for (double v : rho0.values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("solve_forward: initial density must be finite and non-negative");
    }
  }
  const double eps = 1e-9 * config.dt;
  for (std::size_t k = 0; k < snapshot_times.size(); ++k) {
    const double t = snapshot_times[k];
    if (!(t > 0.0) || t > config.t_final + eps) {
      throw std::invalid_argument("solve_forward: snapshot time " + std::to_string(t) + " outside (0, T]");
    }
    if (k > 0 && !(t > snapshot_times[k - 1])) {
      throw std::invalid_argument("solve_forward: snapshot times must be strictly increasing");
    }
  }

  ForwardSolution sol;
  SolverDiagnostics& diag = sol.diagnostics;
  DensityField rho = rho0;
  VelocityField u = init_velocity(grid, rho, config.m);
  const int n_steps = step_count(config);
  std::size_t next = 0;

  for (int n = 1; n <= n_steps; ++n) {
    const double t = n * config.dt;
    try {
      PredictionResult pred = prediction_step(grid, rho, u, h, config);
      diag.krylov_iterations += pred.iterations;
      TransportResult tr = transport_step(grid, rho, pred.velocity, h, config);
      if (tr.max_courant > 1.0) ++diag.courant_advisories;
      diag.clamped_mass += tr.clamped_mass;
      diag.clamp_events += tr.clamp_events;
      rho = std::move(tr.density);
    } catch (const LinearSolveError& e) {
      throw SolverError(std::string("prediction step: ") + e.what(), n, t);
    } catch (const SolverError& e) {
      throw SolverError(e.what(), n, t);
    }
    u = correction_step(grid, rho, config);
    diag.steps = n;
    const double b = boundary_max(grid, rho);
    diag.max_boundary_density = std::max(diag.max_boundary_density, b);
    if (b > kBoundaryThreshold) diag.boundary_warning = true;

    while (next < snapshot_times.size() && snapshot_times[next] <= t + eps) {
      sol.snapshots.push_back({t, rho});
      ++next;
    }
  }
  sol.final_velocity = std::move(u);
  return sol;
}

}  // namespace tumorinv
