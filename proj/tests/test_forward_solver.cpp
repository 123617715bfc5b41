#include <doctest.h>

#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "tumorinv/forward_solver.hpp"

using namespace tumorinv;

namespace {

Grid line(int n, double lo = 0.0, double hi = 1.0) {
  const double b[] = {lo, hi};
  const int c[] = {n};
  return build_grid(1, b, c);
}

Grid square(double half, int n) {
  const double b[] = {-half, half, -half, half};
  const int c[] = {n, n};
  return build_grid(2, b, c);
}

double total_variation(const CellField& f) {
  double tv = 0.0;
  for (std::size_t k = 1; k < f.size(); ++k) tv += std::abs(f[k] - f[k - 1]);
  return tv;
}

}  // namespace

TEST_CASE("degenerate power") {
  CHECK(degenerate_power(0.0, 38.0) == 0.0);
  CHECK(degenerate_power(0.0, 0.0) == 0.0);
  CHECK(degenerate_power(1e-310, 2.0) == 0.0);
  CHECK(degenerate_power(0.5, 3.0) == doctest::Approx(0.125));
  CHECK(degenerate_power(1.0, 79.0) == 1.0);
}

TEST_CASE("upwind flux picks the upwind edge value") {
  CHECK(upwind_flux(2.0, 5.0, 1.5) == doctest::Approx(3.0));
  CHECK(upwind_flux(2.0, 5.0, -1.5) == doctest::Approx(-7.5));
  CHECK(upwind_flux(2.0, 5.0, 0.0) == 0.0);
}

TEST_CASE("solver config validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.m = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SolverConfig{};
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SolverConfig{};
  c.solver = PredictionSolver::Direct;
  const Grid g = square(1.0, 8);
  const DensityField rho(g, 0.5);
  const VelocityField u(g);
  const GrowthField h(g, 1.0);
  CHECK_THROWS_AS(prediction_step(g, rho, u, h, c), std::invalid_argument);
}

TEST_CASE("1D prediction step matches the dense oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Grid g = line(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> rho(8), h(8), u(9, 0.0);
    for (int i = 0; i < 8; ++i) {
      rho[i] = 0.05 + 0.95 * unit(rng);
      h[i] = 2.0 * unit(rng) - 0.5;
    }
    for (int f = 1; f < 8; ++f) u[f] = 2.0 * unit(rng) - 1.0;
    SolverConfig c;
    c.m = 2.0 + 60.0 * unit(rng);
    c.dt = 0.001 + 0.01 * unit(rng);
    c.tolerance = 1e-14;
    const std::vector<double> ref = oracle::dense_prediction_1d(rho, u, h, c.m, c.dt, g.dx());

    VelocityField uf(g);
    uf.x = u;
    for (PredictionSolver s : {PredictionSolver::Direct, PredictionSolver::Krylov}) {
      c.solver = s;
      const PredictionResult r = prediction_step(g, DensityField(rho), uf, GrowthField(h), c);
      for (int f = 0; f <= 8; ++f) CHECK(std::abs(r.velocity.x[f] - ref[f]) <= 1e-10);
    }
  }
}

TEST_CASE("2D prediction of a y-independent state reduces to 1D") {
  const Grid g2 = square(1.0, 12);
  const Grid g1 = line(12, -1.0, 1.0);
  std::vector<double> profile(12);
  for (int i = 0; i < 12; ++i) profile[i] = 0.2 + 0.6 * std::exp(-g1.xc(i) * g1.xc(i));
  DensityField rho2(g2), rho1(profile);
  GrowthField h2(g2, 0.7), h1(g1, 0.7);
  for (int j = 0; j < 12; ++j)
    for (int i = 0; i < 12; ++i) rho2[g2.cell(i, j)] = profile[i];
  SolverConfig c;
  c.m = 6.0;
  c.tolerance = 1e-13;
  const VelocityField u2 = init_velocity(g2, rho2, c.m);
  const VelocityField u1 = init_velocity(g1, rho1, c.m);
  const PredictionResult p2 = prediction_step(g2, rho2, u2, h2, c);
  const PredictionResult p1 = prediction_step(g1, rho1, u1, h1, c);
  for (int j = 0; j < 12; ++j) {
    for (int i = 0; i <= 12; ++i) CHECK(p2.velocity.x[g2.x_face(i, j)] == doctest::Approx(p1.velocity.x[i]).epsilon(1e-9));
  }
  for (double v : p2.velocity.y) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("correction step is the discrete pressure gradient") {
  const Grid g = line(4);
  const DensityField rho(std::vector<double>{0.0, 0.5, 1.0, 0.5});
  const double m = 3.0;
  const VelocityField u = init_velocity(g, rho, m);
  const double k = -(m / (m - 1.0)) / g.dx();
  CHECK(u.x[0] == 0.0);
  CHECK(u.x[1] == doctest::Approx(k * 0.25));
  CHECK(u.x[2] == doctest::Approx(k * 0.75));
  CHECK(u.x[3] == doctest::Approx(k * -0.75));
  CHECK(u.x[4] == 0.0);
}

TEST_CASE("transport conserves mass without growth") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Grid g = square(1.0, 16);
  SolverConfig c;
  c.dt = 0.002;
  for (int trial = 0; trial < 20; ++trial) {
    DensityField rho(g);
    for (double& v : rho.values) v = unit(rng);
    VelocityField u(g);
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 1; i < g.nx(); ++i) u.x[g.x_face(i, j)] = 2.0 * unit(rng) - 1.0;
    for (int j = 1; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) u.y[g.y_face(i, j)] = 2.0 * unit(rng) - 1.0;
    const TransportResult r = transport_step(g, rho, u, GrowthField(g, 0.0), c);
    CHECK(r.clamp_events == 0);
    const double m0 = total_mass(g, rho);
    CHECK(std::abs(total_mass(g, r.density) - m0) <= 1e-12 * m0);
  }
}

TEST_CASE("full solve conserves mass without growth") {
  const Grid g = square(2.2, 44);
  const DensityField rho0 = initial_density_flower(g, 0.0, 0.0, 0.9);
  SolverConfig c;
  c.t_final = 0.1;
  const std::vector<double> times{0.1};
  const ForwardSolution s = solve_forward(g, rho0, GrowthField(g, 0.0), c, times);
  const double m0 = total_mass(g, rho0);
  CHECK(s.diagnostics.clamped_mass == 0.0);
  CHECK(std::abs(total_mass(g, s.snapshots.back().density) - m0) <= 1e-12 * m0 * s.diagnostics.steps);
}

TEST_CASE("frozen-velocity transport in 1D is TVD") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Grid g = line(64);
  SolverConfig c;
  for (int trial = 0; trial < 20; ++trial) {
    DensityField rho(g);
    for (int i = 8; i < 40; ++i) rho[i] = unit(rng) < 0.5 ? unit(rng) : rho[i - 1];
    const double speed = (trial % 2 ? 1.0 : -1.0) * (0.2 + unit(rng));
    VelocityField u(g);
    for (int f = 1; f < 64; ++f) u.x[f] = speed;
    c.dt = 0.4 * g.dx() / std::abs(speed);  // CFL 0.4
    for (int step = 0; step < 10; ++step) {
      const double tv0 = total_variation(rho);
      rho = transport_step(g, rho, u, GrowthField(g, 0.0), c).density;
      CHECK(total_variation(rho) <= tv0 + 1e-12);
    }
  }
}

TEST_CASE("density stays non-negative") {
  const Grid g = square(2.2, 44);
  SolverConfig c;
  c.m = 80.0;
  c.t_final = 0.25;
  const std::vector<double> times{0.25};
  const ForwardSolution s =
      solve_forward(g, initial_density_flower(g, 0.0, 0.0, 0.9), GrowthField(g, 1.0), c, times);
  CHECK(min_value(s.snapshots.back().density) >= 0.0);
  CHECK(s.diagnostics.clamped_mass <= 1e-6);
}

TEST_CASE("uniform density grows at the implicit-Euler rate") {
  const Grid g = square(1.0, 8);
  SolverConfig c;
  c.m = 40.0;
  const std::vector<double> times{0.5};
  const ForwardSolution s = solve_forward(g, DensityField(g, 0.5), GrowthField(g, 1.0), c, times);
  const double expected = std::pow(1.0 - c.dt, -step_count(c));
  CHECK(total_mass(g, s.snapshots.back().density) / total_mass(g, DensityField(g, 0.5)) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("L1 distance grows at most like the source bound") {
  // d/dt |rho1 - rho2|_L1 <= |h (rho1 - rho2)|_L1 <= h |rho1 - rho2|_L1 for equal constant h
  const Grid g = square(2.2, 44);
  SolverConfig c;
  c.m = 20.0;
  const std::vector<double> times{0.5};
  const DensityField a = initial_density_flower(g, 0.0, 0.0, 0.9);
  const DensityField b = initial_density_flower(g, 0.1, -0.1, 0.8);
  const GrowthField h(g, 1.0);
  const double d0 = l1_distance(g, a, b);
  const ForwardSolution sa = solve_forward(g, a, h, c, times);
  const ForwardSolution sb = solve_forward(g, b, h, c, times);
  const double dT = l1_distance(g, sa.snapshots.back().density, sb.snapshots.back().density);
  CHECK(dT <= d0 * std::pow(1.0 - c.dt, -step_count(c)) * (1.0 + 1e-9));
}

TEST_CASE("snapshot bookkeeping") {
  const Grid g = square(1.0, 8);
  SolverConfig c;
  c.t_final = 0.1;
  const std::vector<double> times{0.02, 0.05, 0.1};
  const ForwardSolution s = solve_forward(g, initial_density_disk(g, 0.2, 0.9), GrowthField(g, 1.0), c, times);
  REQUIRE(s.snapshots.size() == 3);
  CHECK(s.snapshots[0].time == doctest::Approx(0.02));
  CHECK(s.at(0.05).time == doctest::Approx(0.05));
  CHECK(s.diagnostics.steps == 20);
  const std::vector<double> late{0.2};
  CHECK_THROWS_AS(solve_forward(g, DensityField(g, 0.5), GrowthField(g, 1.0), c, late), std::invalid_argument);
}

TEST_CASE("implicit growth breakdown is reported with the step") {
  const Grid g = square(1.0, 8);
  SolverConfig c;
  const std::vector<double> times{0.5};
  try {
    solve_forward(g, DensityField(g, 0.5), GrowthField(g, 250.0), c, times);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.step() == 1);
  }
}

TEST_CASE("solves are deterministic") {
  const Grid g = square(2.2, 22);
  SolverConfig c;
  c.t_final = 0.1;
  const std::vector<double> times{0.1};
  const DensityField rho0 = initial_density_flower(g, 0.0, 0.0, 0.9);
  const auto a = solve_forward(g, rho0, GrowthField(g, 1.0), c, times);
  const auto b = solve_forward(g, rho0, GrowthField(g, 1.0), c, times);
  CHECK(a.snapshots.back().density.values == b.snapshots.back().density.values);
}
