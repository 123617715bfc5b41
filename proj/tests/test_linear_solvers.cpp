#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "tumorinv/linear_solvers.hpp"

using namespace tumorinv;

TEST_CASE("tridiagonal solve matches a dense solve") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + trial % 9;
    std::vector<double> lo(n), di(n), up(n), b(n);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs(n);
    for (int k = 0; k < n; ++k) {
      lo[k] = k > 0 ? u(rng) : 0.0;
      up[k] = k + 1 < n ? u(rng) : 0.0;
      di[k] = 2.5 + u(rng);
      b[k] = u(rng);
      A(k, k) = di[k];
      if (k > 0) A(k, k - 1) = lo[k];
      if (k + 1 < n) A(k, k + 1) = up[k];
      rhs(k) = b[k];
    }
    const Eigen::VectorXd x = A.fullPivLu().solve(rhs);
    solve_tridiagonal(lo, di, up, b);
    for (int k = 0; k < n; ++k) CHECK(b[k] == doctest::Approx(x(k)).epsilon(1e-12));
  }
}

TEST_CASE("conjugate gradients on random SPD systems") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + trial;
    Eigen::MatrixXd B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B(i, j) = g(rng);
    Eigen::MatrixXd A = B * B.transpose() + n * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b(i) = g(rng);
    const Eigen::VectorXd ref = A.llt().solve(b);

    std::vector<double> diag(n), rhs(n), x(n, 0.0);
    for (int i = 0; i < n; ++i) {
      diag[i] = A(i, i);
      rhs[i] = b(i);
    }
    auto apply = [&](std::span<const double> v, std::span<double> out) {
      const Eigen::VectorXd r = A * Eigen::Map<const Eigen::VectorXd>(v.data(), n);
      for (int i = 0; i < n; ++i) out[i] = r(i);
    };
    const KrylovResult res = conjugate_gradient(apply, diag, rhs, x, 1e-13, 1000);
    CHECK(res.iterations <= 2 * n);
    for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(ref(i)).epsilon(1e-9));
  }
}

TEST_CASE("conjugate gradients with a zero right-hand side returns zero") {
  std::vector<double> diag{2.0, 2.0}, rhs{0.0, 0.0}, x{5.0, -1.0};
  auto apply = [](std::span<const double> v, std::span<double> out) {
    out[0] = 2 * v[0];
    out[1] = 2 * v[1];
  };
  const KrylovResult r = conjugate_gradient(apply, diag, rhs, x, 1e-10, 10);
  CHECK(r.iterations == 0);
  CHECK(x[0] == 0.0);
  CHECK(x[1] == 0.0);
}

TEST_CASE("conjugate gradients reports failure") {
  std::vector<double> diag{1.0, 1.0}, rhs{1.0, 1.0}, x{0.0, 0.0};
  SUBCASE("indefinite operator") {
    auto apply = [](std::span<const double> v, std::span<double> out) {
      out[0] = v[0];
      out[1] = -v[1];
    };
    CHECK_THROWS_AS(conjugate_gradient(apply, diag, rhs, x, 1e-10, 50), LinearSolveError);
  }
  SUBCASE("non-finite operator output") {
    auto apply = [](std::span<const double>, std::span<double> out) {
      out[0] = std::nan("");
      out[1] = 0.0;
    };
    CHECK_THROWS_AS(conjugate_gradient(apply, diag, rhs, x, 1e-10, 50), LinearSolveError);
  }
  SUBCASE("iteration cap") {
    std::vector<double> b(50, 1.0), y(50, 0.0);
    auto apply = [](std::span<const double> v, std::span<double> out) {
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = (1.0 + static_cast<double>(i) * i) * v[i];
    };
    std::vector<double> unit(50, 1.0);  // wrong diagonal, so Jacobi does not solve it in one step
    CHECK_THROWS_AS(conjugate_gradient(apply, unit, b, y, 1e-14, 3), LinearSolveError);
  }
}
