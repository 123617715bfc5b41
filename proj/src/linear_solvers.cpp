#include "tumorinv/linear_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tumorinv {

void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs) {
  const std::size_t n = diag.size();
  if (n == 0) return;
  if (lower.size() != n || upper.size() != n || rhs.size() != n) {
    throw std::invalid_argument("solve_tridiagonal: band sizes differ");
  }
  std::vector<double> c(n);
  double denom = diag[0];
  if (denom == 0.0) throw std::runtime_error("solve_tridiagonal: zero pivot");
  c[0] = upper[0] / denom;
  rhs[0] /= denom;
  for (std::size_t k = 1; k < n; ++k) {
    denom = diag[k] - lower[k] * c[k - 1];
    if (denom == 0.0) throw std::runtime_error("solve_tridiagonal: zero pivot");
    c[k] = k + 1 < n ? upper[k] / denom : 0.0;
    rhs[k] = (rhs[k] - lower[k] * rhs[k - 1]) / denom;
  }
  for (std::size_t k = n - 1; k-- > 0;) rhs[k] -= c[k] * rhs[k + 1];
}

KrylovResult conjugate_gradient(const LinearOperator& apply, std::span<const double> diagonal,
                                std::span<const double> rhs, std::span<double> x, double tol,
                                int max_iterations) {
  const std::size_t n = rhs.size();
  KrylovResult result;
  if (n == 0) return result;

  std::vector<double> inv_diag(n);
  for (std::size_t k = 0; k < n; ++k) inv_diag[k] = diagonal[k] > 0.0 ? 1.0 / diagonal[k] : 1.0;

  double b_norm2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) b_norm2 += rhs[k] * rhs[k] * inv_diag[k];
  if (b_norm2 == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return result;
  }

  std::vector<double> r(n), z(n), p(n), ap(n);
  apply(x, ap);
  double rz = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    r[k] = rhs[k] - ap[k];
    z[k] = inv_diag[k] * r[k];
    p[k] = z[k];
    rz += r[k] * z[k];
  }
  const double target = tol * tol * b_norm2;
  int it = 0;
  if (!std::isfinite(rz) || !std::isfinite(b_norm2)) {
    throw LinearSolveError("conjugate_gradient: non-finite residual", rz, 0);
  }
  while (rz > target) {
    if (it >= max_iterations) {
      const double res = std::sqrt(rz / b_norm2);
      throw LinearSolveError("conjugate_gradient: no convergence after " + std::to_string(it) +
                                 " iterations, residual " + std::to_string(res),
                             res, it);
    }
    apply(p, ap);
    double pap = 0.0;
    for (std::size_t k = 0; k < n; ++k) pap += p[k] * ap[k];
    if (!(pap > 0.0)) {
      const double res = std::sqrt(rz / b_norm2);
      throw LinearSolveError("conjugate_gradient: operator is not positive definite", res, it);
    }
    const double alpha = rz / pap;
    double rz_next = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * ap[k];
      z[k] = inv_diag[k] * r[k];
      rz_next += r[k] * z[k];
    }
    if (!std::isfinite(rz_next)) {
      throw LinearSolveError("conjugate_gradient: non-finite residual", rz_next, it);
    }
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
    ++it;
  }
  result.iterations = it;
  result.residual = std::sqrt(rz / b_norm2);
  return result;
}

}  // namespace tumorinv
