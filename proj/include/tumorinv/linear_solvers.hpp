#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace tumorinv {

/// Raised when an iterative solve stalls before reaching its tolerance.
class LinearSolveError : public std::runtime_error {
 public:
  LinearSolveError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Solves a tridiagonal system in place (Thomas algorithm, no pivoting).
///
/// `lower[k]` multiplies x[k-1] in row k (lower[0] unused), `upper[k]` multiplies
/// x[k+1] (upper[n-1] unused). Requires a diagonally dominant (by rows or
/// columns) matrix. On return `rhs` holds the solution.
void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs);

struct KrylovResult {
  int iterations = 0;
  double residual = 0.0;  ///< Jacobi-scaled relative residual at exit
};

/// y = A x for a symmetric positive definite A.
using LinearOperator = std::function<void(std::span<const double> x, std::span<double> y)>;

/// Jacobi-preconditioned conjugate gradients, matrix-free.
///
/// `x` holds the initial guess on entry and the solution on exit. Converged when
/// ||D^{-1/2} r|| <= tol * ||D^{-1/2} b|| with D = diag(A). Throws
/// LinearSolveError after `max_iterations` without convergence.
KrylovResult conjugate_gradient(const LinearOperator& apply, std::span<const double> diagonal,
                                std::span<const double> rhs, std::span<double> x, double tol,
                                int max_iterations);

}  // namespace tumorinv
