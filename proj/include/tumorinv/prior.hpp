#pragma once

#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tumorinv/grid.hpp"

namespace tumorinv {

using Rng = std::mt19937_64;

struct UniformLaw {
  double lo = 0.0;
  double hi = 1.0;
};

struct NormalLaw {
  double mean = 0.0;
  double sd = 1.0;
};

using ScalarLaw = std::variant<UniformLaw, NormalLaw>;

/// Standard deviation of a scalar law.
double law_scale(const ScalarLaw& law);

/// One named entry of the parametric block z (e.g. "h", "c1", "c2").
struct ParamPrior {
  std::string name;
  ScalarLaw law;
};

enum class BasisKind {
  None,        ///< no field block
  Test3,       ///< sin(pi x), sin(pi y), cos(pi x) cos(pi y)
  TensorSine,  ///< Dirichlet Laplacian eigenfunctions of the rectangle
};

/// Truncated expansion h(x) = h0 + sum_i g_i phi_i(x), g_i ~ N(0, c_i^2).
struct FieldPrior {
  BasisKind basis = BasisKind::None;
  double h0 = 0.0;
  std::vector<double> stddevs;  ///< c_i, one per mode
  double decay = 2.0;           ///< s, for TensorSine
  int modes() const { return static_cast<int>(stddevs.size()); }
};

struct PriorSpec {
  std::vector<ParamPrior> params;
  FieldPrior field;

  /// Throws std::invalid_argument listing every violated constraint.
  void validate() const;
  std::size_t dimension() const { return params.size() + field.stddevs.size(); }
  std::vector<std::string> names() const;
  /// Index of a parametric entry, or -1.
  int find(const std::string& name) const;
  /// Prior standard deviation of each flattened coordinate.
  std::vector<double> scales() const;
};

/// The unknown u = (z, g): parametric block and field coefficients.
struct ModelParams {
  std::vector<double> z;
  std::vector<double> g;

  std::vector<double> flatten() const;
  static ModelParams from_flat(const PriorSpec& spec, std::span<const double> flat);
  /// max(|z|_inf, |g|_inf)
  double sup_norm() const;
  bool operator==(const ModelParams&) const = default;
};

ModelParams sample_prior(const PriorSpec& spec, Rng& rng);

/// Sum of per-entry log densities up to a constant; -inf outside uniform support.
double log_prior_density(const PriorSpec& spec, const ModelParams& u);

/// Dirichlet eigenpairs of -Laplace on a rectangle, sorted by eigenvalue.
struct SineBasis {
  struct Mode {
    int k;
    int l;
    double eigenvalue;
    double gamma;  ///< eigenvalue^(-s/2)
  };
  double x_lo = 0.0, x_len = 1.0, y_lo = 0.0, y_len = 1.0;
  std::vector<Mode> modes;

  /// sin(k pi (x - x_lo)/Lx) sin(l pi (y - y_lo)/Ly), amplitude 1.
  double operator()(std::size_t i, double x, double y) const;
};

SineBasis tensor_sine_basis(const Grid& grid, int n_modes, double decay);

/// phi_i(x, y) of the fixed three-mode Test-3 basis.
double test3_basis(int i, double x, double y);
/// gamma_i of the fixed three-mode Test-3 basis: 1/pi^2, 1/pi^2, 1/(2 pi^2).
double test3_gamma(int i);

/// Cell-centred h(x). If the parametric block has an entry "h" it replaces
/// h0, so with no field block the result is the constant h.
GrowthField evaluate_growth_field(const PriorSpec& spec, const ModelParams& u, const Grid& grid);

}  // namespace tumorinv
