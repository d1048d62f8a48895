#pragma once

// The gradient map G(x) = exp_x(grad phi(x)) and its Jacobian determinant,
// which is the pull-back density of the uniform measure on S^n.

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "sphgrad/potential.hpp"

namespace sphgrad {

/// Series fallback threshold for |grad phi(x)|.
inline constexpr double kSmallGradient = 1e-7;
/// Distance from pi at which a gradient is declared non-wrapping.
inline constexpr double kWrapEps = 1e-9;

/// Ingredients of p(x) = sigma * det(M), M = xx' + H + sum_i theta_i K_i.
struct JacobianParts {
  explicit JacobianParts(TangentVector gradient) : v(std::move(gradient)) {}

  TangentVector v;
  /// (sin|v| / |v|)^(n-1), the Jacobian of exp_x at v.
  double sigma = 1.0;
  double log_sigma = 0.0;
  /// Hessian of c(., G(x)) at x (tangential block).
  Eigen::MatrixXd H;
  /// Hessian of the potential, sum_i theta_i K_i.
  Eigen::MatrixXd hessian;
  Eigen::MatrixXd M;
  double det = 1.0;
  double log_det = 0.0;

  double density() const { return sigma * det; }
  double log_density() const { return log_sigma + log_det; }
};

SpherePoint gradient_map(const PotentialSpec& spec, const SpherePoint& x);

/// Hessian at x = v.base() of c(., exp_x(v)), as an ambient matrix acting on
/// the tangent space: ee' + |v| cot|v| (I - xx' - ee'), e = v/|v|.
Eigen::MatrixXd cost_hessian(const TangentVector& v);

/// Riemannian Hessian of the potential at x, sum_i theta_i K_i.
Eigen::MatrixXd potential_hessian(const PotentialSpec& spec, const SpherePoint& x);

/// Throws WrapViolation if |grad phi(x)| >= pi - kWrapEps and InternalError
/// if det(M) is not positive.
JacobianParts jacobian_parts(const PotentialSpec& spec, const SpherePoint& x);

double density(const PotentialSpec& spec, const SpherePoint& x);

/// (n - 1) log(sin|v|/|v|) + log det(M), via an LU log-determinant.
double log_density(const PotentialSpec& spec, const SpherePoint& x);

/// Density sampled on a lon/lat lattice of S^2. With resolution r there are
/// r + 1 latitudes from -90 to 90 and 2r longitudes from -180 (inclusive)
/// to 180 (exclusive); values are stored latitude-major.
struct DensityGrid {
  int resolution = 0;
  std::vector<double> lat_deg;
  std::vector<double> lon_deg;
  std::vector<double> values;

  double at(std::size_t lat_index, std::size_t lon_index) const {
    return values[lat_index * lon_deg.size() + lon_index];
  }
  /// Mean of the density weighted by cos(lat); 1 up to quadrature error for
  /// a normalized density.
  double weighted_mean() const;
  /// Mass of the hemisphere z > 0 by the same quadrature (equator nodes
  /// count half).
  double northern_mass() const;
};

/// (cos lat cos lon, cos lat sin lon, sin lat).
SpherePoint from_lon_lat(double lon_deg, double lat_deg);
/// Inverse of from_lon_lat, lon in [-180, 180).
std::pair<double, double> to_lon_lat(const SpherePoint& x);

/// Requires spec.n == 2 (DimensionError otherwise). threads <= 0 uses all cores.
DensityGrid density_grid(const PotentialSpec& spec, int resolution, int threads = 1);

/// Header `lon_deg,lat_deg,density`, one row per node, 17 significant digits.
void write_density_grid_csv(const DensityGrid& grid, std::ostream& out);

}  // namespace sphgrad
