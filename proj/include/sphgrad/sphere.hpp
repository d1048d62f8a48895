#pragma once

// Geometry of the unit sphere S^n embedded in R^{n+1}.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "sphgrad/errors.hpp"

namespace sphgrad {

/// Distance from pi below which log_map refuses to pick a direction.
inline constexpr double kAntipodeEps = 1e-9;

/// A point of S^n stored by its ambient coordinates. Always unit length.
class SpherePoint {
 public:
  /// Normalizes coords. Throws DimensionError for fewer than two
  /// coordinates or a (numerically) zero vector.
  explicit SpherePoint(Eigen::VectorXd coords);

  /// The standard basis vector e_{axis} (0-based) in R^{ambient}.
  static SpherePoint axis(int ambient, int axis);

  const Eigen::VectorXd& coords() const { return coords_; }
  double operator[](Eigen::Index i) const { return coords_[i]; }
  /// Intrinsic dimension n of the sphere.
  int dim() const { return static_cast<int>(coords_.size()) - 1; }
  int ambient_dim() const { return static_cast<int>(coords_.size()); }

 private:
  Eigen::VectorXd coords_;
};

/// A tangent vector at base. The component along base is projected out on
/// construction, so base.coords().dot(vec()) == 0 up to rounding.
class TangentVector {
 public:
  TangentVector(SpherePoint base, Eigen::VectorXd vec);
  /// The zero vector at base.
  static TangentVector zero(const SpherePoint& base);

  const SpherePoint& base() const { return base_; }
  const Eigen::VectorXd& vec() const { return vec_; }
  double norm() const { return vec_.norm(); }

 private:
  SpherePoint base_;
  Eigen::VectorXd vec_;
};

/// An angle in [0, pi].
class GeodesicAngle {
 public:
  /// Clamps into [0, pi].
  explicit GeodesicAngle(double radians);
  double radians() const { return value_; }

 private:
  double value_;
};

GeodesicAngle geodesic_distance(const SpherePoint& x, const SpherePoint& y);

/// c(x, y) = d(x, y)^2 / 2.
double cost(const SpherePoint& x, const SpherePoint& y);

/// exp_x(v) = cos|v| x + sin|v| v/|v|.
SpherePoint exp_map(const TangentVector& v);

/// Inverse of exp_map away from the antipode. |result| == d(x, y).
/// Throws AntipodalError when d(x, y) >= pi - antipode_eps.
TangentVector log_map(const SpherePoint& x, const SpherePoint& y,
                      double antipode_eps = kAntipodeEps);

/// exp_z((1 - t) log_z(y0) + t log_z(y1)), t clamped to [0, 1].
SpherePoint c_segment(const SpherePoint& y0, const SpherePoint& y1, const SpherePoint& z, double t);

/// n orthonormal tangent vectors at x, obtained by Gram-Schmidt on the
/// standard axes in index order, skipping the axis most aligned with x.
std::vector<TangentVector> tangent_basis(const SpherePoint& x);

/// tangent_basis as the columns of an (n+1) x n matrix.
Eigen::MatrixXd tangent_frame(const SpherePoint& x);

using Rng = std::mt19937_64;

/// Uniform point on S^n from a normalized standard Gaussian vector.
SpherePoint uniform_sample(int n, Rng& rng);

/// Independent stream for item `index` of a run seeded with `seed`.
Rng derived_stream(std::uint64_t seed, std::uint64_t index);

}  // namespace sphgrad
