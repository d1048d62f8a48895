#include "sphgrad/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace sphgrad {

SpherePoint::SpherePoint(Eigen::VectorXd coords) : coords_(std::move(coords)) {
  if (coords_.size() < 2) {
    throw DimensionError("a sphere point needs at least 2 coordinates, got " +
                         std::to_string(coords_.size()));
  }
  const double norm = coords_.norm();
  if (!(norm > 1e-300) || !std::isfinite(norm)) {
    throw DimensionError("cannot normalize a zero or non-finite vector");
  }
  coords_ /= norm;
}

SpherePoint SpherePoint::axis(int ambient, int axis) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(ambient);
  e[axis] = 1.0;
  return SpherePoint(std::move(e));
}

TangentVector::TangentVector(SpherePoint base, Eigen::VectorXd vec)
    : base_(std::move(base)), vec_(std::move(vec)) {
  if (vec_.size() != base_.coords().size()) {
    throw DimensionError("tangent vector and base point dimensions differ");
  }
  vec_ -= base_.coords().dot(vec_) * base_.coords();
}

TangentVector TangentVector::zero(const SpherePoint& base) {
  return TangentVector(base, Eigen::VectorXd::Zero(base.ambient_dim()));
}

GeodesicAngle::GeodesicAngle(double radians)
    : value_(std::clamp(radians, 0.0, std::numbers::pi)) {}

GeodesicAngle geodesic_distance(const SpherePoint& x, const SpherePoint& y) {
  // atan2 of the tangential and normal parts keeps full relative accuracy
  // at small distances, where arccos of the inner product loses half the digits.
  if (x.coords() == y.coords()) return GeodesicAngle(0.0);
  const double c = std::clamp(x.coords().dot(y.coords()), -1.0, 1.0);
  const double s = (y.coords() - c * x.coords()).norm();
  return GeodesicAngle(std::atan2(s, c));
}

double cost(const SpherePoint& x, const SpherePoint& y) {
  const double d = geodesic_distance(x, y).radians();
  return 0.5 * d * d;
}

SpherePoint exp_map(const TangentVector& v) {
  const double len = v.norm();
  if (len == 0.0) return v.base();
  return SpherePoint(std::cos(len) * v.base().coords() + (std::sin(len) / len) * v.vec());
}

TangentVector log_map(const SpherePoint& x, const SpherePoint& y, double antipode_eps) {
  const double c = std::clamp(x.coords().dot(y.coords()), -1.0, 1.0);
  Eigen::VectorXd w = y.coords() - c * x.coords();
  const double s = w.norm();
  const double d = std::atan2(s, c);
  if (d >= std::numbers::pi - antipode_eps) throw AntipodalError(d);
  if (s == 0.0) return TangentVector::zero(x);
  return TangentVector(x, (d / s) * w);
}

SpherePoint c_segment(const SpherePoint& y0, const SpherePoint& y1, const SpherePoint& z,
                      double t) {
  t = std::clamp(t, 0.0, 1.0);
  // Both logs are taken first so that an antipodal endpoint is reported
  // even when t selects the other endpoint.
  const TangentVector v0 = log_map(z, y0);
  const TangentVector v1 = log_map(z, y1);
  if (t == 0.0) return y0;
  if (t == 1.0) return y1;
  return exp_map(TangentVector(z, (1.0 - t) * v0.vec() + t * v1.vec()));
}

std::vector<TangentVector> tangent_basis(const SpherePoint& x) {
  const Eigen::VectorXd& p = x.coords();
  const int ambient = x.ambient_dim();
  Eigen::Index skip = 0;
  p.cwiseAbs().maxCoeff(&skip);

  std::vector<Eigen::VectorXd> done;
  done.reserve(ambient - 1);
  std::vector<TangentVector> basis;
  basis.reserve(ambient - 1);
  for (int j = 0; j < ambient; ++j) {
    if (j == skip) continue;
    Eigen::VectorXd b = Eigen::VectorXd::Unit(ambient, j);
    // Two passes of modified Gram-Schmidt.
    for (int pass = 0; pass < 2; ++pass) {
      b -= p.dot(b) * p;
      for (const auto& q : done) b -= q.dot(b) * q;
    }
    b.normalize();
    done.push_back(b);
    basis.emplace_back(x, b);
  }
  return basis;
}

Eigen::MatrixXd tangent_frame(const SpherePoint& x) {
  const auto basis = tangent_basis(x);
  Eigen::MatrixXd frame(x.ambient_dim(), x.dim());
  for (int j = 0; j < x.dim(); ++j) frame.col(j) = basis[j].vec();
  return frame;
}

SpherePoint uniform_sample(int n, Rng& rng) {
  if (n < 1) throw DimensionError("sphere dimension must be >= 1");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd g(n + 1);
  do {
    for (int i = 0; i <= n; ++i) g[i] = gauss(rng);
  } while (g.squaredNorm() < 1e-200);
  return SpherePoint(std::move(g));
}

Rng derived_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x5eedu};
  return Rng(seq);
}

}  // namespace sphgrad
