#include "sphgrad/density.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include "sphgrad/parallel.hpp"

namespace sphgrad {

namespace {

constexpr double kDegree = std::numbers::pi / 180.0;

// sin(a)/a with a series below kSmallGradient.
double sinc(double a) {
  if (a < kSmallGradient) return 1.0 - a * a / 6.0 + a * a * a * a / 120.0;
  return std::sin(a) / a;
}

// a cos(a) / sin(a) with a series below kSmallGradient.
double a_cot_a(double a) {
  if (a < kSmallGradient) return 1.0 - a * a / 3.0;
  return a * std::cos(a) / std::sin(a);
}

}  // namespace

SpherePoint gradient_map(const PotentialSpec& spec, const SpherePoint& x) {
  return exp_map(potential_gradient(spec, x));
}

Eigen::MatrixXd cost_hessian(const TangentVector& v) {
  const Eigen::VectorXd& p = v.base().coords();
  const int ambient = static_cast<int>(p.size());
  const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(ambient, ambient) - p * p.transpose();
  const double alpha = v.norm();
  if (alpha < kSmallGradient) return proj;
  const Eigen::VectorXd e = v.vec() / alpha;
  const Eigen::MatrixXd ee = e * e.transpose();
  return ee + a_cot_a(alpha) * (proj - ee);
}

Eigen::MatrixXd potential_hessian(const PotentialSpec& spec, const SpherePoint& x) {
  const int ambient = x.ambient_dim();
  const Eigen::VectorXd& p = x.coords();
  const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(ambient, ambient) - p * p.transpose();
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(ambient, ambient);
  for (const auto& c : spec.components) {
    const double cos_a = p.dot(c.anchor.coords());
    const Eigen::VectorXd w = c.anchor.coords() - cos_a * p;
    const double sin_a = w.norm();
    const auto pv = c.profile.eval(GeodesicAngle(std::atan2(sin_a, cos_a)));
    if (sin_a < kSinEps) {
      // f'(a) cos(a) / sin(a) -> f''(a) at a in {0, pi}, so K = f'' (I - xx').
      hess += c.weight * pv.d2f * proj;
      continue;
    }
    const Eigen::VectorXd e = w / sin_a;
    const Eigen::MatrixXd ee = e * e.transpose();
    hess += c.weight * (pv.d2f * ee + (pv.df * cos_a / sin_a) * (proj - ee));
  }
  return hess;
}

JacobianParts jacobian_parts(const PotentialSpec& spec, const SpherePoint& x) {
  const int ambient = x.ambient_dim();
  const int n = x.dim();
  const Eigen::VectorXd& p = x.coords();
  const Eigen::MatrixXd xx = p * p.transpose();

  JacobianParts parts(potential_gradient(spec, x));
  const double alpha = parts.v.norm();
  if (alpha >= std::numbers::pi - kWrapEps) throw WrapViolation(alpha);

  const double s = sinc(alpha);
  parts.sigma = std::pow(s, n - 1);
  parts.log_sigma = (n - 1) * std::log(s);
  parts.H = cost_hessian(parts.v);
  parts.hessian = potential_hessian(spec, x);

  parts.M = xx + parts.H + parts.hessian;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(parts.M);
  const Eigen::MatrixXd& U = lu.matrixLU();
  double sign = lu.permutationP().determinant();
  double log_abs = 0.0;
  for (int i = 0; i < ambient; ++i) {
    const double u = U(i, i);
    if (u < 0.0) sign = -sign;
    log_abs += std::log(std::abs(u));
  }
  parts.det = lu.determinant();
  // exact boundary specs can reach det = 0; allow rounding noise there
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() *
                     std::pow(std::max(1.0, parts.M.norm()), ambient);
  if (std::isfinite(parts.det) && std::abs(parts.det) <= tol) {
    parts.det = 0.0;
    parts.log_det = -std::numeric_limits<double>::infinity();
    return parts;
  }
  if (!(sign > 0.0) || !(parts.det > 0.0)) {
    throw InternalError("non-positive Jacobian determinant " + std::to_string(parts.det) +
                        " for an admissible potential");
  }
  parts.log_det = log_abs;
  return parts;
}

double density(const PotentialSpec& spec, const SpherePoint& x) {
  return jacobian_parts(spec, x).density();
}

double log_density(const PotentialSpec& spec, const SpherePoint& x) {
  return jacobian_parts(spec, x).log_density();
}

SpherePoint from_lon_lat(double lon_deg, double lat_deg) {
  const double lon = lon_deg * kDegree;
  const double lat = lat_deg * kDegree;
  return SpherePoint(Eigen::Vector3d(std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon),
                                     std::sin(lat)));
}

std::pair<double, double> to_lon_lat(const SpherePoint& x) {
  if (x.ambient_dim() != 3) throw DimensionError("lon/lat needs a point of S^2");
  const double lat = std::asin(std::clamp(x[2], -1.0, 1.0)) / kDegree;
  double lon = std::atan2(x[1], x[0]) / kDegree;
  if (lon >= 180.0) lon -= 360.0;
  return {lon, lat};
}

double DensityGrid::weighted_mean() const {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < lat_deg.size(); ++i) {
    const double w = std::cos(lat_deg[i] * kDegree);
    for (std::size_t j = 0; j < lon_deg.size(); ++j) {
      num += w * at(i, j);
      den += w;
    }
  }
  return num / den;
}

double DensityGrid::northern_mass() const {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < lat_deg.size(); ++i) {
    const double w = std::cos(lat_deg[i] * kDegree);
    const double share = lat_deg[i] > 0.0 ? 1.0 : (lat_deg[i] == 0.0 ? 0.5 : 0.0);
    for (std::size_t j = 0; j < lon_deg.size(); ++j) {
      num += share * w * at(i, j);
      den += w;
    }
  }
  return num / den;
}

DensityGrid density_grid(const PotentialSpec& spec, int resolution, int threads) {
  if (spec.n != 2) throw DimensionError("density grids are only defined on S^2");
  if (resolution < 1) throw ParseError("grid resolution must be >= 1");
  spec.check_shape();
  DensityGrid grid;
  grid.resolution = resolution;
  const double step = 180.0 / resolution;
  for (int i = 0; i <= resolution; ++i) grid.lat_deg.push_back(-90.0 + step * i);
  for (int j = 0; j < 2 * resolution; ++j) grid.lon_deg.push_back(-180.0 + step * j);
  const std::size_t nlon = grid.lon_deg.size();
  grid.values.assign(grid.lat_deg.size() * nlon, 0.0);
  parallel_for(grid.values.size(), threads, [&](std::size_t k) {
    const auto x = from_lon_lat(grid.lon_deg[k % nlon], grid.lat_deg[k / nlon]);
    grid.values[k] = density(spec, x);
  });
  return grid;
}

void write_density_grid_csv(const DensityGrid& grid, std::ostream& out) {
  out << "lon_deg,lat_deg,density\n";
  char buf[128];
  for (std::size_t i = 0; i < grid.lat_deg.size(); ++i) {
    for (std::size_t j = 0; j < grid.lon_deg.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid.lon_deg[j], grid.lat_deg[i],
                    grid.at(i, j));
      out << buf;
    }
  }
}

}  // namespace sphgrad
