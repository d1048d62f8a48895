#include "sphgrad/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sphgrad/density.hpp"
#include "sphgrad/parallel.hpp"

namespace sphgrad {

std::vector<SpherePoint> fibonacci_mesh(int nodes) {
  if (nodes < 1) throw ParseError("mesh needs at least one node");
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<SpherePoint> mesh;
  mesh.reserve(nodes);
  for (int i = 0; i < nodes; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / nodes;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    mesh.emplace_back(Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z));
  }
  return mesh;
}

double mesh_spacing(int nodes) { return std::sqrt(4.0 * std::numbers::pi / nodes); }

GridFunction sample_potential(const PotentialSpec& spec, const std::vector<SpherePoint>& nodes) {
  GridFunction f{nodes, {}};
  f.values.reserve(nodes.size());
  for (const auto& x : nodes) f.values.push_back(potential_value(spec, x));
  return f;
}

GridFunction c_transform_grid(const GridFunction& f, int threads) {
  const std::size_t count = f.nodes.size();
  if (f.values.size() != count) throw DimensionError("grid function has mismatched sizes");
  const int ambient = count ? f.nodes.front().ambient_dim() : 0;
  // Contiguous coordinates keep the O(N^2) loop cache friendly.
  Eigen::MatrixXd coords(ambient, count);
  for (std::size_t i = 0; i < count; ++i) coords.col(i) = f.nodes[i].coords();

  GridFunction out{f.nodes, std::vector<double>(count)};
  parallel_for(count, threads, [&](std::size_t j) {
    const Eigen::VectorXd y = coords.col(j);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count; ++i) {
      const double d = (i == j) ? 0.0 : std::acos(std::clamp(coords.col(i).dot(y), -1.0, 1.0));
      best = std::max(best, -0.5 * d * d - f.values[i]);
    }
    out.values[j] = best;
  });
  return out;
}

double c_convexity_deviation(const PotentialSpec& spec, int nodes, int threads) {
  if (spec.n != 2) throw DimensionError("c-convexity checks run on S^2 only");
  const GridFunction phi = sample_potential(spec, fibonacci_mesh(nodes));
  const GridFunction phi_cc = c_transform_grid(c_transform_grid(phi, threads), threads);
  double dev = 0.0;
  for (std::size_t i = 0; i < phi.values.size(); ++i) {
    dev = std::max(dev, std::abs(phi_cc.values[i] - phi.values[i]));
  }
  return dev;
}

CConvexityReport check_c_convexity(const PotentialSpec& spec, int nodes, double constant,
                                   int threads) {
  CConvexityReport r;
  r.nodes = nodes;
  r.deviation = c_convexity_deviation(spec, nodes, threads);
  r.spacing = mesh_spacing(nodes);
  r.constant = constant;
  r.threshold = 3.0 * constant * r.spacing;
  r.pass = r.deviation <= r.threshold;
  return r;
}

RefinementStudy refinement_study(const PotentialSpec& spec, int coarse_nodes, int threads) {
  RefinementStudy s;
  s.coarse_nodes = coarse_nodes;
  s.fine_nodes = 2 * coarse_nodes;
  s.coarse_deviation = c_convexity_deviation(spec, s.coarse_nodes, threads);
  s.fine_deviation = c_convexity_deviation(spec, s.fine_nodes, threads);
  if (s.coarse_deviation > 0.0) {
    s.ratio = s.fine_deviation / s.coarse_deviation;
  } else {
    s.ratio = s.fine_deviation > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  s.constant = std::max(s.coarse_deviation / mesh_spacing(s.coarse_nodes),
                        s.fine_deviation / mesh_spacing(s.fine_nodes));
  return s;
}

std::vector<std::pair<std::string, PotentialSpec>> calibration_potentials() {
  const auto e = [](int i) { return SpherePoint::axis(3, i); };
  const Eigen::Vector3d e1 = e(0).coords();
  const Eigen::Vector3d e2 = e(1).coords();
  const Eigen::Vector3d e3 = e(2).coords();
  const Eigen::Vector3d zero = Eigen::Vector3d::Zero();
  const auto quad = [](const Eigen::Vector3d& mu, const Eigen::Matrix3d& A) {
    return quadratic_to_components(QuadraticSpec{mu, A, 0.0});
  };
  const auto cosines = [](std::vector<SpherePoint> z, std::vector<int> k, std::vector<double> w) {
    PotentialSpec s;
    for (std::size_t i = 0; i < z.size(); ++i) s.components.push_back({CosineProfile{k[i]}, z[i], w[i]});
    return s;
  };
  std::vector<std::pair<std::string, PotentialSpec>> out{
      {"concentration", quad(e1, Eigen::Matrix3d::Zero())},
      {"negative-dipole", quad(zero, e1 * e1.transpose())},
      {"positive-dipole", quad(zero, -e1 * e1.transpose())},
      {"complementary-dipoles", quad(zero, -0.5 * e1 * e1.transpose() + 0.5 * e2 * e2.transpose())},
      {"unbalanced-dipole", quad(0.5 * e1, -0.5 * e1 * e1.transpose())},
      {"general-quadratic", quad(e1 / 3.0, (-e2 * e2.transpose() + e3 * e3.transpose()) / 3.0)},
      {"k3", cosines({e(0)}, {3}, {1.0})},
      {"k33", cosines({e(0), e(1)}, {3, 3}, {0.5, 0.5})},
      {"k99", cosines({e(0), e(1)}, {9, 9}, {0.5, 0.5})},
      {"k30-4", cosines({e(0), SpherePoint(Eigen::Vector3d(1.0, 1.0, 0.0))}, {30, 4}, {0.5, 0.5})},
      {"k2-3", cosines({e(0), e(1)}, {2, 3}, {0.5, 0.5})},
  };
  for (auto& [name, spec] : out) {
    for (auto& c : spec.components) c.weight *= kCalibrationScale;
  }
  return out;
}

std::vector<double> uniform_t_grid(int intervals) {
  std::vector<double> t(intervals + 1);
  for (int i = 0; i <= intervals; ++i) t[i] = static_cast<double>(i) / intervals;
  t.back() = 1.0;
  return t;
}

std::vector<double> second_differences(const std::vector<double>& t,
                                       const std::vector<double>& f) {
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    const double l = (t[i] - t[i - 1]) / (t[i + 1] - t[i - 1]);
    out.push_back(2.0 * ((1.0 - l) * f[i - 1] + l * f[i + 1] - f[i]));
  }
  return out;
}

JacobianInequalityReport check_jacobian_inequality(const PotentialSpec& spec0,
                                                   const PotentialSpec& spec1,
                                                   const SpherePoint& x,
                                                   const std::vector<double>& t_grid) {
  validate_spec(spec0);
  validate_spec(spec1);
  const double n = x.dim();
  const auto end0 = jacobian_parts(blend(spec0, spec1, 0.0), x);
  const auto end1 = jacobian_parts(blend(spec0, spec1, 1.0), x);
  const double root0 = std::pow(end0.det, 1.0 / n);
  const double root1 = std::pow(end1.det, 1.0 / n);

  JacobianInequalityReport r;
  r.min_margin = std::numeric_limits<double>::infinity();
  r.min_ratio_margin = std::numeric_limits<double>::infinity();
  std::vector<double> log_j;
  log_j.reserve(t_grid.size());
  for (double t : t_grid) {
    const auto parts = (t == 0.0) ? end0 : (t == 1.0 ? end1 : jacobian_parts(blend(spec0, spec1, t), x));
    const double lj = parts.log_density();
    log_j.push_back(lj);
    const double margin = lj - (1.0 - t) * end0.log_density() - t * end1.log_density();
    if (margin < r.min_margin) {
      r.min_margin = margin;
      r.worst_t = t;
    }
    const double ratio = std::pow(parts.det, 1.0 / n) - (1.0 - t) * root0 - t * root1;
    r.min_ratio_margin = std::min(r.min_ratio_margin, ratio);
  }
  const auto sd = second_differences(t_grid, log_j);
  r.max_second_difference = sd.empty() ? 0.0 : *std::max_element(sd.begin(), sd.end());
  r.pass = r.min_margin >= -kMarginSlack && r.min_ratio_margin >= -kMarginSlack &&
           r.max_second_difference <= kCurvatureSlack;
  return r;
}

SlidingMountainReport check_sliding_mountain(const SpherePoint& x, const SpherePoint& z,
                                             const SpherePoint& y0, const SpherePoint& y1,
                                             const std::vector<double>& t_grid) {
  std::vector<double> f;
  f.reserve(t_grid.size());
  for (double t : t_grid) {
    const SpherePoint y = c_segment(y0, y1, z, t);
    f.push_back(cost(z, y) - cost(x, y));
  }
  const auto sd = second_differences(t_grid, f);
  SlidingMountainReport r;
  r.min_second_difference = sd.empty() ? 0.0 : *std::min_element(sd.begin(), sd.end());
  r.pass = r.min_second_difference >= -kCurvatureSlack;
  return r;
}

FactoredJacobianReport check_factored_jacobian(const PotentialSpec& spec, const SpherePoint& x) {
  validate_spec(spec);
  const auto parts = jacobian_parts(spec, x);
  const Eigen::MatrixXd frame = tangent_frame(x);
  const Eigen::MatrixXd H = frame.transpose() * parts.H * frame;
  const Eigen::MatrixXd hess = frame.transpose() * parts.hessian * frame;
  FactoredJacobianReport r;
  r.ambient_density = parts.density();
  r.factored_density = parts.sigma * (H + hess).determinant();
  r.relative_mismatch = std::abs(r.factored_density - r.ambient_density) / std::abs(r.ambient_density);
  r.pass = r.relative_mismatch <= kFactoredTol;
  return r;
}

LogSigmaReport check_log_sigma_concavity(const PotentialSpec& spec0, const PotentialSpec& spec1,
                                         const SpherePoint& x, const std::vector<double>& t_grid) {
  std::vector<double> log_sigma;
  log_sigma.reserve(t_grid.size());
  for (double t : t_grid) log_sigma.push_back(jacobian_parts(blend(spec0, spec1, t), x).log_sigma);
  const auto sd = second_differences(t_grid, log_sigma);
  LogSigmaReport r;
  r.max_second_difference = sd.empty() ? 0.0 : *std::max_element(sd.begin(), sd.end());
  r.pass = r.max_second_difference <= kCurvatureSlack;
  return r;
}

}  // namespace sphgrad
