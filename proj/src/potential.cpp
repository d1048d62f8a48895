#include "sphgrad/potential.hpp"

#include <cmath>
#include <numbers>
#include <limits>
#include <sstream>

namespace sphgrad {

ProfileValues CosineProfile::eval(GeodesicAngle xi) const {
  const double a = xi.radians();
  const double kd = static_cast<double>(k);
  // Exact values at the endpoints, where f' must vanish.
  if (a == 0.0) return {1.0 / (kd * kd), 0.0, -1.0};
  if (a == std::numbers::pi) {
    const double c = (k % 2 == 0) ? 1.0 : -1.0;
    return {c / (kd * kd), 0.0, -c};
  }
  const double c = std::cos(kd * a);
  const double s = std::sin(kd * a);
  return {c / (kd * kd), -s / kd, -c};
}

ProfileValues profile_eval(const CosineProfile& profile, GeodesicAngle xi) {
  return profile.eval(xi);
}

PotentialSpec PotentialSpec::zero(int n) {
  PotentialSpec spec;
  spec.n = n;
  return spec;
}

void PotentialSpec::check_shape() const {
  if (n < 1) throw DimensionError("sphere dimension must be >= 1");
  for (const auto& c : components) {
    if (c.anchor.dim() != n) {
      throw DimensionError("anchor has dimension " + std::to_string(c.anchor.dim()) +
                           ", spec has " + std::to_string(n));
    }
    if (c.profile.k < 1) throw ParseError("profile frequency k must be >= 1");
  }
}

AdmissibilityReport admissibility(const PotentialSpec& spec) {
  AdmissibilityReport r;
  for (const auto& c : spec.components) r.l1_norm += std::abs(c.weight);
  r.margin = 1.0 - spec.slack - r.l1_norm;
  r.admissible = r.margin >= -1e-12;
  return r;
}

AdmissibilityReport validate_spec(const PotentialSpec& spec) {
  spec.check_shape();
  const auto r = admissibility(spec);
  if (!r.admissible) {
    std::ostringstream msg;
    msg << "inadmissible potential: sum |theta| = " << r.l1_norm << " exceeds 1 - delta = "
        << 1.0 - spec.slack << " (margin " << r.margin << ")";
    throw InadmissibleSpec(msg.str(), r.margin);
  }
  return r;
}

double potential_value(const PotentialSpec& spec, const SpherePoint& x) {
  double value = 0.0;
  for (const auto& c : spec.components) {
    value += c.weight * c.profile.eval(geodesic_distance(x, c.anchor)).f;
  }
  return value;
}

TangentVector potential_gradient(const PotentialSpec& spec, const SpherePoint& x) {
  const Eigen::VectorXd& p = x.coords();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(p.size());
  for (const auto& c : spec.components) {
    const double cos_a = p.dot(c.anchor.coords());
    Eigen::VectorXd w = c.anchor.coords() - cos_a * p;
    const double sin_a = w.norm();
    if (sin_a < kSinEps) continue;
    const double alpha = std::atan2(sin_a, cos_a);
    const double df = c.profile.eval(GeodesicAngle(alpha)).df;
    v -= (c.weight * df / sin_a) * w;
  }
  return TangentVector(x, std::move(v));
}

double trace_norm(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().sum();
}

AdmissibilityReport validate_quadratic(const QuadraticSpec& q) {
  if (q.mu.size() < 2 || q.A.rows() != q.mu.size() || q.A.cols() != q.mu.size()) {
    throw DimensionError("quadratic spec needs mu in R^{n+1} and A in R^{(n+1)x(n+1)}");
  }
  if ((q.A - q.A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + q.A.cwiseAbs().maxCoeff())) {
    throw ParseError("quadratic spec matrix A must be symmetric");
  }
  AdmissibilityReport r;
  r.l1_norm = q.mu.norm() + trace_norm(q.A);
  r.margin = 1.0 - q.slack - r.l1_norm;
  r.admissible = r.margin >= -1e-12;
  if (!r.admissible) {
    std::ostringstream msg;
    msg << "inadmissible quadratic potential: |mu| + |A|_1 = " << r.l1_norm
        << " exceeds 1 - delta = " << 1.0 - q.slack << " (margin " << r.margin << ")";
    throw InadmissibleSpec(msg.str(), r.margin);
  }
  return r;
}

PotentialSpec quadratic_to_components(const QuadraticSpec& q) {
  validate_quadratic(q);
  return decompose_quadratic(q);
}

PotentialSpec decompose_quadratic(const QuadraticSpec& q) {
  if (q.mu.size() < 2 || q.A.rows() != q.mu.size() || q.A.cols() != q.mu.size()) {
    throw DimensionError("quadratic spec needs mu in R^{n+1} and A in R^{(n+1)x(n+1)}");
  }
  PotentialSpec spec = PotentialSpec::zero(q.n());
  spec.slack = q.slack;
  const double mu_norm = q.mu.norm();
  if (mu_norm > 0.0) {
    spec.components.push_back({CosineProfile{1}, SpherePoint(q.mu), mu_norm});
  }
  const Eigen::MatrixXd sym = 0.5 * (q.A + q.A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  for (Eigen::Index j = 0; j < sym.rows(); ++j) {
    const double lambda = eig.eigenvalues()[j];
    if (lambda == 0.0) continue;
    // k^-2 cos(2 d) = (2 (x'u)^2 - 1) / 4, so weight lambda gives lambda (x'u)^2 / 2.
    spec.components.push_back({CosineProfile{2}, SpherePoint(eig.eigenvectors().col(j)), lambda});
  }
  return spec;
}

PotentialSpec blend(const PotentialSpec& spec0, const PotentialSpec& spec1, double t) {
  if (spec0.n != spec1.n) throw DimensionError("cannot blend potentials on different spheres");
  PotentialSpec out = PotentialSpec::zero(spec0.n);
  out.slack = (1.0 - t) * spec0.slack + t * spec1.slack;
  out.components.reserve(spec0.components.size() + spec1.components.size());
  for (auto c : spec0.components) {
    c.weight *= 1.0 - t;
    out.components.push_back(std::move(c));
  }
  for (auto c : spec1.components) {
    c.weight *= t;
    out.components.push_back(std::move(c));
  }
  return out;
}

PotentialSpec random_admissible_spec(Rng& rng, int n, int max_components, int max_k,
                                     double max_l1, double slack) {
  std::uniform_int_distribution<int> count(1, max_components);
  std::uniform_int_distribution<int> freq(1, max_k);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PotentialSpec spec = PotentialSpec::zero(n);
  spec.slack = slack;
  const int p = count(rng);
  std::vector<double> raw(p);
  double total = 0.0;
  for (auto& r : raw) {
    r = unit(rng) + 1e-3;
    total += r;
  }
  const double l1 = std::min(max_l1, 1.0 - slack) * unit(rng);
  for (int i = 0; i < p; ++i) {
    const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
    const int k = freq(rng);
    spec.components.push_back({CosineProfile{k}, uniform_sample(n, rng), sign * l1 * raw[i] / total});
  }
  return spec;
}

ProfileCheck check_radial_profile(const std::function<ProfileValues(double)>& profile,
                                  int grid_points, double endpoint_tol) {
  ProfileCheck check;
  check.df_at_zero = profile(0.0).df;
  check.df_at_pi = profile(std::numbers::pi).df;
  check.min_d2f = std::numeric_limits<double>::infinity();
  // f'' > -1 only has to hold almost everywhere: isolated touching points
  // (e.g. cos(k xi) = 1) are allowed, runs of two or more grid nodes are not.
  bool touching = false;
  bool run = false;
  for (int i = 0; i < grid_points; ++i) {
    const double xi = std::numbers::pi * i / (grid_points - 1);
    const double d2f = profile(xi).d2f;
    check.min_d2f = std::min(check.min_d2f, d2f);
    const bool touch = d2f <= -1.0 + 1e-12;
    run = run || (touch && touching);
    touching = touch;
  }
  check.pass = std::abs(check.df_at_zero) <= endpoint_tol &&
               std::abs(check.df_at_pi) <= endpoint_tol && check.min_d2f >= -1.0 - 1e-12 && !run;
  return check;
}

}  // namespace sphgrad
