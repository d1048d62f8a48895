#pragma once

// Rotationally symmetric potentials phi(x) = sum_i theta_i f_i(d(x, z_i))
// built from cosine profiles f(xi) = k^-2 cos(k xi).

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "sphgrad/sphere.hpp"

namespace sphgrad {

/// Below this sin(alpha_i) a component is treated as sitting on its anchor
/// (or the antipode) and the analytic limit is used.
inline constexpr double kSinEps = 1e-7;

struct ProfileValues {
  double f;
  double df;
  double d2f;
};

/// f(xi) = k^-2 cos(k xi). k = 1 is the linear potential, k = 2 the
/// quadratic one.
struct CosineProfile {
  int k = 1;

  ProfileValues eval(GeodesicAngle xi) const;
};

struct PotentialComponent {
  CosineProfile profile;
  SpherePoint anchor;
  double weight = 0.0;
};

struct PotentialSpec {
  /// Intrinsic sphere dimension; every anchor must live in R^{n+1}.
  int n = 2;
  std::vector<PotentialComponent> components;
  /// Admissibility requires sum |theta_i| <= 1 - slack.
  double slack = 0.0;

  /// The zero potential on S^n.
  static PotentialSpec zero(int n = 2);
  /// Checks anchor dimensions and profile frequencies.
  void check_shape() const;
};

/// phi_{mu,A}(x) = x'mu + x'Ax / 2.
struct QuadraticSpec {
  Eigen::VectorXd mu;
  Eigen::MatrixXd A;
  double slack = 0.0;

  int n() const { return static_cast<int>(mu.size()) - 1; }
};

struct AdmissibilityReport {
  double l1_norm = 0.0;
  /// 1 - slack - l1_norm; non-negative when admissible.
  double margin = 0.0;
  bool admissible = true;
};

/// Non-throwing admissibility summary.
AdmissibilityReport admissibility(const PotentialSpec& spec);

/// Same as admissibility() but throws InadmissibleSpec on failure.
AdmissibilityReport validate_spec(const PotentialSpec& spec);

ProfileValues profile_eval(const CosineProfile& profile, GeodesicAngle xi);

double potential_value(const PotentialSpec& spec, const SpherePoint& x);

/// grad phi(x) = -sum_i theta_i f_i'(alpha_i) e_i. Components with
/// sin(alpha_i) < kSinEps contribute zero (f' vanishes at 0 and pi).
TangentVector potential_gradient(const PotentialSpec& spec, const SpherePoint& x);

/// Sum of absolute eigenvalues of a symmetric matrix.
double trace_norm(const Eigen::MatrixXd& A);

/// |mu| + |A|_1 <= 1 - slack check for a quadratic spec.
AdmissibilityReport validate_quadratic(const QuadraticSpec& q);

/// Rewrites x'mu + x'Ax/2 as cosine components: a k = 1 component along
/// mu/|mu| with weight |mu| and one k = 2 component per non-zero eigenpair
/// (u_j, lambda_j) of A. The result equals the quadratic potential up to an
/// additive constant.
PotentialSpec quadratic_to_components(const QuadraticSpec& q);

/// quadratic_to_components without the admissibility check. Used for
/// finite-difference probes that may step just outside the constraint set.
PotentialSpec decompose_quadratic(const QuadraticSpec& q);

/// phi_t = (1 - t) phi_0 + t phi_1 as a single spec (components concatenated).
PotentialSpec blend(const PotentialSpec& spec0, const PotentialSpec& spec1, double t);

/// Random admissible spec with 1..max_components components, frequencies in
/// 1..max_k, uniform anchors and sum |theta_i| uniform in [0, max_l1].
PotentialSpec random_admissible_spec(Rng& rng, int n, int max_components = 4, int max_k = 5,
                                     double max_l1 = 0.95, double slack = 0.0);

/// Extension point for radial profiles other than the cosine family. Checks
/// the sufficient wrapping conditions f'(0) = f'(pi) = 0 and f'' > -1 on a
/// uniform grid of [0, pi].
struct ProfileCheck {
  double df_at_zero = 0.0;
  double df_at_pi = 0.0;
  double min_d2f = 0.0;
  bool pass = false;
};
ProfileCheck check_radial_profile(const std::function<ProfileValues(double)>& profile,
                                  int grid_points = 2001, double endpoint_tol = 1e-12);

}  // namespace sphgrad
