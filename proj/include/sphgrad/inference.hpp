#pragma once

// Likelihood, maximum-likelihood fitting and AIC for the spherical gradient
// model p(x | theta) = Jac(G_{phi_theta})(x).

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sphgrad/potential.hpp"

namespace sphgrad {

enum class ModelKind { components, quadratic };

/// A parametrized family phi_theta. For the components kind theta holds one
/// weight per (anchor, frequency) pair and the constraint is
/// sum |theta_i| <= 1 - delta. For the quadratic kind theta packs mu (n + 1
/// numbers) followed by the upper triangle of A row by row, and the
/// constraint is |mu| + |A|_1 <= 1 - delta.
struct ModelSpec {
  ModelKind kind = ModelKind::components;
  int n = 2;
  std::vector<SpherePoint> anchors;
  std::vector<int> frequencies;
  double delta = 1e-6;
  std::string name;

  static ModelSpec components_model(int n, std::vector<SpherePoint> anchors,
                                    std::vector<int> frequencies, double delta = 1e-6);
  static ModelSpec quadratic_model(int n, double delta = 1e-6);
  /// The uniform distribution (no free parameters).
  static ModelSpec null_model(int n = 2);

  /// Number of stored parameters.
  int parameter_count() const;
  /// Free-parameter count used by AIC. The quadratic family drops the gauge
  /// direction A -> A + cI, which leaves every density unchanged.
  int dim() const;
  double constraint_norm(const Eigen::VectorXd& theta) const;
  /// The potential for theta; does not check the constraint.
  PotentialSpec instantiate(const Eigen::VectorXd& theta) const;
  void check_shape() const;
};

Eigen::VectorXd pack_quadratic(const Eigen::VectorXd& mu, const Eigen::MatrixXd& A);
QuadraticSpec unpack_quadratic(int n, const Eigen::VectorXd& theta, double slack = 0.0);

/// sum_k log p(x_k | theta). Throws EmptyData, ConstraintViolation when
/// theta is outside the constraint set, and WrapViolation if a density is
/// undefined.
double log_likelihood(const ModelSpec& model, const Eigen::VectorXd& theta,
                      const std::vector<SpherePoint>& data, int threads = 1);

/// Representative of the quadratic gauge class {A + cI} with the smallest
/// trace norm: A shifted by minus its median eigenvalue.
Eigen::VectorXd canonical_gauge(int n, const Eigen::VectorXd& theta);

/// Exact theta-gradient of log_likelihood. Does not check the constraint.
Eigen::VectorXd log_likelihood_gradient(const ModelSpec& model, const Eigen::VectorXd& theta,
                                        const std::vector<SpherePoint>& data, int threads = 1);

struct FitOptions {
  /// Frank-Wolfe duality-gap tolerance.
  double tolerance = 1e-8;
  int max_iterations = 500;
  /// Interior margin; the effective margin is max(model.delta, delta).
  double delta = 1e-6;
  /// Step for the finite-difference Hessian used by the Newton steps.
  double fd_step = 1e-6;
  int threads = 1;
};

struct FitResult {
  std::string label;
  Eigen::VectorXd theta_hat;
  double loglik = 0.0;
  double aic = 0.0;
  int dim = 0;
  int iterations = 0;
  bool converged = false;
  /// Duality gap at theta_hat.
  double gap = 0.0;
  /// Objective after every iteration, starting with theta = 0.
  std::vector<double> trace;
  std::string data_fingerprint;
};

/// Conditional-gradient ascent from theta = 0. The linear subproblem picks
/// the best signed coordinate (components) or the better of the unit-mu atom
/// and the leading signed rank-one A atom (quadratic). Each iteration first
/// tries a Newton step truncated to the constraint set and falls back to the
/// Frank-Wolfe step. Stops when the duality gap is below the tolerance.
/// Throws EmptyData.
FitResult mle_fit(const ModelSpec& model, const std::vector<SpherePoint>& data,
                  const FitOptions& options = {});

/// -2 loglik + 2 dim.
double aic(double loglik, int dim);
double aic(const ModelSpec& model, const Eigen::VectorXd& theta_hat,
           const std::vector<SpherePoint>& data);

/// Indices of fits sorted by AIC, then dim, then input order. Throws
/// MismatchedData unless all fits share a data fingerprint.
std::vector<std::size_t> compare_models(const std::vector<FitResult>& fits);

/// Order-independent hash of the coordinates rounded to 1e-12, as 16 hex digits.
std::string data_fingerprint(const std::vector<SpherePoint>& data);

}  // namespace sphgrad
