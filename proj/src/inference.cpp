#include "sphgrad/inference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>

#include "sphgrad/density.hpp"
#include "sphgrad/parallel.hpp"

namespace sphgrad {

ModelSpec ModelSpec::components_model(int n, std::vector<SpherePoint> anchors,
                                      std::vector<int> frequencies, double delta) {
  ModelSpec m;
  m.kind = ModelKind::components;
  m.n = n;
  m.anchors = std::move(anchors);
  m.frequencies = std::move(frequencies);
  m.delta = delta;
  m.check_shape();
  return m;
}

ModelSpec ModelSpec::quadratic_model(int n, double delta) {
  ModelSpec m;
  m.kind = ModelKind::quadratic;
  m.n = n;
  m.delta = delta;
  return m;
}

ModelSpec ModelSpec::null_model(int n) {
  ModelSpec m;
  m.n = n;
  m.name = "null";
  return m;
}

void ModelSpec::check_shape() const {
  if (n < 1) throw DimensionError("sphere dimension must be >= 1");
  if (kind == ModelKind::quadratic) return;
  if (anchors.size() != frequencies.size()) {
    throw DimensionError("model needs one frequency per anchor");
  }
  for (const auto& z : anchors) {
    if (z.dim() != n) throw DimensionError("anchor dimension does not match the model");
  }
  for (int k : frequencies) {
    if (k < 1) throw ParseError("profile frequency k must be >= 1");
  }
}

int ModelSpec::parameter_count() const {
  if (kind == ModelKind::components) return static_cast<int>(anchors.size());
  return (n + 1) + (n + 1) * (n + 2) / 2;
}

int ModelSpec::dim() const {
  if (kind == ModelKind::components) return static_cast<int>(anchors.size());
  return parameter_count() - 1;
}

Eigen::VectorXd pack_quadratic(const Eigen::VectorXd& mu, const Eigen::MatrixXd& A) {
  const Eigen::Index m = mu.size();
  Eigen::VectorXd theta(m + m * (m + 1) / 2);
  theta.head(m) = mu;
  Eigen::Index k = m;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) theta[k++] = A(i, j);
  }
  return theta;
}

QuadraticSpec unpack_quadratic(int n, const Eigen::VectorXd& theta, double slack) {
  const int m = n + 1;
  if (theta.size() != m + m * (m + 1) / 2) {
    throw DimensionError("quadratic parameter vector has the wrong length");
  }
  QuadraticSpec q;
  q.mu = theta.head(m);
  q.A.resize(m, m);
  Eigen::Index k = m;
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      q.A(i, j) = theta[k];
      q.A(j, i) = theta[k];
      ++k;
    }
  }
  q.slack = slack;
  return q;
}

double ModelSpec::constraint_norm(const Eigen::VectorXd& theta) const {
  if (theta.size() != parameter_count()) {
    throw DimensionError("parameter vector has length " + std::to_string(theta.size()) +
                         ", model expects " + std::to_string(parameter_count()));
  }
  if (kind == ModelKind::components) return theta.cwiseAbs().sum();
  const QuadraticSpec q = unpack_quadratic(n, theta);
  return q.mu.norm() + trace_norm(q.A);
}

PotentialSpec ModelSpec::instantiate(const Eigen::VectorXd& theta) const {
  if (theta.size() != parameter_count()) {
    throw DimensionError("parameter vector has the wrong length for this model");
  }
  if (kind == ModelKind::quadratic) return decompose_quadratic(unpack_quadratic(n, theta, delta));
  PotentialSpec spec = PotentialSpec::zero(n);
  spec.slack = delta;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    spec.components.push_back({CosineProfile{frequencies[i]}, anchors[i], theta[i]});
  }
  return spec;
}

namespace {

constexpr double kSeriesAngle = 1e-3;

// The potential is linear in theta: phi_theta = sum_i theta_i psi_i. Per
// data point we keep grad psi_i (columns of `grads`) and Hess psi_i.
struct PointBasis {
  Eigen::MatrixXd xx;
  Eigen::MatrixXd proj;
  Eigen::MatrixXd grads;
  std::vector<Eigen::MatrixXd> hess;
};

PointBasis make_basis(const ModelSpec& model, const SpherePoint& x) {
  const int m = x.ambient_dim();
  const int p = model.parameter_count();
  const Eigen::VectorXd& c = x.coords();
  PointBasis b;
  b.xx = c * c.transpose();
  b.proj = Eigen::MatrixXd::Identity(m, m) - b.xx;
  b.grads.resize(m, p);
  b.hess.reserve(p);
  if (model.kind == ModelKind::components) {
    for (int i = 0; i < p; ++i) {
      PotentialSpec unit = PotentialSpec::zero(model.n);
      unit.components.push_back({CosineProfile{model.frequencies[i]}, model.anchors[i], 1.0});
      b.grads.col(i) = potential_gradient(unit, x).vec();
      b.hess.push_back(potential_hessian(unit, x));
    }
    return b;
  }
  // psi = x_j for mu_j: grad = P e_j, Hess = -x_j P.
  for (int j = 0; j < m; ++j) {
    b.grads.col(j) = b.proj.col(j);
    b.hess.push_back(-c[j] * b.proj);
  }
  // psi = x'Sx/2 for the packed A entry (S = E_jj, or E_jk + E_kj):
  // grad = P S x, Hess = P S P - (x'Sx) P.
  int k = m;
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, m);
      S(i, j) = 1.0;
      S(j, i) = 1.0;
      const Eigen::VectorXd Sx = S * c;
      b.grads.col(k) = b.proj * Sx;
      b.hess.push_back(b.proj * S * b.proj - c.dot(Sx) * b.proj);
      ++k;
    }
  }
  return b;
}

// log p(x | theta) and, when grad is non-null, its theta-gradient:
// (n - 1) (cot a - 1/a) e'g_i + tr(M^{-1} (dH[g_i] + K_i)).
// Returns -inf where the density is undefined or not positive.
double point_log_density(const PointBasis& b, const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
  const int m = static_cast<int>(b.xx.rows());
  const int n = m - 1;
  const int p = static_cast<int>(theta.size());
  const Eigen::VectorXd v = b.grads * theta;
  const double alpha = v.norm();
  if (alpha >= std::numbers::pi - kWrapEps) return -std::numeric_limits<double>::infinity();

  // a = alpha cot alpha, da = a'(alpha), r = (1 - a)/alpha, dls = d/da log(sin a / a).
  double a, da, r, dls, log_s;
  if (alpha < kSeriesAngle) {
    const double a2 = alpha * alpha;
    a = 1.0 - a2 / 3.0 - a2 * a2 / 45.0;
    da = -2.0 * alpha / 3.0 - 4.0 * a2 * alpha / 45.0;
    r = alpha / 3.0 + a2 * alpha / 45.0;
    dls = -alpha / 3.0 - a2 * alpha / 45.0;
    log_s = -a2 / 6.0 - a2 * a2 / 180.0;
  } else {
    const double sn = std::sin(alpha);
    const double cs = std::cos(alpha);
    a = alpha * cs / sn;
    da = cs / sn - alpha / (sn * sn);
    r = (1.0 - a) / alpha;
    dls = cs / sn - 1.0 / alpha;
    log_s = std::log(sn / alpha);
  }
  const Eigen::VectorXd e = alpha > 0.0 ? Eigen::VectorXd(v / alpha) : Eigen::VectorXd::Zero(m);
  const Eigen::MatrixXd ee = e * e.transpose();

  Eigen::MatrixXd M = b.xx + a * b.proj + (1.0 - a) * ee;
  for (int i = 0; i < p; ++i) {
    if (theta[i] != 0.0) M += theta[i] * b.hess[i];
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  const double det = lu.determinant();
  if (!(det > 0.0) || !std::isfinite(det)) return -std::numeric_limits<double>::infinity();
  const double value = (n - 1) * log_s + std::log(det);
  if (grad == nullptr) return value;

  const Eigen::MatrixXd Minv = lu.inverse();
  const Eigen::MatrixXd side = b.proj - ee;
  grad->resize(p);
  for (int i = 0; i < p; ++i) {
    const Eigen::VectorXd w = b.grads.col(i);
    const double ew = e.dot(w);
    const Eigen::VectorXd w_perp = w - ew * e;
    const Eigen::MatrixXd dM = da * ew * side + r * (w_perp * e.transpose() + e * w_perp.transpose()) + b.hess[i];
    (*grad)[i] = (n - 1) * dls * ew + Minv.cwiseProduct(dM.transpose()).sum();
  }
  return value;
}

class Objective {
 public:
  Objective(const ModelSpec& model, const std::vector<SpherePoint>& data, int threads)
      : basis_(data.size()), threads_(threads) {
    parallel_for(data.size(), threads, [&](std::size_t i) { basis_[i] = make_basis(model, data[i]); });
  }

  double operator()(const Eigen::VectorXd& theta) const {
    std::vector<double> terms(basis_.size());
    parallel_for(basis_.size(), threads_,
                 [&](std::size_t i) { terms[i] = point_log_density(basis_[i], theta, nullptr); });
    return pairwise_sum(terms);
  }

  double value_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const {
    const std::size_t N = basis_.size();
    const Eigen::Index p = theta.size();
    std::vector<double> terms(N);
    Eigen::MatrixXd grads(p, N);
    parallel_for(N, threads_, [&](std::size_t i) {
      Eigen::VectorXd g;
      terms[i] = point_log_density(basis_[i], theta, &g);
      if (std::isfinite(terms[i])) grads.col(static_cast<Eigen::Index>(i)) = g;
      else grads.col(static_cast<Eigen::Index>(i)).setZero();
    });
    grad.resize(p);
    std::vector<double> row(N);
    for (Eigen::Index j = 0; j < p; ++j) {
      for (std::size_t i = 0; i < N; ++i) row[i] = grads(j, static_cast<Eigen::Index>(i));
      grad[j] = pairwise_sum(row);
    }
    return pairwise_sum(terms);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd g;
    value_and_gradient(theta, g);
    return g;
  }

  // Directional derivative of gamma -> f(theta + gamma d).
  double slope(const Eigen::VectorXd& theta, const Eigen::VectorXd& d, double gamma) const {
    return gradient(theta + gamma * d).dot(d);
  }

 private:
  std::vector<PointBasis> basis_;
  int threads_;
};

// argmax of <g, s> over the constraint ball of the given radius.
Eigen::VectorXd linear_oracle(const ModelSpec& model, const Eigen::VectorXd& g, double radius) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(g.size());
  if (model.kind == ModelKind::components) {
    Eigen::Index j = 0;
    const double best = g.cwiseAbs().maxCoeff(&j);
    if (best > 0.0) s[j] = std::copysign(radius, g[j]);
    return s;
  }
  const int m = model.n + 1;
  const Eigen::VectorXd g_mu = g.head(m);
  // <G, S>_F must equal the packed dot product, so off-diagonal packed
  // entries are split between the two mirrored positions.
  Eigen::MatrixXd G(m, m);
  Eigen::Index k = m;
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      const double v = (i == j) ? g[k] : 0.5 * g[k];
      G(i, j) = v;
      G(j, i) = v;
      ++k;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
  Eigen::Index j = 0;
  const double lambda_abs = eig.eigenvalues().cwiseAbs().maxCoeff(&j);
  const double mu_norm = g_mu.norm();
  if (mu_norm >= lambda_abs) {
    if (mu_norm > 0.0) s.head(m) = radius * g_mu / mu_norm;
    return s;
  }
  const Eigen::VectorXd u = eig.eigenvectors().col(j);
  const double sign = eig.eigenvalues()[j] >= 0.0 ? 1.0 : -1.0;
  return pack_quadratic(Eigen::VectorXd::Zero(m), sign * radius * u * u.transpose());
}

// Root of the directional derivative on [0, 1] (Illinois regula falsi),
// given slope(0) > 0. Returns 1 if the objective still increases at 1.
double line_search(const Objective& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& d,
                   double slope0) {
  double a = 0.0;
  double fa = slope0;
  double b = 1.0;
  double fb = f.slope(theta, d, 1.0);
  if (!(fb < 0.0)) return 1.0;
  int side = 0;
  for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
    double c = (a * fb - b * fa) / (fb - fa);
    if (!(c > a && c < b)) c = 0.5 * (a + b);
    const double fc = f.slope(theta, d, c);
    if (fc == 0.0) return c;
    if (fc > 0.0) {
      a = c;
      fa = fc;
      if (side == 1) fb *= 0.5;
      side = 1;
    } else {
      b = c;
      fb = fc;
      if (side == -1) fa *= 0.5;
      side = -1;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

double log_likelihood(const ModelSpec& model, const Eigen::VectorXd& theta,
                      const std::vector<SpherePoint>& data, int threads) {
  if (data.empty()) throw EmptyData();
  const double norm = model.constraint_norm(theta);
  if (norm > 1.0 - model.delta + 1e-12) {
    throw ConstraintViolation("parameter norm " + std::to_string(norm) +
                              " outside the constraint set (1 - delta = " +
                              std::to_string(1.0 - model.delta) + ")");
  }
  const PotentialSpec spec = model.instantiate(theta);
  std::vector<double> terms(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) { terms[i] = log_density(spec, data[i]); });
  return pairwise_sum(terms);
}

namespace {

// Largest lambda in [0, 1] with |theta + lambda d| inside the ball.
double feasible_fraction(const ModelSpec& model, const Eigen::VectorXd& theta,
                         const Eigen::VectorXd& d, double radius) {
  if (model.constraint_norm(theta + d) <= radius) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (model.constraint_norm(theta + mid * d) <= radius ? lo : hi) = mid;
  }
  return lo;
}

// Hessian of the log-likelihood by differences of the exact gradient;
// one-sided where the central probe would leave the ball.
Eigen::MatrixXd objective_hessian(const Objective& f, const ModelSpec& model,
                                  const Eigen::VectorXd& theta, const Eigen::VectorXd& g,
                                  double radius, double h) {
  const Eigen::Index p = theta.size();
  Eigen::MatrixXd Hm(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::VectorXd tp = theta;
    Eigen::VectorXd tm = theta;
    tp[j] += h;
    tm[j] -= h;
    const bool up = model.constraint_norm(tp) <= radius;
    const bool down = model.constraint_norm(tm) <= radius;
    if (up && down) {
      Hm.col(j) = (f.gradient(tp) - f.gradient(tm)) / (2.0 * h);
    } else if (down) {
      Hm.col(j) = (g - f.gradient(tm)) / h;
    } else {
      Hm.col(j) = (f.gradient(tp) - g) / h;
    }
  }
  return 0.5 * (Hm + Hm.transpose());
}

}  // namespace

Eigen::VectorXd canonical_gauge(int n, const Eigen::VectorXd& theta) {
  QuadraticSpec q = unpack_quadratic(n, theta);
  Eigen::VectorXd lambda = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q.A).eigenvalues();
  const Eigen::Index m = lambda.size();
  const double median = (m % 2 == 1) ? lambda[m / 2] : 0.5 * (lambda[m / 2 - 1] + lambda[m / 2]);
  q.A -= median * Eigen::MatrixXd::Identity(m, m);
  return pack_quadratic(q.mu, q.A);
}

Eigen::VectorXd log_likelihood_gradient(const ModelSpec& model, const Eigen::VectorXd& theta,
                                        const std::vector<SpherePoint>& data, int threads) {
  if (data.empty()) throw EmptyData();
  model.constraint_norm(theta);
  return Objective(model, data, threads).gradient(theta);
}

FitResult mle_fit(const ModelSpec& model, const std::vector<SpherePoint>& data,
                  const FitOptions& options) {
  if (data.empty()) throw EmptyData();
  model.check_shape();
  for (const auto& x : data) {
    if (x.dim() != model.n) throw DimensionError("data point dimension does not match the model");
  }
  FitResult result;
  result.label = model.name;
  result.dim = model.dim();
  result.data_fingerprint = data_fingerprint(data);

  ModelSpec working = model;
  working.delta = std::max(model.delta, options.delta);
  const double radius = 1.0 - working.delta;
  const Objective f(working, data, options.threads);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(model.parameter_count());
  Eigen::VectorXd g;
  double value = f.value_and_gradient(theta, g);
  result.trace.push_back(value);
  // Rounding level of a sum of N log-densities of moderate size.
  const double band = 64.0 * 2.2e-16 * static_cast<double>(data.size());

  const auto gap_at = [&](const Eigen::VectorXd& t, const Eigen::VectorXd& grad) {
    return grad.dot(linear_oracle(working, grad, radius) - t);
  };
  // Ascent test. Below the rounding level of the objective the Frank-Wolfe
  // gap ranks the candidates instead.
  const auto improves = [&](double cand_value, const Eigen::VectorXd& cand, const Eigen::VectorXd& cand_g,
                            double required, double gap) {
    if (!std::isfinite(cand_value)) return false;
    if (cand_value - value >= required && cand_value > value) return true;
    return std::abs(cand_value - value) <= band && gap_at(cand, cand_g) < gap;
  };

  Eigen::VectorXd gauge;
  if (model.kind == ModelKind::quadratic) {
    const int m = model.n + 1;
    gauge = pack_quadratic(Eigen::VectorXd::Zero(m), Eigen::MatrixXd::Identity(m, m));
    gauge.normalize();
  }

  while (theta.size() > 0) {
    const Eigen::VectorXd s = linear_oracle(working, g, radius);
    const Eigen::VectorXd d_fw = s - theta;
    result.gap = g.dot(d_fw);
    if (result.gap <= options.tolerance) {
      result.converged = true;
      break;
    }
    if (result.iterations >= options.max_iterations) break;
    ++result.iterations;

    bool accepted = false;
    Eigen::VectorXd cand;
    Eigen::VectorXd cand_g;
    double cand_value = 0.0;

    // Newton step on the concave objective, truncated to the ball.
    // The quadratic family is flat along the gauge direction, so the
    // Newton system is solved on its orthogonal complement.
    Eigen::MatrixXd neg_h = -objective_hessian(f, working, theta, g, radius, options.fd_step);
    Eigen::VectorXd rhs = g;
    if (gauge.size() > 0) {
      rhs -= gauge * gauge.dot(g);
      neg_h += (neg_h.trace() / static_cast<double>(theta.size())) * gauge * gauge.transpose();
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(neg_h);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd d = llt.solve(rhs);
      if (gauge.size() > 0) d -= gauge * gauge.dot(d);
      const double slope = g.dot(d);
      if (d.allFinite() && slope > 0.0) {
        double lambda = feasible_fraction(working, theta, d, radius);
        for (int trial = 0; trial < 30 && !accepted; ++trial, lambda *= 0.5) {
          cand = theta + lambda * d;
          cand_value = f.value_and_gradient(cand, cand_g);
          accepted = improves(cand_value, cand, cand_g, 1e-4 * lambda * slope, result.gap);
        }
      }
    }
    if (!accepted) {
      const double gamma = line_search(f, theta, d_fw, result.gap);
      cand = theta + gamma * d_fw;
      cand_value = f.value_and_gradient(cand, cand_g);
      accepted = improves(cand_value, cand, cand_g, 0.0, result.gap);
    }
    // No measurable ascent in either direction.
    if (!accepted) break;
    theta = cand;
    value = cand_value;
    g = cand_g;
    result.trace.push_back(value);
  }
  if (theta.size() == 0) result.converged = true;
  if (model.kind == ModelKind::quadratic) {
    const Eigen::VectorXd canon = canonical_gauge(model.n, theta);
    Eigen::VectorXd canon_g;
    const double canon_value = f.value_and_gradient(canon, canon_g);
    if (std::isfinite(canon_value)) {
      theta = canon;
      value = canon_value;
      result.gap = gap_at(theta, canon_g);
    }
  }

  result.theta_hat = theta;
  result.loglik = value;
  result.aic = aic(result.loglik, result.dim);
  return result;
}

double aic(double loglik, int dim) { return -2.0 * loglik + 2.0 * dim; }

double aic(const ModelSpec& model, const Eigen::VectorXd& theta_hat,
           const std::vector<SpherePoint>& data) {
  return aic(log_likelihood(model, theta_hat, data), model.dim());
}

std::vector<std::size_t> compare_models(const std::vector<FitResult>& fits) {
  for (const auto& fit : fits) {
    if (fit.data_fingerprint != fits.front().data_fingerprint) {
      throw MismatchedData("fits were computed on different data (" +
                           fits.front().data_fingerprint + " vs " + fit.data_fingerprint + ")");
    }
  }
  std::vector<std::size_t> order(fits.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (fits[a].aic != fits[b].aic) return fits[a].aic < fits[b].aic;
    return fits[a].dim < fits[b].dim;
  });
  return order;
}

std::string data_fingerprint(const std::vector<SpherePoint>& data) {
  std::vector<std::vector<std::int64_t>> rows;
  rows.reserve(data.size());
  for (const auto& x : data) {
    std::vector<std::int64_t> row(x.ambient_dim());
    for (int i = 0; i < x.ambient_dim(); ++i) row[i] = std::llround(x[i] * 1e12);
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end());
  // FNV-1a over the sorted integer coordinates.
  std::uint64_t hash = 1469598103934665603ull;
  auto mix = [&hash](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      hash ^= (v >> (8 * b)) & 0xffu;
      hash *= 1099511628211ull;
    }
  };
  mix(rows.size());
  for (const auto& row : rows) {
    mix(row.size());
    for (auto v : row) mix(static_cast<std::uint64_t>(v));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace sphgrad
