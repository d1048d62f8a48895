#include "sphgrad/sampler.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <ostream>

#include "sphgrad/density.hpp"
#include "sphgrad/parallel.hpp"

namespace sphgrad {

namespace {

constexpr double kFlatBand = 64.0 * 2.2e-16;

double objective(const PotentialSpec& spec, const SpherePoint& u, const SpherePoint& x) {
  return cost(x, u) + potential_value(spec, x);
}

// Gradient of h is -log_x(u) + grad phi(x). Empty when x sits in the
// antipodal guard zone of u.
std::optional<TangentVector> objective_gradient(const PotentialSpec& spec, const SpherePoint& u,
                                                const SpherePoint& x) {
  try {
    const TangentVector to_u = log_map(x, u);
    return TangentVector(x, potential_gradient(spec, x).vec() - to_u.vec());
  } catch (const AntipodalError&) {
    return std::nullopt;
  }
}

// Moves x off the antipode of u by a fixed small rotation.
SpherePoint nudge(const SpherePoint& x) {
  const auto basis = tangent_basis(x);
  return exp_map(TangentVector(x, 1e-3 * basis.front().vec()));
}

// Newton direction -Hess(h)^{-1} grad(h) in a tangent frame at x, or the
// steepest-descent direction when the Hessian is not positive definite.
Eigen::VectorXd search_direction(const PotentialSpec& spec, const SpherePoint& u,
                                 const SpherePoint& x, const TangentVector& grad) {
  const TangentVector to_u = log_map(x, u);
  const Eigen::MatrixXd hess = cost_hessian(to_u) + potential_hessian(spec, x);
  const Eigen::MatrixXd B = tangent_frame(x);
  const Eigen::MatrixXd reduced = B.transpose() * hess * B;
  const Eigen::LLT<Eigen::MatrixXd> llt(reduced);
  if (llt.info() == Eigen::Success) {
    const Eigen::VectorXd d = B * llt.solve(-(B.transpose() * grad.vec()));
    if (d.allFinite() && d.dot(grad.vec()) < 0.0 && d.norm() < std::numbers::pi) return d;
  }
  return -grad.vec();
}

}  // namespace

SolveReport inverse_gradient_map(const PotentialSpec& spec, const SpherePoint& u,
                                 const SolverOptions& options) {
  if (u.dim() != spec.n) throw DimensionError("target point and potential dimensions differ");
  SolveReport report(u);
  SpherePoint x = u;
  double h = objective(spec, u, x);
  report.objective.push_back(h);

  auto grad = objective_gradient(spec, u, x);
  while (report.iterations < options.max_iterations) {
    while (!grad) {
      x = nudge(x);
      h = objective(spec, u, x);
      grad = objective_gradient(spec, u, x);
    }
    const double gnorm = grad->norm();
    report.gradient_norm = gnorm;
    if (gnorm <= options.gradient_tol) break;

    const Eigen::VectorXd dir = options.newton ? search_direction(spec, u, x, *grad) : Eigen::VectorXd(-grad->vec());
    const double slope = dir.dot(grad->vec());
    double step = options.initial_step;
    bool accepted = false;
    for (int trial = 0; trial < 60; ++trial) {
      const SpherePoint candidate = exp_map(TangentVector(x, step * dir));
      const double h_new = objective(spec, u, candidate);
      const bool armijo = h_new <= h + options.armijo_c1 * step * slope;
      // Near the optimum the change in h drops below its rounding level, so
      // h can no longer rank iterates; a step that keeps h inside that band
      // and shrinks the gradient is kept.
      bool flat = false;
      std::optional<TangentVector> g_new;
      if (!armijo && std::abs(h_new - h) <= kFlatBand * (1.0 + std::abs(h))) {
        g_new = objective_gradient(spec, u, candidate);
        flat = g_new && g_new->norm() < gnorm;
      }
      if (armijo || flat) {
        x = candidate;
        h = h_new;
        grad = g_new ? std::move(g_new) : objective_gradient(spec, u, x);
        accepted = true;
        break;
      }
      step *= options.shrink;
    }
    ++report.iterations;
    if (!accepted) break;
    report.objective.push_back(h);
  }
  if (grad) report.gradient_norm = grad->norm();

  report.solution = x;
  report.residual = geodesic_distance(gradient_map(spec, x), u).radians();
  report.converged =
      report.gradient_norm <= options.gradient_tol && report.residual <= options.residual_tol;
  return report;
}

SpherePoint sample(const PotentialSpec& spec, Rng& rng, const SolverOptions& options) {
  const SpherePoint u = uniform_sample(spec.n, rng);
  const SolveReport report = inverse_gradient_map(spec, u, options);
  if (!report.converged) {
    throw SolverError("inverse gradient map did not converge (residual " +
                      std::to_string(report.residual) + ", " +
                      std::to_string(report.iterations) + " iterations)");
  }
  return report.solution;
}

std::vector<SpherePoint> sample_batch(const PotentialSpec& spec, std::size_t count,
                                      std::uint64_t seed, const SolverOptions& options,
                                      int threads) {
  validate_spec(spec);
  std::vector<std::optional<SpherePoint>> slots(count);
  parallel_for(count, threads, [&](std::size_t i) {
    Rng rng = derived_stream(seed, i);
    try {
      slots[i] = sample(spec, rng, options);
    } catch (const SolverError& e) {
      throw SolverError(std::string("sample ") + std::to_string(i) + ": " + e.what(), i);
    }
  });
  std::vector<SpherePoint> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

void write_points_csv(const std::vector<SpherePoint>& points, PointFormat format,
                      std::ostream& out) {
  char buf[160];
  if (format == PointFormat::xyz) {
    out << "x,y,z\n";
    for (const auto& p : points) {
      if (p.ambient_dim() != 3) throw DimensionError("CSV export needs points of S^2");
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p[0], p[1], p[2]);
      out << buf;
    }
  } else {
    out << "lon_deg,lat_deg\n";
    for (const auto& p : points) {
      const auto [lon, lat] = to_lon_lat(p);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", lon, lat);
      out << buf;
    }
  }
}

}  // namespace sphgrad
