#pragma once

// Exact sampling X = G^{-1}(U): the preimage of u under the gradient map is
// the unique minimizer of h(x) = c(x, u) + phi(x).

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sphgrad/potential.hpp"

namespace sphgrad {

struct SolverOptions {
  /// Stop when the Riemannian gradient of h is this small.
  double gradient_tol = 1e-10;
  /// Required forward-map residual d(G(x*), u) for a converged solve.
  double residual_tol = 1e-8;
  int max_iterations = 10000;
  double armijo_c1 = 1e-4;
  double shrink = 0.5;
  double initial_step = 1.0;
  /// Newton steps on h (Hessian from the density module), falling back to
  /// steepest descent where the Hessian is not positive definite. With
  /// false, plain gradient descent.
  bool newton = true;
};

struct SolveReport {
  explicit SolveReport(SpherePoint start) : solution(std::move(start)) {}

  SpherePoint solution;
  /// d(G(solution), u).
  double residual = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// h at the start and after every accepted step. Non-increasing up to the
  /// rounding level of h.
  std::vector<double> objective;
};

/// Riemannian descent on h with Armijo backtracking, started at u.
/// Never throws on non-convergence: the best iterate is returned with
/// converged = false.
SolveReport inverse_gradient_map(const PotentialSpec& spec, const SpherePoint& u,
                                 const SolverOptions& options = {});

/// One draw: U uniform, then the inverse gradient map. Throws SolverError
/// if the solve does not converge.
SpherePoint sample(const PotentialSpec& spec, Rng& rng, const SolverOptions& options = {});

/// N draws, draw i using derived_stream(seed, i). A failed solve aborts the
/// batch with SolverError carrying the index.
std::vector<SpherePoint> sample_batch(const PotentialSpec& spec, std::size_t count,
                                      std::uint64_t seed, const SolverOptions& options = {},
                                      int threads = 1);

enum class PointFormat { xyz, lonlat };

/// Header `x,y,z` (or `lon_deg,lat_deg`), 17 significant digits.
void write_points_csv(const std::vector<SpherePoint>& points, PointFormat format,
                      std::ostream& out);

}  // namespace sphgrad
