#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sphgrad/potential.hpp"

using namespace sphgrad;
using sphgrad::testing::e;

namespace {

constexpr double kPi = std::numbers::pi;

PotentialSpec linear(double theta, const SpherePoint& z) {
  PotentialSpec s;
  s.components.push_back({CosineProfile{1}, z, theta});
  return s;
}

TEST(ProfileEval, Examples) {
  auto v = profile_eval(CosineProfile{1}, GeodesicAngle(0.0));
  EXPECT_EQ(v.f, 1.0);
  EXPECT_EQ(v.df, 0.0);
  EXPECT_EQ(v.d2f, -1.0);

  v = profile_eval(CosineProfile{2}, GeodesicAngle(kPi / 2));
  EXPECT_NEAR(v.f, -0.25, 1e-15);
  EXPECT_NEAR(v.df, 0.0, 1e-15);
  EXPECT_NEAR(v.d2f, 1.0, 1e-15);

  v = profile_eval(CosineProfile{3}, GeodesicAngle(kPi));
  EXPECT_NEAR(v.f, -1.0 / 9.0, 1e-15);
  EXPECT_EQ(v.df, 0.0);
  EXPECT_NEAR(v.d2f, 1.0, 1e-15);
}

TEST(ProfileEval, RadialProfileHypothesesHold) {
  for (int k = 1; k <= 8; ++k) {
    EXPECT_EQ(profile_eval(CosineProfile{k}, GeodesicAngle(0.0)).df, 0.0);
    EXPECT_EQ(profile_eval(CosineProfile{k}, GeodesicAngle(kPi)).df, 0.0);
    for (int i = 0; i <= 1000; ++i) {
      const auto v = profile_eval(CosineProfile{k}, GeodesicAngle(kPi * i / 1000.0));
      EXPECT_LE(std::abs(v.d2f), 1.0);
    }
  }
}

TEST(ProfileEval, DerivativesMatchFiniteDifferences) {
  for (int k = 1; k <= 5; ++k) {
    for (double xi = 0.1; xi < 3.1; xi += 0.3) {
      const double h = 1e-5;
      const auto p = profile_eval(CosineProfile{k}, GeodesicAngle(xi + h));
      const auto m = profile_eval(CosineProfile{k}, GeodesicAngle(xi - h));
      const auto c = profile_eval(CosineProfile{k}, GeodesicAngle(xi));
      EXPECT_NEAR((p.f - m.f) / (2 * h), c.df, 1e-8);
      EXPECT_NEAR((p.df - m.df) / (2 * h), c.d2f, 1e-8);
    }
  }
}

TEST(PotentialValue, Examples) {
  const auto s = linear(0.5, e(2));
  EXPECT_DOUBLE_EQ(potential_value(s, e(2)), 0.5);
  EXPECT_NEAR(potential_value(s, e(0)), 0.0, 1e-16);
  EXPECT_EQ(potential_value(PotentialSpec::zero(), e(1)), 0.0);
}

TEST(PotentialGradient, Examples) {
  const auto s = linear(0.5, e(2));
  EXPECT_EQ(potential_gradient(s, e(2)).norm(), 0.0);
  EXPECT_EQ(potential_gradient(PotentialSpec::zero(), e(0)).norm(), 0.0);

  const TangentVector v = potential_gradient(s, e(0));
  EXPECT_LT((v.vec() - 0.5 * e(2).coords()).norm(), 1e-15);
  const Eigen::VectorXd fd =
      sphgrad::testing::fd_gradient([&](const SpherePoint& x) { return potential_value(s, x); }, e(0), 1e-6);
  EXPECT_LT((fd - v.vec()).norm(), 1e-8);
}

TEST(PotentialGradient, MatchesFiniteDifferencesOnRandomSpecs) {
  Rng rng(101);
  int tested = 0;
  while (tested < 500) {
    const int n = 1 + tested % 3;
    const auto spec = random_admissible_spec(rng, n);
    const auto x = uniform_sample(n, rng);
    if (sphgrad::testing::min_anchor_sine(spec, x) < 1e-3) continue;
    const Eigen::VectorXd fd = sphgrad::testing::fd_gradient(
        [&](const SpherePoint& w) { return potential_value(spec, w); }, x, 1e-5);
    EXPECT_LT((fd - potential_gradient(spec, x).vec()).norm(), 1e-6);
    ++tested;
  }
}

TEST(PotentialGradient, VanishesAtAnchorsAndAntipodes) {
  PotentialSpec s;
  s.components.push_back({CosineProfile{3}, e(1), 0.4});
  EXPECT_EQ(potential_gradient(s, e(1)).norm(), 0.0);
  EXPECT_EQ(potential_gradient(s, SpherePoint(-e(1).coords())).norm(), 0.0);
}

TEST(ValidateSpec, Examples) {
  PotentialSpec s;
  s.components.push_back({CosineProfile{2}, e(0), 0.5});
  s.components.push_back({CosineProfile{3}, e(1), 0.5});
  const auto r = validate_spec(s);
  EXPECT_TRUE(r.admissible);
  EXPECT_DOUBLE_EQ(r.margin, 0.0);

  s.components[0].weight = 0.6;
  s.components[1].weight = -0.6;
  EXPECT_THROW(validate_spec(s), InadmissibleSpec);
  try {
    validate_spec(s);
  } catch (const InadmissibleSpec& err) {
    EXPECT_NEAR(err.margin(), -0.2, 1e-15);
  }
  EXPECT_TRUE(validate_spec(PotentialSpec::zero()).admissible);
}

TEST(ValidateSpec, SlackShrinksTheBall) {
  auto s = linear(0.9, e(2));
  s.slack = 0.05;
  EXPECT_NEAR(validate_spec(s).margin, 0.05, 1e-15);
  s.slack = 0.2;
  EXPECT_FALSE(admissibility(s).admissible);
  EXPECT_THROW(validate_spec(s), InadmissibleSpec);
}

TEST(ValidateSpec, ShapeErrors) {
  PotentialSpec s;
  s.components.push_back({CosineProfile{1}, SpherePoint::axis(4, 0), 0.1});
  EXPECT_THROW(s.check_shape(), DimensionError);
  PotentialSpec t;
  t.components.push_back({CosineProfile{0}, e(0), 0.1});
  EXPECT_THROW(t.check_shape(), ParseError);
}

TEST(QuadraticToComponents, Examples) {
  QuadraticSpec q{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(3, 3), 0.0};
  EXPECT_TRUE(quadratic_to_components(q).components.empty());

  q.mu = 0.5 * e(0).coords();
  auto s = quadratic_to_components(q);
  ASSERT_EQ(s.components.size(), 1u);
  EXPECT_EQ(s.components[0].profile.k, 1);
  EXPECT_DOUBLE_EQ(s.components[0].weight, 0.5);
  EXPECT_LT((s.components[0].anchor.coords() - e(0).coords()).norm(), 1e-15);

  q.mu.setZero();
  q.A = Eigen::Vector3d(0.2, 0.0, -0.8).asDiagonal();
  EXPECT_NEAR(trace_norm(q.A), 1.0, 1e-15);
  s = quadratic_to_components(q);
  ASSERT_EQ(s.components.size(), 2u);
  double l1 = 0.0;
  for (const auto& c : s.components) {
    EXPECT_EQ(c.profile.k, 2);
    l1 += std::abs(c.weight);
    if (c.weight > 0) {
      EXPECT_NEAR(c.weight, 0.2, 1e-15);
      EXPECT_NEAR(std::abs(c.anchor[0]), 1.0, 1e-15);
    } else {
      EXPECT_NEAR(c.weight, -0.8, 1e-15);
      EXPECT_NEAR(std::abs(c.anchor[2]), 1.0, 1e-15);
    }
  }
  EXPECT_NEAR(l1, 1.0, 1e-12);
}

TEST(QuadraticToComponents, RejectsInadmissibleAndAsymmetric) {
  QuadraticSpec q{0.6 * e(0).coords(), Eigen::MatrixXd::Identity(3, 3) * 0.2, 0.0};
  EXPECT_THROW(quadratic_to_components(q), InadmissibleSpec);
  q.mu.setZero();
  q.A.setZero();
  q.A(0, 1) = 0.1;
  EXPECT_THROW(quadratic_to_components(q), ParseError);
}

// Random admissible (mu, A) with |mu| + |A|_1 = budget.
QuadraticSpec random_quadratic(Rng& rng, int n, double budget) {
  std::normal_distribution<double> g;
  Eigen::VectorXd mu(n + 1);
  Eigen::MatrixXd A(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) mu[i] = g(rng);
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = g(rng);
  const double scale = budget / (mu.norm() + trace_norm(A));
  return {mu * scale, A * scale, 0.0};
}

TEST(QuadraticToComponents, PreservesNormAndPotentialUpToConstant) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 3;
    const auto q = random_quadratic(rng, n, 0.9);
    const auto s = quadratic_to_components(q);
    double l1 = 0.0;
    for (const auto& c : s.components) l1 += std::abs(c.weight);
    EXPECT_NEAR(l1, q.mu.norm() + trace_norm(q.A), 1e-12);

    const auto direct = [&](const SpherePoint& x) {
      return x.coords().dot(q.mu) + 0.5 * x.coords().dot(q.A * x.coords());
    };
    const auto x0 = uniform_sample(n, rng);
    const double shift = potential_value(s, x0) - direct(x0);
    for (int i = 0; i < 10; ++i) {
      const auto x = uniform_sample(n, rng);
      EXPECT_NEAR(potential_value(s, x) - direct(x), shift, 1e-12);
    }
  }
}

TEST(QuadraticToComponents, IdentityShiftLeavesGradientUnchanged) {
  Rng rng(78);
  for (int trial = 0; trial < 100; ++trial) {
    auto q = random_quadratic(rng, 2, 0.5);
    // Make A positive definite so that A + cI keeps the same trace norm
    // increment and stays admissible.
    q.A += Eigen::MatrixXd::Identity(3, 3) * (0.01 - Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q.A).eigenvalues()[0]);
    const double budget = q.mu.norm() + trace_norm(q.A);
    if (budget > 0.9) continue;
    QuadraticSpec shifted = q;
    shifted.A += 0.05 * Eigen::MatrixXd::Identity(3, 3);
    const auto s0 = quadratic_to_components(q);
    const auto s1 = quadratic_to_components(shifted);
    for (int i = 0; i < 10; ++i) {
      const auto x = uniform_sample(2, rng);
      EXPECT_LT((potential_gradient(s0, x).vec() - potential_gradient(s1, x).vec()).norm(), 1e-12);
    }
  }
}

TEST(Blend, ScalesWeightsAndSlack) {
  auto a = linear(0.4, e(0));
  a.slack = 0.1;
  auto b = linear(-0.8, e(1));
  b.slack = 0.0;
  const auto m = blend(a, b, 0.25);
  ASSERT_EQ(m.components.size(), 2u);
  EXPECT_DOUBLE_EQ(m.components[0].weight, 0.3);
  EXPECT_DOUBLE_EQ(m.components[1].weight, -0.2);
  EXPECT_DOUBLE_EQ(m.slack, 0.075);
  EXPECT_TRUE(admissibility(m).admissible);
}

TEST(RandomAdmissibleSpec, RespectsBounds) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_admissible_spec(rng, 2);
    EXPECT_GE(s.components.size(), 1u);
    EXPECT_LE(s.components.size(), 4u);
    for (const auto& c : s.components) {
      EXPECT_GE(c.profile.k, 1);
      EXPECT_LE(c.profile.k, 5);
    }
    EXPECT_LE(admissibility(s).l1_norm, 0.95 + 1e-15);
  }
}

TEST(CheckRadialProfile, CosineProfilesPass) {
  for (int k = 1; k <= 6; ++k) {
    const auto r = check_radial_profile(
        [k](double xi) { return profile_eval(CosineProfile{k}, GeodesicAngle(xi)); });
    EXPECT_TRUE(r.pass) << k;
  }
}

TEST(CheckRadialProfile, RejectsBadProfiles) {
  // f'(0) != 0.
  auto r = check_radial_profile([](double xi) { return ProfileValues{xi, 1.0, 0.0}; });
  EXPECT_FALSE(r.pass);
  // f'' well below -1 (a cosine profile scaled by 2).
  r = check_radial_profile([](double xi) {
    return ProfileValues{2 * std::cos(xi), -2 * std::sin(xi), -2 * std::cos(xi)};
  });
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.min_d2f, -2.0, 1e-12);
}

}  // namespace
