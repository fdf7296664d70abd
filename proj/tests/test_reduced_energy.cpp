#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "barymorse/reduced_energy.hpp"
#include "oracles.hpp"

using namespace barymorse;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGreenHalfHalf = -0.055158900038163;
constexpr double kTorusRobin = -0.208577793243502;

KFunction torus_k(int n, KPreset p = {}) { return KFunction(build_surface(SurfaceKind::torus, n, 0.05), p); }

KPreset cos_x() {
  KPreset p;
  p.name = "trig";
  p.trig = {{1, 0, 0.3, 0.0}};
  return p;
}

}  // namespace

TEST(ReducedEnergy, InteractionFunctionConstantK) {
  auto k = torus_k(64);
  const Configuration a{{0.2, 0.7, 0}};
  for (const Point x : {Point{0.25, 0.7, 0}, Point{0.6, 0.1, 0}, Point{0.2, 0.7, 0}}) {
    const double h = k.surface().green_regular(a[0], x);
    EXPECT_NEAR(interaction_fn(k, a, 0, x), std::exp(8 * kPi * h), 1e-12);
    EXPECT_GT(interaction_fn(k, a, 0, x), 0.0);
  }
}

TEST(ReducedEnergy, InteractionAtCenterForAntipodalPair) {
  auto k = torus_k(64);
  const Configuration a{{0.1, 0.1, 0}, {0.6, 0.6, 0}};
  EXPECT_NEAR(interaction_at_center(k, a, 0), std::exp(8 * kPi * (kTorusRobin + kGreenHalfHalf)), 1e-10);
}

TEST(ReducedEnergy, WeightFunction) {
  auto s = build_surface(SurfaceKind::torus, 64, 0.05);
  const Configuration a{{0.1, 0.2, 0}, {0.55, 0.7, 0}};
  const Point x{0.3, 0.9, 0};
  EXPECT_EQ(weight_fn(*s, a, {1.0, 1.0}, 0, x), 1.0);
  // g_i(a_i) - 1 is linear in the alpha deviations to first order.
  const double c = 8 * kPi * (std::abs(kTorusRobin) + std::abs(s->green(a[0], a[1])));
  for (double d : {1e-2, 1e-3, 1e-4}) {
    const double g = weight_fn(*s, a, {1.0 + d, 1.0 - d}, 0, a[0]);
    EXPECT_LE(std::abs(g - 1.0), 2.0 * c * 2 * d);
  }
  const Configuration one{{0.1, 0.2, 0}};
  EXPECT_NEAR(weight_fn(*s, one, {1.01}, 0, x), std::exp(8 * kPi * 0.01 * s->green_regular(one[0], x)), 1e-12);
}

TEST(ReducedEnergy, SinglePointConstantK) {
  auto k = torus_k(64);
  for (const Point a : {Point{0.1, 0.2, 0}, Point{0.7, 0.33, 0}})
    EXPECT_NEAR(reduced_energy_value(k, {a}), 4 * kPi * kTorusRobin, 1e-8);
}

TEST(ReducedEnergy, PermutationAndCollision) {
  auto k = torus_k(64, cos_x());
  const Point p{0.2, 0.3, 0}, q{0.6, 0.8, 0};
  EXPECT_NEAR(reduced_energy_value(k, {p, q}), reduced_energy_value(k, {q, p}), 1e-12);
  double prev = -1e300;
  for (double t : {0.3, 0.1, 0.03, 0.01, 0.003}) {
    const double f = reduced_energy_value(k, {p, {p.x + t, p.y, 0}});
    EXPECT_GT(f, prev);
    prev = f;
  }
  EXPECT_TRUE(reduced_energy(k, {p, {p.x + 0.01, p.y, 0}}).near_collision);
}

TEST(ReducedEnergy, GradientVanishesForConstantKSinglePoint) {
  auto k = torus_k(64);
  EXPECT_LT(reduced_energy_grad(k, {{0.37, 0.81, 0}}).norm(), 1e-8);
}

TEST(ReducedEnergy, DerivativesAgainstDifferences) {
  auto k = torus_k(64, cos_x());
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int m : {1, 2, 3}) {
    Configuration a;
    while (true) {
      a.clear();
      for (int i = 0; i < m; ++i) a.push_back({u(rng), u(rng), 0});
      if (min_pairwise_distance(k.surface(), a) > 0.2) break;
    }
    const Eigen::MatrixXd h = reduced_energy_hessian(k, a);
    EXPECT_LT((h - h.transpose()).norm(), 1e-8);
    const Eigen::VectorXd g = reduced_energy_grad(k, a);
    auto f = [&](const Eigen::VectorXd& step) { return reduced_energy_value(k, displace(k.surface(), a, step)); };
    EXPECT_LT((g - oracle::fd4_gradient(f, 2 * m, 1e-3)).norm(), 1e-6 * std::max(1.0, g.norm()));
    EXPECT_LT((h - oracle::fd4_hessian(f, 2 * m, 1e-3)).norm(), 1e-5 * std::max(1.0, h.norm()));
    EXPECT_LT((g - reduced_energy_grad_fd(k, a)).norm(), 1e-5 * std::max(1.0, g.norm()));
  }
}

TEST(ReducedEnergy, StabilityQuantity) {
  auto k = torus_k(64);
  // Delta H = 1 and grad H(a,a) = 0 near the diagonal of the flat torus.
  const double want = 8 * kPi * std::exp(8 * kPi * kTorusRobin);
  for (const Point a : {Point{0.1, 0.1, 0}, Point{0.77, 0.4, 0}})
    EXPECT_NEAR(stability_quantity(k, {a}), want, 1e-6 * want);

  auto kt = torus_k(64, cos_x());
  const Configuration a{{0.15, 0.3, 0}, {0.6, 0.75, 0}};
  const double l = stability_quantity(kt, a);
  EXPECT_NEAR(stability_quantity(kt.scaled(2.5), a) / l, 2.5, 1e-8);
}
