#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "barymorse/surface.hpp"
#include "oracles.hpp"

using namespace barymorse;

namespace {

constexpr double kPi = std::numbers::pi;

// Pinned from the theta-product oracle in oracles.hpp.
constexpr double kGreenHalfHalf = -0.055158900038163;
constexpr double kTorusRobin = -0.208577793243502;

Point random_sphere_point(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return {n(rng), n(rng), n(rng)};
}

}  // namespace

TEST(Surface, TorusFirstEigenvalueAndVolume) {
  auto s = build_surface(SurfaceKind::torus, 256, 0.05);
  EXPECT_NEAR(s->eigenmodes(1)[0].mu, 4.0 * kPi * kPi, 1e-12);
  std::vector<double> one(s->grid_size(), 1.0);
  EXPECT_NEAR(s->integrate(one), 1.0, 1e-12);
}

TEST(Surface, SphereCurvatureAndGaussBonnet) {
  auto s = build_surface(SurfaceKind::sphere, 48, 0.02);
  std::vector<double> kg(s->grid_size());
  for (std::size_t i = 0; i < kg.size(); ++i) {
    kg[i] = s->gauss_curvature(s->node(i));
    ASSERT_NEAR(kg[i], 4.0 * kPi, 1e-12);
  }
  EXPECT_NEAR(s->integrate(kg), 2.0 * kPi * 2.0, 1e-10);
}

TEST(Surface, TorusGreenAgainstThetaOracle) {
  EXPECT_NEAR(oracle::torus_green(0.5, 0.5), kGreenHalfHalf, 1e-14);
  EXPECT_NEAR(oracle::torus_robin(), kTorusRobin, 1e-14);

  auto s = build_surface(SurfaceKind::torus, 128, 0.05);
  EXPECT_NEAR(s->green({0, 0, 0}, {0.5, 0.5, 0}), kGreenHalfHalf, 1e-12);
  EXPECT_NEAR(s->robin(), kTorusRobin, 1e-12);
  for (double x : {0.03, 0.21, 0.5, 0.77})
    for (double y : {0.11, 0.49, 0.96}) {
      const double ref = oracle::torus_green(x, y);
      EXPECT_NEAR(torus::green(x, y), ref, 1e-12);
      EXPECT_NEAR(torus::green_series(x, y, 0), ref, 1e-8);
    }
}

TEST(Surface, GreenSymmetryAndZeroMean) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto kind : {SurfaceKind::torus, SurfaceKind::sphere}) {
    auto s = build_surface(kind, kind == SurfaceKind::torus ? 256 : 64, default_eta(kind));
    for (int t = 0; t < 10; ++t) {
      Point a, x;
      if (kind == SurfaceKind::torus) {
        a = {u(rng), u(rng), 0};
        x = {u(rng), u(rng), 0};
      } else {
        a = s->normalize(random_sphere_point(rng));
        x = s->normalize(random_sphere_point(rng));
      }
      EXPECT_NEAR(s->green(a, x), s->green(x, a), 1e-10);
    }
  }
  // Zonal mean on the sphere: int G = (1/2) int_{-1}^{1} g(t) dt, with t = 1 - 2 s^4
  // smoothing the log singularity at t = 1. The torus mean is covered with the modes.
  std::vector<double> xs, ws;
  oracle::gauss_legendre01(80, xs, ws);
  double mean = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double s2 = xs[i] * xs[i];
    mean += 0.5 * ws[i] * 8.0 * s2 * xs[i] * sphere::green_closed(1.0 - 2.0 * s2 * s2);
  }
  EXPECT_NEAR(mean, 0.0, 1e-12);
}

TEST(Surface, TorusGreenInvertsLaplacianOnModes) {
  auto s = build_surface(SurfaceKind::torus, 128, 0.05);
  const Point a{0.3137, 0.4719, 0};
  const ScalarField g = s->green_field(a);
  auto at = [&](const Point& x) { return s->green(a, x); };
  const auto modes = s->eigenmodes(8);
  for (const auto& mode : modes) {
    auto e = [&](const Point& x) { return s->mode_value(mode, x); };
    EXPECT_NEAR(mode.mu * oracle::singular_pairing(*s, a, g.values, at, e), e(a), 1e-9);
  }
  EXPECT_NEAR(oracle::singular_pairing(*s, a, g.values, at, [](const Point&) { return 1.0; }), 0.0, 1e-10);
}

TEST(Surface, RobinIsHomogeneous) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto t = build_surface(SurfaceKind::torus, 128, 0.05);
  auto sp = build_surface(SurfaceKind::sphere, 64, default_eta(SurfaceKind::sphere));
  double tmin = 1e9, tmax = -1e9, smin = 1e9, smax = -1e9;
  for (int i = 0; i < 10; ++i) {
    const double ht = t->green_regular_diagonal({u(rng), u(rng), 0});
    tmin = std::min(tmin, ht);
    tmax = std::max(tmax, ht);
    const double hs = sp->green_regular_diagonal(sp->normalize(random_sphere_point(rng)));
    smin = std::min(smin, hs);
    smax = std::max(smax, hs);
  }
  EXPECT_LT(tmax - tmin, 1e-8);
  EXPECT_NEAR(tmin, kTorusRobin, 1e-8);
  EXPECT_LT(smax - smin, 1e-6);
  EXPECT_NEAR(smin, sp->robin(), 1e-6);
}

TEST(Surface, CutoffProfile) {
  auto s = build_surface(SurfaceKind::torus, 64, 0.05);
  const double eta = s->eta();
  const Point a{0.2, 0.3, 0};
  EXPECT_NEAR(s->cutoff(a, {0.2 + eta / 2, 0.3, 0}), eta / 2, 1e-14);
  EXPECT_NEAR(s->cutoff(a, {0.2 + 3 * eta, 0.3, 0}), 2 * eta, 1e-14);
  double prev = 0.0;
  for (int i = 0; i <= 300; ++i) {
    const double v = s->cutoff_profile().value(3.0 * eta * i / 300.0);
    EXPECT_GE(v, prev - 1e-15);
    prev = v;
  }
}

TEST(Surface, PoissonOnEigenmodes) {
  for (auto kind : {SurfaceKind::torus, SurfaceKind::sphere}) {
    auto s = build_surface(kind, 64, default_eta(kind));
    EXPECT_EQ(s->solve_poisson(s->zero_field()).values, s->zero_field().values);
    const auto modes = s->eigenmodes(3);
    auto e = [&](int k) { return s->sample([&](const Point& x) { return s->mode_value(modes[k], x); }); };
    const ScalarField e1 = e(0), e2 = e(2);
    std::vector<double> f(s->grid_size()), want(s->grid_size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      f[i] = e1.values[i] + 2.0 * e2.values[i];
      want[i] = e1.values[i] / modes[0].mu + 2.0 * e2.values[i] / modes[2].mu;
    }
    const ScalarField u = s->solve_poisson(s->from_values(f));
    for (std::size_t i = 0; i < f.size(); ++i) ASSERT_NEAR(u.values[i], want[i], 1e-10) << to_string(kind);
  }
}

TEST(Surface, PoissonRejectsNonzeroMean) {
  auto s = build_surface(SurfaceKind::torus, 64, 0.05);
  std::vector<double> one(s->grid_size(), 1.0);
  EXPECT_THROW(s->solve_poisson(s->from_values(one)), std::invalid_argument);
}

TEST(Surface, ConformalFactor) {
  auto t = build_surface(SurfaceKind::torus, 64, 0.05);
  EXPECT_EQ(t->conformal_factor({0.3, 0.3, 0}, {0.35, 0.28, 0}), 0.0);

  auto s = build_surface(SurfaceKind::sphere, 64, default_eta(SurfaceKind::sphere));
  const Point a = s->normalize({0.2, 0.5, -0.7});
  EXPECT_NEAR(s->conformal_factor(a, a), 0.0, 1e-14);
  const double h = 1e-4;
  Vec2 grad{};
  for (int d = 0; d < 2; ++d) {
    Vec2 yp{}, ym{};
    yp[d] = h;
    ym[d] = -h;
    grad[d] = (s->conformal_factor(a, s->chart_inverse(a, yp)) - s->conformal_factor(a, s->chart_inverse(a, ym))) /
              (2 * h);
  }
  EXPECT_LT(std::hypot(grad[0], grad[1]), 1e-8);

  // The chart metric is e^{-u_a} |dy|^2, so the flat chart Laplacian of u_a
  // equals 2 K_g e^{-u_a}.
  const double hs = 1e-3;
  double worst = 0.0;
  for (double r : {0.02, 0.1, 0.2}) {
    const Vec2 c{r * 0.6, r * 0.8};
    auto u = [&](double y1, double y2) { return s->conformal_factor(a, s->chart_inverse(a, {y1, y2})); };
    const double lap = (u(c[0] + hs, c[1]) + u(c[0] - hs, c[1]) + u(c[0], c[1] + hs) + u(c[0], c[1] - hs) -
                        4 * u(c[0], c[1])) /
                       (hs * hs);
    const double x = u(c[0], c[1]);
    const double rhs = 2.0 * s->gauss_curvature(a) * std::exp(-x);
    worst = std::max(worst, std::abs(lap - rhs) / rhs);
  }
  EXPECT_LT(worst, 1e-5);
}
