#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "barymorse/bubbles.hpp"
#include "barymorse/mf_solver.hpp"

using namespace barymorse;

namespace {

constexpr double kPi = std::numbers::pi;

KPreset trig_k() {
  KPreset p;
  p.name = "trig";
  p.trig = {{1, 0, 0.3, 0.0}, {0, 1, 0.2, 0.0}, {1, 1, 0.0, 0.15}};
  return p;
}

double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

}  // namespace

TEST(Bubbles, StandardBubbleFarValue) {
  auto s = build_surface(SurfaceKind::torus, 64, 0.05);
  const Point a{0.2, 0.2, 0};
  const double l = 30.0, e = s->eta();
  EXPECT_NEAR(standard_bubble(*s, a, l, {0.7, 0.6, 0}), std::log(8 * l * l / std::pow(1 + 4 * e * e * l * l, 2)),
              1e-12);
}

TEST(Bubbles, MassApproaches8Pi) {
  auto s = build_surface(SurfaceKind::torus, 1024, 0.2);
  const Point a{0.31, 0.47, 0};
  std::vector<double> scaled;
  for (double l : {10.0, 20.0, 40.0, 80.0}) {
    const double mass = s->integrate(bubble_source(*s, a, l).values);
    scaled.push_back(std::abs(mass - 8 * kPi) * l * l);
  }
  EXPECT_LT(spread(scaled), 3.0);
}

TEST(Bubbles, ProjectedBubbleFarField) {
  auto s = build_surface(SurfaceKind::torus, 1024, 0.2);
  const Point a{0.31, 0.47, 0};
  const ScalarField g = s->green_field(a);
  std::vector<double> scaled_phi, scaled_rate;
  for (double l : {10.0, 20.0, 40.0, 80.0}) {
    const BubbleBasis b = bubble_basis(*s, a, l);
    EXPECT_NEAR(s->integrate(b.phi.values), 0.0, 1e-10);
    EXPECT_NEAR(s->integrate(b.lambda_d.values), 0.0, 1e-10);
    double far = 0.0, rate = 0.0;
    for (std::size_t i = 0; i < s->grid_size(); ++i) {
      if (s->distance(a, s->node(i)) < s->eta()) continue;
      far = std::max(far, std::abs(b.phi.values[i] - 8 * kPi * g.values[i] - 4 * kPi * std::log(l) / (l * l)));
      rate = std::max(rate, std::abs(b.lambda_d.values[i] + 8 * kPi * std::log(l) / (l * l)));
    }
    scaled_phi.push_back(far * l * l);
    scaled_rate.push_back(rate * l * l);
  }
  EXPECT_LT(spread(scaled_phi), 3.0);
  EXPECT_LT(spread(scaled_rate), 3.0);
}

TEST(Bubbles, DerivativesAgainstDifferences) {
  for (auto kind : {SurfaceKind::torus, SurfaceKind::sphere}) {
    auto s = build_surface(kind, kind == SurfaceKind::torus ? 256 : 96, default_eta(kind));
    const Point a = kind == SurfaceKind::torus ? Point{0.3, 0.6, 0} : s->normalize({0.2, -0.4, 0.8});
    const double l = 12.0;
    const BubbleBasis b = bubble_basis(*s, a, l);
    const double dl = 1e-4 * l;
    const ScalarField p = projected_bubble(*s, a, l + dl), m = projected_bubble(*s, a, l - dl);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < s->grid_size(); ++i) {
      const double fd = l * (p.values[i] - m.values[i]) / (2 * dl);
      err = std::max(err, std::abs(fd - b.lambda_d.values[i]));
      scale = std::max(scale, std::abs(b.lambda_d.values[i]));
    }
    EXPECT_LT(err / scale, 1e-5) << to_string(kind);

    const double h = 1e-5;
    for (int d = 0; d < 2; ++d) {
      Vec2 yp{}, ym{};
      yp[d] = h;
      ym[d] = -h;
      const ScalarField fp = projected_bubble(*s, s->chart_inverse(a, yp), l);
      const ScalarField fm = projected_bubble(*s, s->chart_inverse(a, ym), l);
      err = 0.0;
      scale = 0.0;
      for (std::size_t i = 0; i < s->grid_size(); ++i) {
        err = std::max(err, std::abs((fp.values[i] - fm.values[i]) / (2 * h) - b.a_d[d].values[i]));
        scale = std::max(scale, std::abs(b.a_d[d].values[i]));
      }
      EXPECT_LT(err / scale, 1e-5) << to_string(kind) << " axis " << d;
    }
  }
}

TEST(Bubbles, ApproximateSolutionIsLinear) {
  auto s = build_surface(SurfaceKind::torus, 128, 0.1);
  const Point a{0.3, 0.6, 0}, b{0.8, 0.1, 0};
  const ScalarField one = approximate_solution(*s, {{a}, {9.0}, {}});
  EXPECT_EQ(one.values, projected_bubble(*s, a, 9.0).values);
  const ScalarField u = approximate_solution(*s, {{a, b}, {9.0, 7.0}, {1.2, 0.7}});
  const ScalarField pa = projected_bubble(*s, a, 9.0), pb = projected_bubble(*s, b, 7.0);
  for (std::size_t i = 0; i < s->grid_size(); ++i)
    ASSERT_NEAR(u.values[i], 1.2 * pa.values[i] + 0.7 * pb.values[i], 1e-12);
}

TEST(Bubbles, Balancing) {
  auto s = build_surface(SurfaceKind::torus, 64, 0.05);
  KFunction k(s, trig_k());
  const Configuration a{{0.2, 0.3, 0}, {0.7, 0.9, 0}};
  const Balancing b = balancing_residual(k, a, {10.0, 10.0});
  for (double r : balancing_residual(k, a, b.balanced_lambda).residual) EXPECT_LT(std::abs(r), 1e-12);
  const Balancing scaled = balancing_residual(k.scaled(3.0), a, {10.0, 10.0});
  EXPECT_NEAR(scaled.balanced_lambda[1], b.balanced_lambda[1], 1e-12);

  KFunction one(s, {});
  const Balancing sym = balancing_residual(one, {{0.1, 0.1, 0}, {0.6, 0.6, 0}}, {10.0, 10.0});
  EXPECT_NEAR(sym.balanced_lambda[1], 10.0, 1e-9);
}

TEST(Bubbles, TauIsOneSourceOfTruth) {
  auto s = build_surface(SurfaceKind::torus, 256, 0.2);
  KFunction k(s, trig_k());
  const BubbleParams p{{{0.3, 0.6, 0}}, {20.0}, {}};
  const ScalarField u = approximate_solution(*s, p);
  const double keu = integral_Keu(k, u);
  std::vector<double> ke(s->grid_size());
  for (std::size_t i = 0; i < ke.size(); ++i) ke[i] = k.grid_values()[i] * std::exp(u.values[i]);
  EXPECT_NEAR(keu, s->integrate(ke), 1e-12 * keu);
  const double direct = 1.0 - kPi * 400.0 * interaction_at_center(k, p.points, 0) / keu;
  EXPECT_NEAR(tau(k, u, p, 0), direct, 1e-12);
  EXPECT_EQ(tau(k, u, p, 0), tau(k, keu, p, 0));
}

TEST(Bubbles, KeuExpansionConstantK) {
  auto s = build_surface(SurfaceKind::torus, 1024, 0.2);
  KFunction k(s, {});
  const BubbleParams p{{{0.31, 0.47, 0}}, {40.0}, {}};
  const KeuExpansion e = integral_Keu(k, p);
  EXPECT_NEAR(e.order1, kPi * 1600.0 * std::exp(8 * kPi * s->robin()), 1e-9 * e.order1);
  EXPECT_LT(std::abs(e.quadrature - e.order2), std::abs(e.quadrature - e.order1));
}

TEST(Bubbles, WBarMinimisation) {
  auto s = build_surface(SurfaceKind::torus, 256, 0.2);
  KFunction k(s, trig_k());
  const BubbleParams p{{{0.3, 0.6, 0}}, {20.0}, {1.001}};
  const WBarResult r = minimize_w_bar(k, 0.0, p);
  EXPECT_TRUE(r.converged) << r.message;
  EXPECT_LE(r.energy_after, r.energy_before);
  for (double o : r.orthogonality) EXPECT_LT(o, 1e-8);
  EXPECT_GT(r.norm, 0.0);
}

TEST(Bubbles, ProjectionRoundtripAndRejection) {
  auto s = build_surface(SurfaceKind::torus, 256, 0.2);
  const BubbleParams p{{{0.3, 0.6, 0}, {0.75, 0.2, 0}}, {14.0, 18.0}, {1.0, 1.0}};
  const ScalarField u = approximate_solution(*s, p);
  const Decomposition d = project_to_V(*s, u, 2);
  ASSERT_TRUE(d.converged);
  EXPECT_TRUE(d.in_V);
  EXPECT_LT(d.w_norm, 1e-8);
  for (int i = 0; i < 2; ++i) {
    int j = s->distance(p.points[i], d.params.points[0]) < s->distance(p.points[i], d.params.points[1]) ? 0 : 1;
    EXPECT_LT(s->distance(p.points[i], d.params.points[j]), 1e-6);
    EXPECT_NEAR(d.params.lambda[j] / p.lambda[i], 1.0, 1e-6);
    EXPECT_NEAR(d.params.alpha_at(j), 1.0, 1e-6);
  }

  // High-frequency perturbation: the fitted parameters move linearly in its size.
  const auto modes = s->eigenmodes(400);
  const ScalarField e = s->sample([&](const Point& x) { return s->mode_value(modes.back(), x); });
  auto shift = [&](double eps, double* w_norm) {
    std::vector<double> v = u.values;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += eps * e.values[i];
    const Decomposition dp = project_to_V(*s, s->from_values(v), 2);
    *w_norm = dp.w_norm;
    double worst = 0.0;
    for (int i = 0; i < 2; ++i) {
      int j = s->distance(p.points[i], dp.params.points[0]) < s->distance(p.points[i], dp.params.points[1]) ? 0 : 1;
      worst = std::max({worst, s->distance(p.points[i], dp.params.points[j]),
                        std::abs(dp.params.lambda[j] / p.lambda[i] - 1.0)});
    }
    return worst;
  };
  double w1 = 0.0, w2 = 0.0;
  const double d1 = shift(1e-3, &w1), d2 = shift(2e-3, &w2);
  EXPECT_LT(d1, 1e-2);
  EXPECT_NEAR(d2 / d1, 2.0, 0.2);
  EXPECT_NEAR(w1, 1e-3 * std::sqrt(modes.back().mu), 0.2e-3 * std::sqrt(modes.back().mu));
  EXPECT_NEAR(w2 / w1, 2.0, 0.2);

  const ScalarField smooth = s->sample([](const Point& x) { return 0.1 * std::cos(2 * kPi * x.x); });
  EXPECT_FALSE(project_to_V(*s, smooth, 1).in_V);
}

TEST(Bubbles, ResolvabilityGuard) {
  auto s = build_surface(SurfaceKind::torus, 64, 0.05);
  EXPECT_THROW(require_resolvable(*s, 20.0), std::domain_error);
  EXPECT_NO_THROW(require_resolvable(*s, 9.0));
}
