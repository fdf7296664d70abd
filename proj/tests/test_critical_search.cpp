#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "barymorse/critical_search.hpp"

using namespace barymorse;

namespace {

constexpr double kPi = std::numbers::pi;

KPreset trig_k() {
  KPreset p;
  p.name = "trig";
  p.trig = {{1, 0, 0.3, 0.0}, {0, 1, 0.2, 0.0}};
  return p;
}

struct GridCritical {
  double x, y;
  int index;
};

// Discrete critical points of f on an n x n periodic grid: extrema by
// comparison with the 8 neighbours, saddles by 4 sign changes around the ring.
template <class F>
std::vector<GridCritical> grid_scan(F f, int n) {
  std::vector<double> v(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v[i * n + j] = f(double(i) / n, double(j) / n);
  auto at = [&](int i, int j) { return v[((i + n) % n) * n + (j + n) % n]; };
  const int ring[8][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
  std::vector<GridCritical> out;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double c = at(i, j);
      int above = 0, changes = 0;
      for (int r = 0; r < 8; ++r) {
        const bool up = at(i + ring[r][0], j + ring[r][1]) > c;
        const bool next = at(i + ring[(r + 1) % 8][0], j + ring[(r + 1) % 8][1]) > c;
        above += up;
        changes += up != next;
      }
      if (above == 8) out.push_back({double(i) / n, double(j) / n, 0});
      else if (above == 0) out.push_back({double(i) / n, double(j) / n, 2});
      else if (changes >= 4) out.push_back({double(i) / n, double(j) / n, 1});
    }
  return out;
}

}  // namespace

TEST(CriticalSearch, ConstantKIsDegenerateFamily) {
  KFunction k(build_surface(SurfaceKind::torus, 64, 0.05), {});
  SearchConfig cfg;
  cfg.starts = 12;
  const SearchResult r = find_critical_points(k, 1, cfg);
  EXPECT_TRUE(r.degenerate_family);
  ASSERT_FALSE(r.criticals.empty());
  for (const auto& c : r.criticals) {
    EXPECT_LT(c.grad_norm, 1e-8);
    EXPECT_FALSE(c.nondegenerate);
  }
}

TEST(CriticalSearch, TrigKSinglePointMatchesGridScan) {
  KFunction k(build_surface(SurfaceKind::torus, 64, 0.05), trig_k());
  const SearchResult r = find_critical_points(k, 1, {});
  ASSERT_GE(r.criticals.size(), 4u);
  int euler = 0;
  std::vector<int> idx;
  for (const auto& c : r.criticals) {
    EXPECT_TRUE(c.nondegenerate);
    EXPECT_LT(c.fd_grad_norm, 1e-7);
    euler += c.morse_index % 2 ? -1 : 1;
    idx.push_back(c.morse_index);
  }
  std::sort(idx.begin(), idx.end());
  EXPECT_EQ(idx, (std::vector<int>{0, 1, 1, 2}));
  EXPECT_EQ(euler, 0);

  const int n = 200;
  const auto ref = grid_scan(
      [](double x, double y) { return std::log(1 + 0.3 * std::cos(2 * kPi * x) + 0.2 * std::cos(2 * kPi * y)); }, n);
  ASSERT_EQ(ref.size(), r.criticals.size());
  for (const auto& g : ref) {
    bool found = false;
    for (const auto& c : r.criticals)
      if (k.surface().distance(c.points[0], {g.x, g.y, 0}) < 2.0 / n && c.morse_index == g.index) found = true;
    EXPECT_TRUE(found) << g.x << " " << g.y;
  }
}

TEST(CriticalSearch, ClassifyIsReproducible) {
  KFunction k(build_surface(SurfaceKind::torus, 64, 0.05), trig_k());
  const SearchResult r = find_critical_points(k, 1, {});
  for (const auto& c : r.criticals) {
    const ClassifiedCritical again = classify(k, c.points);
    EXPECT_EQ(again.morse_index, c.morse_index);
    EXPECT_EQ(again.nondegenerate, c.nondegenerate);
    EXPECT_EQ(again.in_k_minus, c.in_k_minus);
    EXPECT_EQ(again.iota_infinity, c.iota_infinity);
  }
  EXPECT_THROW(classify(k, {{0.1, 0.2, 0}}), std::invalid_argument);
}

TEST(CriticalSearch, IndexAtInfinity) {
  EXPECT_EQ(iota_at_infinity(1, 2), 0);
  EXPECT_EQ(iota_at_infinity(2, 0), 5);

  KPreset p;
  p.name = "trig";
  p.c0 = 2.0;
  p.trig = {{2, 0, 0.5, 0.0}, {0, 2, 0.5, 0.0}};
  KFunction k(build_surface(SurfaceKind::torus, 64, 0.05), p);
  const ClassifiedCritical top = classify(k, {{0, 0, 0}});
  EXPECT_EQ(top.morse_index, 2);
  EXPECT_LT(top.stability, 0.0);
  EXPECT_TRUE(top.in_k_minus);
  EXPECT_EQ(top.iota_infinity, 0);

  const ClassifiedCritical low = classify(k, {{0.25, 0.25, 0}});
  EXPECT_GT(low.stability, 0.0);
  EXPECT_FALSE(low.in_k_minus);
  EXPECT_FALSE(low.iota_infinity.has_value());
}

TEST(CriticalSearch, Dedupe) {
  auto s = build_surface(SurfaceKind::torus, 64, 0.05);
  ClassifiedCritical a, b, c;
  a.points = {{0.1, 0.2, 0}, {0.6, 0.7, 0}};
  b.points = {{0.6, 0.7, 0}, {0.1, 0.2, 0}};
  c.points = {{0.101, 0.2, 0}, {0.6, 0.7, 0}};
  EXPECT_EQ(dedupe(*s, {a, b}).size(), 1u);
  EXPECT_EQ(dedupe(*s, {a, c}).size(), 2u);
  const auto once = dedupe(*s, {a, b, c});
  const auto twice = dedupe(*s, once);
  ASSERT_EQ(once.size(), twice.size());
  for (std::size_t i = 0; i < once.size(); ++i)
    EXPECT_TRUE(same_up_to_permutation(*s, once[i].points, twice[i].points, 0.0));
}

TEST(CriticalSearch, MultistartIsSeeded) {
  auto s = build_surface(SurfaceKind::torus, 64, 0.05);
  const auto a = multistart_points(*s, 2, 10, 42);
  const auto b = multistart_points(*s, 2, 10, 42);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(same_up_to_permutation(*s, a[i], b[i], 0.0));
    EXPECT_GE(min_pairwise_distance(*s, a[i]), 2 * s->eta());
  }
}
