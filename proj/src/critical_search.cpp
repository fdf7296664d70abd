#include "barymorse/critical_search.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "barymorse/parallel.hpp"

namespace barymorse {

namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,
                           53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113};

double radical_inverse(std::uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * double(i % base);
    i /= base;
  }
  return r;
}

// Uniform double in [0,1) from the top 53 bits, identical on every platform.
double unit_draw(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

Point map_unit_square(const Surface& s, double u, double v) {
  if (s.kind() == SurfaceKind::torus) return {u, v, 0.0};
  const double z = 2.0 * u - 1.0, rho = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = 2.0 * std::numbers::pi * v;
  return {rho * std::cos(phi), rho * std::sin(phi), z};
}

bool point_less(const Point& a, const Point& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

bool config_less(const Configuration& a, const Configuration& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), point_less);
}

}  // namespace

int iota_at_infinity(int m, int morse_index) { return 3 * m - 1 - morse_index; }

double degeneracy_tolerance(const std::vector<double>& eig, double tol_deg_rel) {
  double mx = 1.0;
  for (double e : eig) mx = std::max(mx, std::abs(e));
  return tol_deg_rel * mx;
}

ClassifiedCritical classify(const KFunction& k, const Configuration& a, double tol_grad, double tol_deg_rel) {
  const int m = int(a.size());
  if (m < 1) throw std::invalid_argument("classify: empty configuration");
  ClassifiedCritical c;
  c.points = a;
  const Eigen::VectorXd g = reduced_energy_grad(k, a);
  c.grad_norm = g.norm();
  if (!(c.grad_norm < tol_grad))
    throw std::invalid_argument("classify: |grad F| = " + std::to_string(c.grad_norm) + " exceeds tol_grad");
  c.value = reduced_energy_value(k, a);
  c.fd_grad_norm = reduced_energy_grad_fd(k, a).norm();
  const Eigen::MatrixXd h = reduced_energy_hessian(k, a);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (h + h.transpose()), Eigen::EigenvaluesOnly);
  c.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  const double tol = degeneracy_tolerance(c.eigenvalues, tol_deg_rel);
  c.morse_index = 0;
  c.nondegenerate = true;
  for (double e : c.eigenvalues) {
    if (e < -tol) ++c.morse_index;
    if (std::abs(e) <= tol) c.nondegenerate = false;
  }
  c.stability = stability_quantity(k, a);
  c.in_k_minus = c.nondegenerate && c.stability < 0.0;
  if (c.in_k_minus) c.iota_infinity = iota_at_infinity(m, c.morse_index);
  return c;
}

std::optional<Configuration> refine_critical(const KFunction& k, Configuration a, const SearchConfig& cfg,
                                             std::string* failure) {
  const Surface& s = k.surface();
  const double d_min = cfg.d_min > 0.0 ? cfg.d_min : 4.0 * s.eta();
  const double max_step = 0.05 * (s.kind() == SurfaceKind::torus ? 1.0 : sphere::kRadius * 2.0);
  auto fail = [&](const std::string& why) -> std::optional<Configuration> {
    if (failure) *failure = why;
    return std::nullopt;
  };
  if (min_pairwise_distance(s, a) < d_min) return fail("start closer than d_min");
  Eigen::VectorXd g = reduced_energy_grad(k, a);
  double gn = g.norm();
  double nu = 1e-6;
  for (int it = 0; it < cfg.max_iter; ++it) {
    if (gn < cfg.tol_grad) return a;
    const Eigen::MatrixXd h = reduced_energy_hessian(k, a);
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    const int n = int(g.size());
    for (int tries = 0;; ++tries) {
      if (tries > 40) return fail("damping exhausted at |grad| = " + std::to_string(gn));
      const Eigen::MatrixXd lhs = h * h + (nu * scale * scale) * Eigen::MatrixXd::Identity(n, n);
      Eigen::VectorXd step = -lhs.ldlt().solve(h * g);
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double len = std::hypot(step[2 * i], step[2 * i + 1]);
        if (len > max_step) step.segment<2>(2 * i) *= max_step / len;
      }
      const Configuration trial = displace(s, a, step);
      if (min_pairwise_distance(s, trial) < d_min) {
        nu *= 10.0;
        continue;
      }
      const Eigen::VectorXd gt = reduced_energy_grad(k, trial);
      if (gt.norm() < gn) {
        a = trial;
        g = gt;
        gn = gt.norm();
        nu = std::max(nu / 10.0, 1e-14);
        break;
      }
      nu *= 10.0;
    }
  }
  if (gn < cfg.tol_grad) return a;
  return fail("max iterations at |grad| = " + std::to_string(gn));
}

std::vector<Configuration> multistart_points(const Surface& s, int m, int count, std::uint64_t seed) {
  const int dim = 2 * m;
  if (dim > int(std::size(kPrimes))) throw std::invalid_argument("multistart: m too large for the Halton table");
  std::mt19937_64 rng(seed);
  std::vector<double> shift(dim);
  for (double& v : shift) v = unit_draw(rng);
  std::vector<Configuration> out;
  const double sep = 2.0 * s.eta();
  for (std::uint64_t i = 1; int(out.size()) < count && i < std::uint64_t(count) * 1000 + 1000; ++i) {
    Configuration a(m);
    for (int j = 0; j < m; ++j) {
      double u = radical_inverse(i, kPrimes[2 * j]) + shift[2 * j];
      double v = radical_inverse(i, kPrimes[2 * j + 1]) + shift[2 * j + 1];
      a[j] = map_unit_square(s, u - std::floor(u), v - std::floor(v));
    }
    if (min_pairwise_distance(s, a) >= sep) out.push_back(std::move(a));
  }
  return out;
}

Configuration canonical_order(const Configuration& a) {
  Configuration c = a;
  std::sort(c.begin(), c.end(), point_less);
  return c;
}

bool same_up_to_permutation(const Surface& s, const Configuration& a, const Configuration& b, double tol) {
  if (a.size() != b.size()) return false;
  std::vector<int> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) ok = s.distance(a[i], b[perm[i]]) <= tol;
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

std::vector<ClassifiedCritical> dedupe(const Surface& s, std::vector<ClassifiedCritical> list, double tol_pos) {
  for (auto& c : list) c.points = canonical_order(c.points);
  std::stable_sort(list.begin(), list.end(),
                   [](const ClassifiedCritical& x, const ClassifiedCritical& y) { return config_less(x.points, y.points); });
  std::vector<ClassifiedCritical> out;
  for (auto& c : list) {
    bool dup = false;
    for (const auto& kept : out)
      if (same_up_to_permutation(s, kept.points, c.points, tol_pos)) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(std::move(c));
  }
  return out;
}

SearchResult find_critical_points(const KFunction& k, int m, const SearchConfig& cfg) {
  const Surface& s = k.surface();
  if (m < 1) throw std::invalid_argument("find_critical_points: m must be >= 1");
  SearchResult res;
  res.m = m;
  const int count = cfg.starts > 0 ? cfg.starts : 200 * m;
  const auto starts = multistart_points(s, m, count, cfg.seed);
  res.starts = int(starts.size());
  if (res.starts < count) res.notes.push_back("only " + std::to_string(res.starts) + " separated starts generated");

  std::vector<std::optional<ClassifiedCritical>> found(starts.size());
  std::vector<std::string> why(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) {
    auto a = refine_critical(k, starts[i], cfg, &why[i]);
    if (!a) return;
    try {
      found[i] = classify(k, *a, cfg.tol_grad, cfg.tol_deg_rel);
    } catch (const std::exception& e) {
      why[i] = e.what();
    }
  });

  std::vector<ClassifiedCritical> all;
  for (std::size_t i = 0; i < found.size(); ++i) {
    if (found[i]) {
      ++res.converged;
      all.push_back(std::move(*found[i]));
    } else {
      ++res.failed;
    }
  }
  res.criticals = dedupe(s, std::move(all), cfg.tol_pos);
  std::stable_sort(res.criticals.begin(), res.criticals.end(), [](const auto& x, const auto& y) {
    if (x.value != y.value) return x.value < y.value;
    return config_less(x.points, y.points);
  });
  res.degenerate_family = res.converged > 0 &&
                          std::none_of(res.criticals.begin(), res.criticals.end(),
                                       [](const ClassifiedCritical& c) { return c.nondegenerate; });
  if (res.converged == 0) res.notes.push_back("no start converged");
  if (res.degenerate_family) res.notes.push_back("degenerate family: no nondegenerate critical point found");
  for (const auto& c : res.criticals)
    if (c.fd_grad_norm >= 10.0 * cfg.tol_grad) {
      res.notes.push_back("finite-difference gradient check above 10 tol_grad for a reported point");
      break;
    }
  return res;
}

}  // namespace barymorse
