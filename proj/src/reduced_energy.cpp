#include "barymorse/reduced_energy.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace barymorse {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kCoincident = 1e-14;

// H(a, x) with the exact diagonal value on the homogeneous model surfaces.
double regular_part(const Surface& s, const Point& a, const Point& x) {
  if (s.distance(a, x) < kCoincident) return s.robin();
  return s.green_regular(a, x);
}

double dot3(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

// Sphere G as a function of t = a.x: derivatives in t.
double sphere_g1(double t) { return 1.0 / (4.0 * kPi * (1.0 - t)); }
double sphere_g2(double t) { return 1.0 / (4.0 * kPi * (1.0 - t) * (1.0 - t)); }

}  // namespace

double min_pairwise_distance(const Surface& s, const Configuration& a) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) d = std::min(d, s.distance(a[i], a[j]));
  return d;
}

double interaction_fn(const KFunction& k, const Configuration& a, int i, const Point& x) {
  const Surface& s = k.surface();
  double e = 8.0 * kPi * regular_part(s, a[i], x);
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (int(j) == i) continue;
    if (s.distance(x, a[j]) < kCoincident) throw std::domain_error("interaction_fn: x coincides with a_j");
    e += 8.0 * kPi * s.green(x, a[j]);
  }
  return k.value(x) * std::exp(e);
}

double weight_fn(const Surface& s, const Configuration& a, const std::vector<double>& alpha, int i, const Point& x) {
  double e = 8.0 * kPi * (alpha[i] - 1.0) * regular_part(s, a[i], x);
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (int(j) == i || alpha[j] == 1.0) continue;
    if (s.distance(x, a[j]) < kCoincident) throw std::domain_error("weight_fn: x coincides with a_j");
    e += 8.0 * kPi * (alpha[j] - 1.0) * s.green(a[j], x);
  }
  return std::exp(e);
}

double interaction_at_center(const KFunction& k, const Configuration& a, int i) {
  return interaction_fn(k, a, i, a[i]);
}

EnergyValue reduced_energy(const KFunction& k, const Configuration& a, double d_min) {
  const Surface& s = k.surface();
  if (d_min <= 0.0) d_min = 4.0 * s.eta();
  EnergyValue out;
  out.near_collision = min_pairwise_distance(s, a) < d_min;
  double f = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    f += std::log(k.value(a[i])) + 4.0 * kPi * s.robin();
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      if (s.distance(a[i], a[j]) < kCoincident) {
        out.value = std::numeric_limits<double>::infinity();
        return out;
      }
      f += 8.0 * kPi * s.green(a[i], a[j]);
    }
  }
  out.value = f;
  return out;
}

double reduced_energy_value(const KFunction& k, const Configuration& a) { return reduced_energy(k, a).value; }

Configuration displace(const Surface& s, const Configuration& a, const Eigen::VectorXd& step) {
  Configuration out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s.chart_inverse(a[i], {step[2 * i], step[2 * i + 1]});
  return out;
}

Eigen::VectorXd reduced_energy_grad(const KFunction& k, const Configuration& a) {
  const Surface& s = k.surface();
  const int m = int(a.size());
  Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * m);
  for (int i = 0; i < m; ++i) {
    double lnk;
    Vec2 gk;
    Mat2 hk;
    k.log_derivatives(a[i], lnk, gk, hk);
    g[2 * i] = gk[0];
    g[2 * i + 1] = gk[1];
  }
  if (s.kind() == SurfaceKind::torus) {
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        double gv;
        Vec2 gr;
        Mat2 h;
        torus::green_derivatives(a[i].x - a[j].x, a[i].y - a[j].y, gv, gr, h);
        for (int d = 0; d < 2; ++d) {
          g[2 * i + d] += 8.0 * kPi * gr[d];
          g[2 * j + d] -= 8.0 * kPi * gr[d];
        }
      }
    return g;
  }
  const double r = sphere::kRadius;
  for (int i = 0; i < m; ++i) {
    const auto e = s.tangent_frame(a[i]);
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      const double g1 = sphere_g1(dot3(a[i], a[j]));
      for (int d = 0; d < 2; ++d) g[2 * i + d] += 8.0 * kPi * g1 * dot3(e[d], a[j]) / r;
    }
  }
  return g;
}

Eigen::MatrixXd reduced_energy_hessian(const KFunction& k, const Configuration& a) {
  const Surface& s = k.surface();
  const int m = int(a.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  for (int i = 0; i < m; ++i) {
    double lnk;
    Vec2 gk;
    Mat2 hk;
    k.log_derivatives(a[i], lnk, gk, hk);
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q) h(2 * i + p, 2 * i + q) = hk[2 * p + q];
  }
  if (s.kind() == SurfaceKind::torus) {
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        double gv;
        Vec2 gr;
        Mat2 hg;
        torus::green_derivatives(a[i].x - a[j].x, a[i].y - a[j].y, gv, gr, hg);
        for (int p = 0; p < 2; ++p)
          for (int q = 0; q < 2; ++q) {
            const double v = 8.0 * kPi * hg[2 * p + q];
            h(2 * i + p, 2 * i + q) += v;
            h(2 * j + p, 2 * j + q) += v;
            h(2 * i + p, 2 * j + q) -= v;
            h(2 * j + p, 2 * i + q) -= v;
          }
      }
    return h;
  }
  // Sphere: second derivatives of G(t), t = a_i.a_j, through both charts.
  const double r2 = sphere::kRadius * sphere::kRadius;
  std::vector<std::array<Point, 2>> frames(m);
  for (int i = 0; i < m; ++i) frames[i] = s.tangent_frame(a[i]);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      const double t = dot3(a[i], a[j]);
      const double g1 = sphere_g1(t), g2 = sphere_g2(t);
      const auto& ei = frames[i];
      const auto& ej = frames[j];
      for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) {
          const double diag = g2 * dot3(ei[p], a[j]) * dot3(ei[q], a[j]) - (p == q ? g1 * t : 0.0);
          h(2 * i + p, 2 * i + q) += 8.0 * kPi * diag / r2;
          if (j > i) {
            const double off = g2 * dot3(ei[p], a[j]) * dot3(a[i], ej[q]) + g1 * dot3(ei[p], ej[q]);
            h(2 * i + p, 2 * j + q) += 8.0 * kPi * off / r2;
            h(2 * j + q, 2 * i + p) += 8.0 * kPi * off / r2;
          }
        }
    }
  return h;
}

Eigen::VectorXd reduced_energy_grad_fd(const KFunction& k, const Configuration& a, double h) {
  const Surface& s = k.surface();
  const int n = 2 * int(a.size());
  Eigen::VectorXd g(n);
  for (int p = 0; p < n; ++p) {
    auto f = [&](double t) {
      Eigen::VectorXd st = Eigen::VectorXd::Zero(n);
      st[p] = t;
      return reduced_energy_value(k, displace(s, a, st));
    };
    g[p] = (f(-2 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2 * h)) / (12.0 * h);
  }
  return g;
}

Eigen::MatrixXd reduced_energy_hessian_fd(const KFunction& k, const Configuration& a, double h) {
  const Surface& s = k.surface();
  const int n = 2 * int(a.size());
  auto f = [&](int p, double tp, int q, double tq) {
    Eigen::VectorXd st = Eigen::VectorXd::Zero(n);
    st[p] += tp;
    st[q] += tq;
    return reduced_energy_value(k, displace(s, a, st));
  };
  Eigen::MatrixXd hm(n, n);
  const double f0 = reduced_energy_value(k, a);
  for (int p = 0; p < n; ++p) {
    hm(p, p) = (-f(p, 2 * h, p, 0.0) + 16.0 * f(p, h, p, 0.0) - 30.0 * f0 + 16.0 * f(p, -h, p, 0.0) -
                f(p, -2 * h, p, 0.0)) /
               (12.0 * h * h);
    for (int q = p + 1; q < n; ++q) {
      auto mixed = [&](double t) {
        return (f(p, t, q, t) - f(p, t, q, -t) - f(p, -t, q, t) + f(p, -t, q, -t)) / (4.0 * t * t);
      };
      hm(p, q) = hm(q, p) = (4.0 * mixed(h) - mixed(2.0 * h)) / 3.0;
    }
  }
  return hm;
}

double interaction_laplacian(const KFunction& k, const Configuration& a, int i, double h) {
  const Surface& s = k.surface();
  if (h <= 0.0) h = s.eta() / 8.0;
  if (2.0 * h >= s.eta()) throw std::domain_error("interaction_laplacian: stencil leaves B_a(eta)");
  auto f = [&](double u, double v) { return interaction_fn(k, a, i, s.chart_inverse(a[i], {u, v})); };
  const double f0 = f(0.0, 0.0);
  double lap = 0.0;
  for (int d = 0; d < 2; ++d) {
    auto g = [&](double t) { return d == 0 ? f(t, 0.0) : f(0.0, t); };
    lap += (-g(2 * h) + 16.0 * g(h) - 30.0 * f0 + 16.0 * g(-h) - g(-2 * h)) / (12.0 * h * h);
  }
  return lap;
}

double stability_quantity(const KFunction& k, const Configuration& a, double h) {
  const Surface& s = k.surface();
  double l = 0.0;
  for (int i = 0; i < int(a.size()); ++i)
    l += interaction_laplacian(k, a, i, h) - 2.0 * s.gauss_curvature(a[i]) * interaction_at_center(k, a, i);
  return l;
}

}  // namespace barymorse
