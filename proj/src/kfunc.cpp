#include "barymorse/kfunc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace barymorse {

namespace {

constexpr double kPi = std::numbers::pi;

double dot3(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

}  // namespace

KFunction::KFunction(SurfacePtr surface, KPreset preset) : surface_(std::move(surface)), preset_(std::move(preset)) {
  const auto& n = preset_.name;
  const bool torus = surface_->kind() == SurfaceKind::torus;
  if (n != "constant" && n != "trig" && n != "gaussian" && n != "linear")
    throw std::invalid_argument("unknown K preset '" + n + "'");
  if (n == "trig" && !torus) throw std::invalid_argument("K preset 'trig' is defined on the torus only");
  if (n == "linear" && torus) throw std::invalid_argument("K preset 'linear' is defined on the sphere only");
  for (const auto& b : preset_.bumps)
    if (!(b.sigma > 0.0)) throw std::invalid_argument("gaussian bump needs sigma > 0");
  auto grid = std::make_shared<std::vector<double>>(surface_->grid_size());
  double kmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid->size(); ++i) {
    (*grid)[i] = value(surface_->node(i));
    kmin = std::min(kmin, (*grid)[i]);
  }
  grid_ = std::move(grid);
  if (!(kmin > 0.0)) throw std::invalid_argument("K must be positive on the surface (grid minimum " + std::to_string(kmin) + ")");
}

double KFunction::value(const Point& x) const {
  const auto& p = preset_;
  double k = p.c0;
  if (p.name == "trig") {
    for (const auto& t : p.trig) {
      const double th = 2.0 * kPi * (t.k1 * x.x + t.k2 * x.y);
      k += t.cos_coef * std::cos(th) + t.sin_coef * std::sin(th);
    }
  } else if (p.name == "gaussian") {
    for (const auto& b : p.bumps) {
      const double s2 = 2.0 * b.sigma * b.sigma;
      if (surface_->kind() == SurfaceKind::torus) {
        const Vec2 y = torus::min_image(x.x - b.center.x, x.y - b.center.y);
        for (int n1 = -1; n1 <= 1; ++n1)
          for (int n2 = -1; n2 <= 1; ++n2) {
            const double z1 = y[0] + n1, z2 = y[1] + n2;
            k += b.amplitude * std::exp(-(z1 * z1 + z2 * z2) / s2);
          }
      } else {
        const double dx = x.x - b.center.x, dy = x.y - b.center.y, dz = x.z - b.center.z;
        const double chord2 = sphere::kRadius * sphere::kRadius * (dx * dx + dy * dy + dz * dz);
        k += b.amplitude * std::exp(-chord2 / s2);
      }
    }
  } else if (p.name == "linear") {
    k += p.linear.x * x.x + p.linear.y * x.y + p.linear.z * x.z;
  }
  return scale_ * k;
}

void KFunction::torus_derivatives(const Point& x, double& k, Vec2& grad, Mat2& hess) const {
  const auto& p = preset_;
  k = p.c0;
  grad = {0.0, 0.0};
  hess = {0.0, 0.0, 0.0, 0.0};
  if (p.name == "trig") {
    for (const auto& t : p.trig) {
      const double th = 2.0 * kPi * (t.k1 * x.x + t.k2 * x.y);
      const double c = std::cos(th), s = std::sin(th);
      const double w1 = 2.0 * kPi * t.k1, w2 = 2.0 * kPi * t.k2;
      const double v = t.cos_coef * c + t.sin_coef * s;
      const double dv = -t.cos_coef * s + t.sin_coef * c;
      k += v;
      grad[0] += w1 * dv;
      grad[1] += w2 * dv;
      hess[0] -= w1 * w1 * v;
      hess[1] -= w1 * w2 * v;
      hess[3] -= w2 * w2 * v;
    }
  } else if (p.name == "gaussian") {
    for (const auto& b : p.bumps) {
      const double is2 = 1.0 / (b.sigma * b.sigma);
      const Vec2 y = torus::min_image(x.x - b.center.x, x.y - b.center.y);
      for (int n1 = -1; n1 <= 1; ++n1)
        for (int n2 = -1; n2 <= 1; ++n2) {
          const double z1 = y[0] + n1, z2 = y[1] + n2;
          const double e = b.amplitude * std::exp(-0.5 * (z1 * z1 + z2 * z2) * is2);
          k += e;
          grad[0] -= z1 * is2 * e;
          grad[1] -= z2 * is2 * e;
          hess[0] += (z1 * z1 * is2 - 1.0) * is2 * e;
          hess[1] += z1 * z2 * is2 * is2 * e;
          hess[3] += (z2 * z2 * is2 - 1.0) * is2 * e;
        }
    }
  }
  hess[2] = hess[1];
  k *= scale_;
  for (double& g : grad) g *= scale_;
  for (double& h : hess) h *= scale_;
}

void KFunction::log_derivatives(const Point& x, double& lnk, Vec2& grad, Mat2& hess) const {
  if (surface_->kind() == SurfaceKind::torus) {
    double k;
    Vec2 g;
    Mat2 h;
    torus_derivatives(x, k, g, h);
    lnk = std::log(k);
    grad = {g[0] / k, g[1] / k};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) hess[2 * i + j] = h[2 * i + j] / k - grad[i] * grad[j];
    return;
  }
  // Sphere: ambient derivatives of K pulled back through the chart, whose
  // inverse is x(y) = a + y_k e_k / r - |y|^2 a / (2 r^2) + O(|y|^3).
  double k;
  double g3[3];
  double h3[9];
  ambient_derivatives(x, k, g3, h3);
  const auto e = surface_->tangent_frame(x);
  const double r = sphere::kRadius;
  const double xv[3] = {x.x, x.y, x.z};
  double gl[3], hl[9];
  for (int p = 0; p < 3; ++p) gl[p] = g3[p] / k;
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q) hl[3 * p + q] = h3[3 * p + q] / k - gl[p] * gl[q];
  double radial = 0.0;
  for (int p = 0; p < 3; ++p) radial += gl[p] * xv[p];
  lnk = std::log(k);
  for (int a = 0; a < 2; ++a) {
    const double ea[3] = {e[a].x, e[a].y, e[a].z};
    grad[a] = (gl[0] * ea[0] + gl[1] * ea[1] + gl[2] * ea[2]) / r;
    for (int b = 0; b < 2; ++b) {
      const double eb[3] = {e[b].x, e[b].y, e[b].z};
      double q = 0.0;
      for (int p = 0; p < 3; ++p)
        for (int t = 0; t < 3; ++t) q += ea[p] * hl[3 * p + t] * eb[t];
      hess[2 * a + b] = (q - (a == b ? radial : 0.0)) / (r * r);
    }
  }
}

void KFunction::ambient_derivatives(const Point& x, double& k, double grad[3], double hess[9]) const {
  const auto& p = preset_;
  k = p.c0;
  for (int i = 0; i < 3; ++i) grad[i] = 0.0;
  for (int i = 0; i < 9; ++i) hess[i] = 0.0;
  if (p.name == "linear") {
    k += dot3(p.linear, x);
    grad[0] = p.linear.x;
    grad[1] = p.linear.y;
    grad[2] = p.linear.z;
  } else if (p.name == "gaussian") {
    const double r2 = sphere::kRadius * sphere::kRadius;
    for (const auto& b : p.bumps) {
      const double c = r2 / (b.sigma * b.sigma);
      const double d[3] = {x.x - b.center.x, x.y - b.center.y, x.z - b.center.z};
      const double e = b.amplitude * std::exp(-0.5 * c * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]));
      k += e;
      for (int i = 0; i < 3; ++i) {
        grad[i] -= c * d[i] * e;
        for (int j = 0; j < 3; ++j) hess[3 * i + j] += (c * c * d[i] * d[j] - (i == j ? c : 0.0)) * e;
      }
    }
  }
  k *= scale_;
  for (int i = 0; i < 3; ++i) grad[i] *= scale_;
  for (int i = 0; i < 9; ++i) hess[i] *= scale_;
}

ScalarField KFunction::on_grid() const {
  return surface_->from_values(*grid_);
}

KFunction KFunction::scaled(double c) const {
  if (!(c > 0.0)) throw std::invalid_argument("K scale must be positive");
  KFunction out(*this);
  out.scale_ *= c;
  auto grid = std::make_shared<std::vector<double>>(*grid_);
  for (double& v : *grid) v *= c;
  out.grid_ = std::move(grid);
  return out;
}

}  // namespace barymorse
