#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>

#include "surface_impl.hpp"

namespace barymorse {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kR = sphere::kRadius;

double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
Point cross(const Point& a, const Point& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
Point scale(const Point& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
Point add(const Point& a, const Point& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
double norm(const Point& a) { return std::sqrt(dot(a, a)); }

// Gauss-Legendre nodes (descending cos theta) and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& t, std::vector<double>& w) {
  t.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    t[i] = x;
    w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

// Legendre functions normalised to unit L2 norm on [-1, 1], for all
// 0 <= m <= l <= lmax at one value of t; index m * (lmax+1) + l.
void normalized_legendre(int lmax, double t, std::vector<double>& out) {
  const int stride = lmax + 1;
  out.assign(std::size_t(stride) * stride, 0.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
  double pmm = 1.0 / std::numbers::sqrt2;
  for (int m = 0; m <= lmax; ++m) {
    if (m > 0) pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    double* col = out.data() + std::size_t(m) * stride;
    col[m] = pmm;
    if (m + 1 <= lmax) col[m + 1] = std::sqrt(2.0 * m + 3.0) * t * pmm;
    for (int l = m + 2; l <= lmax; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
      const double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) / (4.0 * (l - 1) * (l - 1) - 1.0));
      col[l] = a * (t * col[l - 1] - b * col[l - 2]);
    }
  }
}

std::size_t slot_index(int l, int m, bool cosine) {
  const std::size_t base = std::size_t(l) * l;
  if (m == 0) return base;
  return base + 2 * m - (cosine ? 1 : 0);
}

class SphereSurface final : public Surface {
 public:
  SphereSurface(int n, double eta) : Surface(n, eta), lmax_(n - 1), nlon_(2 * n) {
    gauss_legendre(n, t_, w_);
    const std::size_t slots = std::size_t(lmax_ + 1) * (lmax_ + 1);
    slot_mu_.assign(slots, 0.0);
    slot_w_.assign(slots, 1.0);
    for (int l = 0; l <= lmax_; ++l)
      for (int m = 0; m <= l; ++m) {
        const double mu = 4.0 * kPi * l * (l + 1.0);  // l(l+1)/r^2
        slot_mu_[slot_index(l, m, true)] = mu;
        if (m > 0) slot_mu_[slot_index(l, m, false)] = mu;
      }
    const int stride = lmax_ + 1;
    plm_.resize(std::size_t(n) * stride * stride);
    std::vector<double> tmp;
    for (int j = 0; j < n; ++j) {
      normalized_legendre(lmax_, t_[j], tmp);
      std::copy(tmp.begin(), tmp.end(), plm_.begin() + std::size_t(j) * stride * stride);
    }
    std::vector<double> rin(nlon_);
    std::vector<fftw_complex> cout(nlon_ / 2 + 1);
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fwd_ = fftw_plan_dft_r2c_1d(nlon_, rin.data(), cout.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    inv_ = fftw_plan_dft_c2r_1d(nlon_, cout.data(), rin.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  }

  ~SphereSurface() override {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }

  SurfaceKind kind() const override { return SurfaceKind::sphere; }
  double eta0() const override { return kR; }
  double euler_characteristic() const override { return 2.0; }
  double grid_spacing() const override { return kPi * kR / n_; }
  std::size_t grid_size() const override { return std::size_t(n_) * nlon_; }
  Point node(std::size_t i) const override {
    const std::size_t j = i / nlon_, k = i % nlon_;
    const double t = t_[j], s = std::sqrt(1.0 - t * t);
    const double phi = 2.0 * kPi * double(k) / nlon_;
    return {s * std::cos(phi), s * std::sin(phi), t};
  }
  double weight(std::size_t i) const override {
    return w_[i / nlon_] * (2.0 * kPi / nlon_) * kR * kR;
  }

  std::vector<double> analyze(const std::vector<double>& values) const override {
    const int stride = lmax_ + 1;
    std::vector<double> out(coeff_size(), 0.0);
    std::vector<double> ring(nlon_);
    std::vector<double> spec(2 * (nlon_ / 2 + 1));
    const double c0 = (2.0 * kPi / nlon_) * kR / std::sqrt(2.0 * kPi);
    const double cm = (2.0 * kPi / nlon_) * kR / std::sqrt(kPi);
    for (int j = 0; j < n_; ++j) {
      std::copy(values.begin() + std::size_t(j) * nlon_, values.begin() + std::size_t(j + 1) * nlon_, ring.begin());
      fftw_execute_dft_r2c(fwd_, ring.data(), reinterpret_cast<fftw_complex*>(spec.data()));
      const double* p = plm_.data() + std::size_t(j) * stride * stride;
      for (int m = 0; m <= lmax_; ++m) {
        const double re = spec[2 * m], im = spec[2 * m + 1];
        const double* col = p + std::size_t(m) * stride;
        for (int l = m; l <= lmax_; ++l) {
          const double f = w_[j] * col[l];
          if (m == 0) {
            out[slot_index(l, 0, true)] += c0 * f * re;
          } else {
            out[slot_index(l, m, true)] += cm * f * re;
            out[slot_index(l, m, false)] -= cm * f * im;
          }
        }
      }
    }
    return out;
  }

  std::vector<double> synthesize(const std::vector<double>& coeffs) const override {
    const int stride = lmax_ + 1;
    std::vector<double> out(grid_size());
    std::vector<double> spec(2 * (nlon_ / 2 + 1));
    std::vector<double> ring(nlon_);
    const double c0 = 1.0 / (std::sqrt(2.0 * kPi) * kR);
    const double cm = 1.0 / (2.0 * std::sqrt(kPi) * kR);
    for (int j = 0; j < n_; ++j) {
      std::fill(spec.begin(), spec.end(), 0.0);
      const double* p = plm_.data() + std::size_t(j) * stride * stride;
      for (int m = 0; m <= lmax_; ++m) {
        const double* col = p + std::size_t(m) * stride;
        double a = 0.0, b = 0.0;
        for (int l = m; l <= lmax_; ++l) {
          a += coeffs[slot_index(l, m, true)] * col[l];
          if (m > 0) b += coeffs[slot_index(l, m, false)] * col[l];
        }
        if (m == 0) {
          spec[0] = c0 * a;
        } else {
          spec[2 * m] = cm * a;
          spec[2 * m + 1] = -cm * b;
        }
      }
      fftw_execute_dft_c2r(inv_, reinterpret_cast<fftw_complex*>(spec.data()), ring.data());
      std::copy(ring.begin(), ring.end(), out.begin() + std::size_t(j) * nlon_);
    }
    return out;
  }

  std::vector<EigenMode> eigenmodes(std::size_t count) const override {
    std::vector<EigenMode> modes;
    for (int l = 1; l <= lmax_ && modes.size() < count; ++l)
      for (int m = 0; m <= l && modes.size() < count; ++m) {
        const double mu = 4.0 * kPi * l * (l + 1.0);
        modes.push_back({mu, l, m, true});
        if (m > 0 && modes.size() < count) modes.push_back({mu, l, m, false});
      }
    return modes;
  }

  double mode_value(const EigenMode& mode, const Point& x) const override {
    std::vector<double> p;
    normalized_legendre(mode.k1, std::clamp(x.z, -1.0, 1.0), p);
    const double plm = p[std::size_t(mode.k2) * (mode.k1 + 1) + mode.k1];
    if (mode.k2 == 0) return plm / (std::sqrt(2.0 * kPi) * kR);
    const double phi = std::atan2(x.y, x.x);
    const double ang = mode.cosine ? std::cos(mode.k2 * phi) : std::sin(mode.k2 * phi);
    return plm * ang / (std::sqrt(kPi) * kR);
  }

  Point normalize(const Point& p) const override {
    const double n = norm(p);
    if (n == 0.0) throw std::invalid_argument("sphere point has zero norm");
    return scale(p, 1.0 / n);
  }
  double distance(const Point& a, const Point& x) const override {
    return kR * std::atan2(norm(cross(a, x)), dot(a, x));
  }

  std::array<Point, 2> tangent_frame(const Point& a) const override {
    Point e1 = cross({0.0, 0.0, 1.0}, a);
    if (norm(e1) < 0.5) e1 = cross({1.0, 0.0, 0.0}, a);
    e1 = scale(e1, 1.0 / norm(e1));
    return {e1, cross(a, e1)};
  }

  // Stereographic projection from the antipode, scaled to be isometric at a.
  Vec2 chart(const Point& a, const Point& x) const override {
    const double den = 1.0 + dot(a, x);
    if (den < 1e-14) throw std::domain_error("sphere chart: point at the antipode");
    const auto e = tangent_frame(a);
    return {2.0 * kR * dot(x, e[0]) / den, 2.0 * kR * dot(x, e[1]) / den};
  }
  double chart_radius(const Point& a, const Point& x) const override {
    const Point d{x.x - a.x, x.y - a.y, x.z - a.z};
    const Point p{x.x + a.x, x.y + a.y, x.z + a.z};
    const double np = norm(p);
    if (np == 0.0) return std::numeric_limits<double>::infinity();
    return 2.0 * kR * norm(d) / np;
  }
  Point chart_inverse(const Point& a, const Vec2& y) const override {
    const double rho = std::hypot(y[0], y[1]);
    if (rho == 0.0) return a;
    const double theta = 2.0 * std::atan(rho / (2.0 * kR));
    const auto e = tangent_frame(a);
    const Point dir = add(scale(e[0], y[0] / rho), scale(e[1], y[1] / rho));
    return normalize(add(scale(a, std::cos(theta)), scale(dir, std::sin(theta))));
  }
  Vec2 rho_drho_da(const Point& a, const Point& x) const override {
    const auto e = tangent_frame(a);
    const double t = dot(a, x);
    const double f = -4.0 * kR / ((1.0 + t) * (1.0 + t));
    return {f * dot(e[0], x), f * dot(e[1], x)};
  }
  double gauss_curvature(const Point&) const override { return 4.0 * kPi; }

  double conformal_profile(double rho) const override {
    const double c = outer_.value(rho);
    return 2.0 * std::log1p(c * c / (4.0 * kR * kR));
  }
  double conformal_profile_drho_over_rho(double rho) const override {
    const double c = outer_.value(rho);
    return outer_.psi_dpsi_over_t(rho) / (kR * kR * (1.0 + c * c / (4.0 * kR * kR)));
  }

  double green(const Point& a, const Point& x) const override {
    const Point d{a.x - x.x, a.y - x.y, a.z - x.z};
    const double q = dot(d, d) / 4.0;  // (1 - cos angle)/2
    if (q == 0.0) throw std::domain_error("sphere green: coincident points");
    return (-std::log(q) - 1.0) / (4.0 * kPi);
  }
  double green_series(const Point& a, const Point& x, int terms) const override {
    return sphere::green_legendre(dot(a, x), terms > 0 ? terms : 2000);
  }
  double robin() const override { return sphere::robin_constant(); }

 private:
  int lmax_;
  int nlon_;
  std::vector<double> t_, w_;
  std::vector<double> plm_;
  CutoffProfile outer_{2.0 * kR};
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

}  // namespace

namespace sphere {

double green_closed(double cos_angle) {
  const double q = (1.0 - cos_angle) / 2.0;
  if (q <= 0.0) throw std::domain_error("sphere green: coincident points");
  return (-std::log(q) - 1.0) / (4.0 * kPi);
}

double green_legendre(double t, int lmax) {
  double p0 = 1.0, p1 = t, g = 0.0;
  for (int l = 1; l <= lmax; ++l) {
    g += (2.0 * l + 1.0) * p1 / (4.0 * kPi * l * (l + 1.0));
    const double p2 = ((2.0 * l + 1.0) * t * p1 - l * p0) / (l + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return g;
}

double robin_constant() { return (std::log(2.0 * kR) - 0.5) / (2.0 * kPi); }

}  // namespace sphere

namespace detail {
SurfacePtr make_sphere(int n, double eta) { return std::make_shared<SphereSurface>(n, eta); }
}  // namespace detail

}  // namespace barymorse
