#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>

#include "surface_impl.hpp"

namespace barymorse {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEuler = 0.57721566490153286061;

// Heat-kernel split time for the pointwise Ewald sum. Real-space images
// beyond the 3x3 block and reciprocal vectors with |k|^2 > 64 contribute
// below 1e-16.
constexpr double kEwaldT0 = 0.015;
constexpr int kEwaldK = 8;

double e1(double s) {
  if (s > 700.0) return 0.0;
  return -std::expint(-s);
}

struct ReciprocalTable {
  // coef[k1][k2 + K] for the half plane k1 > 0 or (k1 == 0, k2 > 0), already
  // doubled for the conjugate partner.
  double coef[kEwaldK + 1][2 * kEwaldK + 1] = {};
  ReciprocalTable() {
    for (int k1 = 0; k1 <= kEwaldK; ++k1)
      for (int k2 = -kEwaldK; k2 <= kEwaldK; ++k2) {
        if (k1 == 0 && k2 <= 0) continue;
        const double kk = double(k1 * k1 + k2 * k2);
        if (kk > double(kEwaldK * kEwaldK)) continue;
        const double mu = 4.0 * kPi * kPi * kk;
        coef[k1][k2 + kEwaldK] = 2.0 * std::exp(-mu * kEwaldT0) / mu;
      }
  }
};

const ReciprocalTable& reciprocal() {
  static const ReciprocalTable table;
  return table;
}

double wrap01(double v) {
  v -= std::floor(v);
  if (v >= 1.0) v -= 1.0;
  return v;
}

}  // namespace

namespace torus {

Vec2 min_image(double dx, double dy) {
  dx -= std::round(dx);
  dy -= std::round(dy);
  return {dx, dy};
}

void green_derivatives(double dx, double dy, double& g, Vec2& grad, Mat2& hess) {
  const Vec2 y = min_image(dx, dy);
  g = -kEwaldT0;
  grad = {0.0, 0.0};
  hess = {0.0, 0.0, 0.0, 0.0};
  for (int n1 = -1; n1 <= 1; ++n1)
    for (int n2 = -1; n2 <= 1; ++n2) {
      const double z1 = y[0] + n1, z2 = y[1] + n2;
      const double r2 = z1 * z1 + z2 * z2;
      if (r2 == 0.0) throw std::domain_error("torus green: coincident points");
      const double s = r2 / (4.0 * kEwaldT0);
      if (s > 700.0) continue;
      g += e1(s) / (4.0 * kPi);
      const double es = std::exp(-s);
      const double c = -es / (2.0 * kPi * r2);
      grad[0] += c * z1;
      grad[1] += c * z2;
      // d/dz_j of c z_i with c = -(1/2pi) e^{-s}/r^2
      const double dc = es / (2.0 * kPi) * (1.0 / (2.0 * kEwaldT0 * r2) + 2.0 / (r2 * r2));
      hess[0] += c + dc * z1 * z1;
      hess[1] += dc * z1 * z2;
      hess[3] += c + dc * z2 * z2;
    }
  const auto& tab = reciprocal();
  const std::complex<double> w1 = std::polar(1.0, 2.0 * kPi * y[0]);
  const std::complex<double> w2 = std::polar(1.0, 2.0 * kPi * y[1]);
  std::complex<double> p2[2 * kEwaldK + 1];
  p2[kEwaldK] = 1.0;
  for (int k = 1; k <= kEwaldK; ++k) {
    p2[kEwaldK + k] = p2[kEwaldK + k - 1] * w2;
    p2[kEwaldK - k] = std::conj(p2[kEwaldK + k]);
  }
  std::complex<double> p1 = 1.0;
  for (int k1 = 0; k1 <= kEwaldK; ++k1) {
    for (int k2 = -kEwaldK; k2 <= kEwaldK; ++k2) {
      const double c = tab.coef[k1][k2 + kEwaldK];
      if (c == 0.0) continue;
      const std::complex<double> e = p1 * p2[k2 + kEwaldK];
      const double cs = e.real(), sn = e.imag();
      const double a1 = 2.0 * kPi * k1, a2 = 2.0 * kPi * k2;
      g += c * cs;
      grad[0] -= c * a1 * sn;
      grad[1] -= c * a2 * sn;
      hess[0] -= c * a1 * a1 * cs;
      hess[1] -= c * a1 * a2 * cs;
      hess[3] -= c * a2 * a2 * cs;
    }
    p1 *= w1;
  }
  hess[2] = hess[1];
}

double green(double dx, double dy) {
  const Vec2 y = min_image(dx, dy);
  double g = -kEwaldT0;
  for (int n1 = -1; n1 <= 1; ++n1)
    for (int n2 = -1; n2 <= 1; ++n2) {
      const double z1 = y[0] + n1, z2 = y[1] + n2;
      const double r2 = z1 * z1 + z2 * z2;
      if (r2 == 0.0) throw std::domain_error("torus green: coincident points");
      g += e1(r2 / (4.0 * kEwaldT0)) / (4.0 * kPi);
    }
  const auto& tab = reciprocal();
  const std::complex<double> w1 = std::polar(1.0, 2.0 * kPi * y[0]);
  const std::complex<double> w2 = std::polar(1.0, 2.0 * kPi * y[1]);
  std::complex<double> p2[2 * kEwaldK + 1];
  p2[kEwaldK] = 1.0;
  for (int k = 1; k <= kEwaldK; ++k) {
    p2[kEwaldK + k] = p2[kEwaldK + k - 1] * w2;
    p2[kEwaldK - k] = std::conj(p2[kEwaldK + k]);
  }
  std::complex<double> p1 = 1.0;
  for (int k1 = 0; k1 <= kEwaldK; ++k1) {
    for (int k2 = -kEwaldK; k2 <= kEwaldK; ++k2) {
      const double c = tab.coef[k1][k2 + kEwaldK];
      if (c != 0.0) g += c * (p1 * p2[k2 + kEwaldK]).real();
    }
    p1 *= w1;
  }
  return g;
}

// Fourier series summed in closed form along one lattice direction:
// the k1 = 0 column gives t^2/2 - t/2 + 1/12 and each k1 != 0 column a
// hyperbolic profile in t. t is the coordinate farther from the lattice.
double green_series(double dx, double dy, int terms) {
  Vec2 y = min_image(dx, dy);
  if (std::abs(y[0]) > std::abs(y[1])) std::swap(y[0], y[1]);
  const double u = y[0];
  const double t = std::abs(y[1]);
  if (t == 0.0) throw std::domain_error("torus green_series: coincident points");
  if (terms <= 0) terms = std::min(1000000, int(std::ceil(7.0 / t)) + 8);
  double g = t * t / 2.0 - t / 2.0 + 1.0 / 12.0;
  for (int k = 1; k <= terms; ++k) {
    const double kappa = 2.0 * kPi * k;
    const double num = std::exp(-kappa * t) + std::exp(-kappa * (1.0 - t));
    const double term = 2.0 * std::cos(2.0 * kPi * k * u) * num / (2.0 * kappa * -std::expm1(-kappa));
    g += term;
  }
  return g;
}

double robin_constant() {
  static const double value = [] {
    double h = (std::log(4.0 * kEwaldT0) - kEuler) / (4.0 * kPi) - kEwaldT0;
    for (int n1 = -2; n1 <= 2; ++n1)
      for (int n2 = -2; n2 <= 2; ++n2) {
        if (n1 == 0 && n2 == 0) continue;
        h += e1(double(n1 * n1 + n2 * n2) / (4.0 * kEwaldT0)) / (4.0 * kPi);
      }
    const auto& tab = reciprocal();
    for (int k1 = 0; k1 <= kEwaldK; ++k1)
      for (int k2 = -kEwaldK; k2 <= kEwaldK; ++k2) h += tab.coef[k1][k2 + kEwaldK];
    return h;
  }();
  return value;
}

}  // namespace torus

namespace {

class TorusSurface final : public Surface {
 public:
  TorusSurface(int n, double eta) : Surface(n, eta), half_(n / 2 + 1) {
    const std::size_t nc = std::size_t(n) * half_;
    slot_mu_.assign(2 * nc, 0.0);
    slot_w_.assign(2 * nc, 0.0);
    for (int i1 = 0; i1 < n; ++i1) {
      const int k1 = i1 <= n / 2 ? i1 : i1 - n;
      for (int k2 = 0; k2 < half_; ++k2) {
        const std::size_t s = 2 * (std::size_t(i1) * half_ + k2);
        const double mu = 4.0 * kPi * kPi * double(k1 * k1 + k2 * k2);
        const bool edge_col = (k2 == 0 || k2 == n / 2);
        const bool self_conj = edge_col && (i1 == 0 || i1 == n / 2);
        slot_mu_[s] = slot_mu_[s + 1] = mu;
        slot_w_[s] = edge_col ? 1.0 : 2.0;
        slot_w_[s + 1] = self_conj ? 0.0 : slot_w_[s];
      }
    }
    std::vector<double> rin(std::size_t(n) * n);
    std::vector<fftw_complex> cout(nc);
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fwd_ = fftw_plan_dft_r2c_2d(n, n, rin.data(), cout.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    inv_ = fftw_plan_dft_c2r_2d(n, n, cout.data(), rin.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  }

  ~TorusSurface() override {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }

  SurfaceKind kind() const override { return SurfaceKind::torus; }
  double eta0() const override { return 0.25; }
  double euler_characteristic() const override { return 0.0; }
  double grid_spacing() const override { return 1.0 / n_; }
  std::size_t grid_size() const override { return std::size_t(n_) * n_; }
  Point node(std::size_t i) const override {
    return {double(i / n_) / n_, double(i % n_) / n_, 0.0};
  }
  double weight(std::size_t) const override { return 1.0 / (double(n_) * n_); }

  std::vector<double> analyze(const std::vector<double>& values) const override {
    std::vector<double> in(values);
    std::vector<double> out(coeff_size());
    fftw_execute_dft_r2c(fwd_, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
    const double scale = 1.0 / (double(n_) * n_);
    for (double& c : out) c *= scale;
    return out;
  }

  std::vector<double> synthesize(const std::vector<double>& coeffs) const override {
    std::vector<double> c(coeffs);
    make_hermitian(c);
    std::vector<double> out(grid_size());
    fftw_execute_dft_c2r(inv_, reinterpret_cast<fftw_complex*>(c.data()), out.data());
    return out;
  }

  std::vector<EigenMode> eigenmodes(std::size_t count) const override {
    std::vector<EigenMode> modes;
    const int r = int(std::ceil(std::sqrt(double(count)))) + 2;
    for (int k1 = 0; k1 <= r; ++k1)
      for (int k2 = -r; k2 <= r; ++k2) {
        if (k1 == 0 && k2 <= 0) continue;
        const double mu = 4.0 * kPi * kPi * double(k1 * k1 + k2 * k2);
        modes.push_back({mu, k1, k2, true});
        modes.push_back({mu, k1, k2, false});
      }
    std::stable_sort(modes.begin(), modes.end(), [](const EigenMode& a, const EigenMode& b) {
      if (a.mu != b.mu) return a.mu < b.mu;
      if (a.k1 != b.k1) return a.k1 < b.k1;
      if (a.k2 != b.k2) return a.k2 < b.k2;
      return a.cosine && !b.cosine;
    });
    if (modes.size() > count) modes.resize(count);
    return modes;
  }

  double mode_value(const EigenMode& m, const Point& x) const override {
    const double ph = 2.0 * kPi * (m.k1 * x.x + m.k2 * x.y);
    return std::numbers::sqrt2 * (m.cosine ? std::cos(ph) : std::sin(ph));
  }

  Point normalize(const Point& p) const override { return {wrap01(p.x), wrap01(p.y), 0.0}; }
  double distance(const Point& a, const Point& x) const override {
    const Vec2 y = torus::min_image(x.x - a.x, x.y - a.y);
    return std::hypot(y[0], y[1]);
  }
  Vec2 chart(const Point& a, const Point& x) const override {
    return torus::min_image(x.x - a.x, x.y - a.y);
  }
  Point chart_inverse(const Point& a, const Vec2& y) const override {
    return normalize({a.x + y[0], a.y + y[1], 0.0});
  }
  Vec2 rho_drho_da(const Point& a, const Point& x) const override {
    const Vec2 y = chart(a, x);
    return {-y[0], -y[1]};
  }
  double gauss_curvature(const Point&) const override { return 0.0; }
  double conformal_profile(double) const override { return 0.0; }
  double conformal_profile_drho_over_rho(double) const override { return 0.0; }

  double green(const Point& a, const Point& x) const override {
    return torus::green(x.x - a.x, x.y - a.y);
  }
  double green_series(const Point& a, const Point& x, int terms) const override {
    return torus::green_series(x.x - a.x, x.y - a.y, terms);
  }
  double robin() const override { return torus::robin_constant(); }

  // Reciprocal part by one inverse FFT plus the short-range E1 part near a.
  ScalarField green_field(const Point& a) const override {
    const double t0 = 40.0 / (kPi * kPi * double(n_) * n_);
    std::vector<double> c(coeff_size(), 0.0);
    for (int i1 = 0; i1 < n_; ++i1) {
      const int k1 = i1 <= n_ / 2 ? i1 : i1 - n_;
      for (int k2 = 0; k2 < half_; ++k2) {
        if (k1 == 0 && k2 == 0) continue;
        const double mu = 4.0 * kPi * kPi * double(k1 * k1 + k2 * k2);
        const double amp = std::exp(-mu * t0) / mu;
        const double ph = -2.0 * kPi * (k1 * a.x + k2 * a.y);
        const std::size_t s = 2 * (std::size_t(i1) * half_ + k2);
        c[s] = amp * std::cos(ph);
        c[s + 1] = amp * std::sin(ph);
      }
    }
    c[0] = -t0;
    std::vector<double> v = synthesize(c);
    const double reach = std::sqrt(160.0 * t0);
    const int span = int(std::ceil(reach * n_)) + 1;
    const int c1 = int(std::floor(a.x * n_)), c2 = int(std::floor(a.y * n_));
    for (int d1 = -span; d1 <= span + 1; ++d1)
      for (int d2 = -span; d2 <= span + 1; ++d2) {
        const int i1 = ((c1 + d1) % n_ + n_) % n_;
        const int i2 = ((c2 + d2) % n_ + n_) % n_;
        const Vec2 y = torus::min_image(double(i1) / n_ - a.x, double(i2) / n_ - a.y);
        const double r2 = y[0] * y[0] + y[1] * y[1];
        if (r2 < 1e-24) throw std::domain_error("green_field: a coincides with a grid node");
        if (r2 > reach * reach) continue;
        v[std::size_t(i1) * n_ + i2] += e1(r2 / (4.0 * t0)) / (4.0 * kPi);
      }
    return from_values(std::move(v));
  }

  std::array<Point, 2> tangent_frame(const Point&) const override {
    return {Point{1.0, 0.0, 0.0}, Point{0.0, 1.0, 0.0}};
  }

 protected:
  void canonicalize(std::vector<double>& c) const override { make_hermitian(c); }

 private:
  // Columns k2 = 0 and k2 = N/2 hold both k1 and -k1; keep them conjugate.
  void make_hermitian(std::vector<double>& c) const {
    for (int k2 : {0, n_ / 2}) {
      for (int i1 = 0; i1 <= n_ / 2; ++i1) {
        const int j1 = (n_ - i1) % n_;
        const std::size_t s = 2 * (std::size_t(i1) * half_ + k2);
        const std::size_t t = 2 * (std::size_t(j1) * half_ + k2);
        if (s == t) {
          c[s + 1] = 0.0;
          continue;
        }
        const double re = 0.5 * (c[s] + c[t]);
        const double im = 0.5 * (c[s + 1] - c[t + 1]);
        c[s] = re;
        c[s + 1] = im;
        c[t] = re;
        c[t + 1] = -im;
      }
    }
  }

  int half_;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

}  // namespace

namespace detail {

std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

SurfacePtr make_torus(int n, double eta) { return std::make_shared<TorusSurface>(n, eta); }

}  // namespace detail

}  // namespace barymorse
