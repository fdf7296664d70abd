#include "barymorse/surface.hpp"
#include "surface_impl.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace barymorse {

std::string to_string(SurfaceKind kind) {
  return kind == SurfaceKind::torus ? "torus" : "sphere";
}

SurfaceKind surface_kind_from_string(const std::string& name) {
  if (name == "torus") return SurfaceKind::torus;
  if (name == "sphere") return SurfaceKind::sphere;
  throw std::invalid_argument("unsupported surface kind '" + name + "'");
}

// psi = eta (1 + p(s)), s = (t - eta)/eta, p = s + 4s^3 - 7s^4 + 3s^5.
// p' = (1-s)^2 (15 s^2 + 2 s + 1) >= 0, so the blend is monotone.
double CutoffProfile::value(double t) const {
  if (t <= eta) return t;
  if (t >= 2.0 * eta) return 2.0 * eta;
  const double s = (t - eta) / eta;
  const double p = s + s * s * s * (4.0 + s * (-7.0 + 3.0 * s));
  return eta * (1.0 + p);
}

double CutoffProfile::derivative(double t) const {
  if (t <= eta) return 1.0;
  if (t >= 2.0 * eta) return 0.0;
  const double s = (t - eta) / eta;
  return (1.0 - s) * (1.0 - s) * (15.0 * s * s + 2.0 * s + 1.0);
}

double CutoffProfile::psi_dpsi_over_t(double t) const {
  if (t <= eta) return 1.0;
  if (t >= 2.0 * eta) return 0.0;
  return value(t) * derivative(t) / t;
}

ScalarField Surface::from_values(std::vector<double> values) const {
  if (values.size() != grid_size()) throw std::invalid_argument("field size does not match grid");
  ScalarField f;
  f.coeffs = analyze(values);
  f.values = std::move(values);
  return f;
}

ScalarField Surface::from_coeffs(std::vector<double> coeffs) const {
  if (coeffs.size() != coeff_size()) throw std::invalid_argument("coefficient size does not match surface");
  canonicalize(coeffs);
  ScalarField f;
  f.values = synthesize(coeffs);
  f.coeffs = std::move(coeffs);
  return f;
}

ScalarField Surface::zero_field() const {
  ScalarField f;
  f.values.assign(grid_size(), 0.0);
  f.coeffs.assign(coeff_size(), 0.0);
  return f;
}

double Surface::integrate(const std::vector<double>& values) const {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += weight(i) * values[i];
  return s;
}

double Surface::l2_inner(const ScalarField& a, const ScalarField& b) const {
  double s = 0.0;
  for (std::size_t k = 0; k < slot_w_.size(); ++k) s += slot_w_[k] * a.coeffs[k] * b.coeffs[k];
  return s;
}

double Surface::dirichlet_inner(const ScalarField& a, const ScalarField& b) const {
  double s = 0.0;
  for (std::size_t k = 0; k < slot_w_.size(); ++k)
    s += slot_w_[k] * slot_mu_[k] * a.coeffs[k] * b.coeffs[k];
  return s;
}

double Surface::dirichlet_norm(const ScalarField& a) const {
  return std::sqrt(std::max(0.0, dirichlet_inner(a, a)));
}

std::vector<double> Surface::inverse_laplacian(const std::vector<double>& coeffs) const {
  std::vector<double> out(coeffs.size(), 0.0);
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    if (slot_mu_[k] > 0.0) out[k] = coeffs[k] / slot_mu_[k];
  return out;
}

ScalarField Surface::solve_poisson(const ScalarField& f, double mean_tol) const {
  if (std::abs(f.mean()) > mean_tol)
    throw std::invalid_argument("solve_poisson: source has nonzero mean " + std::to_string(f.mean()));
  return from_coeffs(inverse_laplacian(f.coeffs));
}

ScalarField Surface::minus_laplacian(const ScalarField& u) const {
  std::vector<double> c(u.coeffs.size());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = slot_mu_[k] * u.coeffs[k];
  return from_coeffs(std::move(c));
}

double Surface::chart_radius(const Point& a, const Point& x) const {
  const Vec2 y = chart(a, x);
  return std::hypot(y[0], y[1]);
}

double Surface::cutoff(const Point& a, const Point& x) const {
  return cutoff_.value(chart_radius(a, x));
}

double Surface::conformal_factor(const Point& a, const Point& x) const {
  const double rho = chart_radius(a, x);
  if (rho >= 2.0 * eta0()) throw std::domain_error("conformal_factor: point outside B_a(2 eta0)");
  return conformal_profile(rho);
}

double Surface::green_regular(const Point& a, const Point& x) const {
  const double rho = chart_radius(a, x);
  if (rho < 1e-14) return green_regular_diagonal(a);
  return green(a, x) + std::log(cutoff_.value(rho)) / (2.0 * std::numbers::pi);
}

// Fit H0 + c1 r^2 + c2 r^4 through radii eta/4, eta/8, eta/16 along the
// first chart axis.
double Surface::green_regular_diagonal(const Point& a) const {
  Eigen::Matrix3d m;
  Eigen::Vector3d v;
  for (int k = 0; k < 3; ++k) {
    const double r = eta_ / (4.0 * std::pow(2.0, k));
    const Point x = chart_inverse(a, {r, 0.0});
    const double rho = chart_radius(a, x);
    v[k] = green(a, x) + std::log(cutoff_.value(rho)) / (2.0 * std::numbers::pi);
    m(k, 0) = 1.0;
    m(k, 1) = rho * rho;
    m(k, 2) = rho * rho * rho * rho;
  }
  const Eigen::Vector3d c = m.colPivHouseholderQr().solve(v);
  if (!std::isfinite(c[0])) throw std::runtime_error("green_regular: extrapolation not converged");
  return c[0];
}

ScalarField Surface::green_field(const Point& a) const {
  std::vector<double> v(grid_size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point x = node(i);
    if (distance(a, x) < 1e-12) throw std::domain_error("green_field: a coincides with a grid node");
    v[i] = green(a, x);
  }
  return from_values(std::move(v));
}

SurfacePtr build_surface(SurfaceKind kind, int n, double eta) {
  if (kind == SurfaceKind::torus) {
    if (n < 64 || (n & (n - 1)) != 0)
      throw std::invalid_argument("torus resolution must be a power of two >= 64");
  } else if (n < 32) {
    throw std::invalid_argument("sphere quadrature order must be >= 32");
  }
  const double eta0 = kind == SurfaceKind::torus ? 0.25 : sphere::kRadius;
  if (!(eta > 0.0 && eta < eta0))
    throw std::invalid_argument("cutoff radius eta out of range (0, " + std::to_string(eta0) + ")");
  return kind == SurfaceKind::torus ? detail::make_torus(n, eta) : detail::make_sphere(n, eta);
}

double default_eta(SurfaceKind kind) {
  return kind == SurfaceKind::torus ? 0.05 : 0.02 * std::numbers::pi * sphere::kRadius;
}

}  // namespace barymorse
