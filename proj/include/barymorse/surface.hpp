#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace barymorse {

// Torus points use (x, y) in [0,1)^2 and ignore z. Sphere points are unit
// vectors; the physical sphere has radius r = 1/(2 sqrt(pi)).
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<double, 4>;  // row-major 2x2

enum class SurfaceKind { torus, sphere };

std::string to_string(SurfaceKind kind);
SurfaceKind surface_kind_from_string(const std::string& name);

class Surface;

// Grid values together with the spectral coefficients of the same function.
// Coefficients live in the surface's slot layout: the L2 inner product is
// sum_s w_s a_s b_s and the Dirichlet inner product adds the factor mu_s.
struct ScalarField {
  std::vector<double> values;
  std::vector<double> coeffs;

  double mean() const { return coeffs.empty() ? 0.0 : coeffs[0]; }
};

// Real L2-orthonormal eigenfunction of -Laplacian.
struct EigenMode {
  double mu = 0.0;
  int k1 = 0;  // torus: wave vector; sphere: degree l
  int k2 = 0;  // torus: wave vector; sphere: order m
  bool cosine = true;
};

// Quintic blend used by the cutoff: psi(t) = t on [0,eta], 2 eta past 2 eta.
struct CutoffProfile {
  double eta = 0.0;
  double value(double t) const;
  double derivative(double t) const;
  // psi(t) psi'(t) / t, finite at t = 0.
  double psi_dpsi_over_t(double t) const;
};

class Surface {
 public:
  virtual ~Surface() = default;

  virtual SurfaceKind kind() const = 0;
  int resolution() const { return n_; }
  double eta() const { return eta_; }
  // Half the radius of the ball on which the isothermal chart is exact.
  virtual double eta0() const = 0;
  virtual double euler_characteristic() const = 0;
  // Mesh width used for resolvability checks.
  virtual double grid_spacing() const = 0;

  // Quadrature grid. Weights sum to the total volume 1.
  virtual std::size_t grid_size() const = 0;
  virtual Point node(std::size_t i) const = 0;
  virtual double weight(std::size_t i) const = 0;

  // Spectral transforms.
  std::size_t coeff_size() const { return slot_mu_.size(); }
  const std::vector<double>& slot_eigenvalues() const { return slot_mu_; }
  const std::vector<double>& slot_weights() const { return slot_w_; }
  virtual std::vector<double> analyze(const std::vector<double>& values) const = 0;
  virtual std::vector<double> synthesize(const std::vector<double>& coeffs) const = 0;
  ScalarField from_values(std::vector<double> values) const;
  ScalarField from_coeffs(std::vector<double> coeffs) const;
  ScalarField zero_field() const;
  // Sample f at every grid node.
  template <class F>
  ScalarField sample(F&& f) const {
    std::vector<double> v(grid_size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(node(i));
    return from_values(std::move(v));
  }

  // First `count` nonconstant eigenmodes sorted by eigenvalue (ties in a
  // fixed deterministic order).
  virtual std::vector<EigenMode> eigenmodes(std::size_t count) const = 0;
  virtual double mode_value(const EigenMode& mode, const Point& x) const = 0;

  // Quadrature functional and inner products.
  double integrate(const std::vector<double>& values) const;
  double l2_inner(const ScalarField& a, const ScalarField& b) const;
  double dirichlet_inner(const ScalarField& a, const ScalarField& b) const;
  double dirichlet_norm(const ScalarField& a) const;

  // Mean-zero u with -Laplacian u = f. Throws if |mean f| > mean_tol.
  ScalarField solve_poisson(const ScalarField& f, double mean_tol = 1e-8) const;
  // (-Laplacian)^{-1} applied to the mean-zero part of the coefficients.
  std::vector<double> inverse_laplacian(const std::vector<double>& coeffs) const;
  // -Laplacian u as a field.
  ScalarField minus_laplacian(const ScalarField& u) const;

  // Geometry.
  virtual Point normalize(const Point& p) const = 0;
  virtual double distance(const Point& a, const Point& x) const = 0;
  // Isothermal chart centred at a: y_a(x) and its inverse.
  virtual Vec2 chart(const Point& a, const Point& x) const = 0;
  virtual Point chart_inverse(const Point& a, const Vec2& y) const = 0;
  // |y_a(x)|; the sphere also answers at the antipode (+inf).
  virtual double chart_radius(const Point& a, const Point& x) const;
  // rho * d rho / d a along the chart axes at a, rho = |y_a(x)|.
  virtual Vec2 rho_drho_da(const Point& a, const Point& x) const = 0;
  double cutoff(const Point& a, const Point& x) const;
  const CutoffProfile& cutoff_profile() const { return cutoff_; }
  virtual double gauss_curvature(const Point& x) const = 0;
  // u_a(x); throws outside B_a(2 eta0).
  double conformal_factor(const Point& a, const Point& x) const;
  // Smooth global extension of u_a used in bubble sources, as a function of
  // the chart radius, plus (d/d rho)/rho of it.
  virtual double conformal_profile(double rho) const = 0;
  virtual double conformal_profile_drho_over_rho(double rho) const = 0;

  // Green function with -Lap G + 1 = delta, zero mean.
  virtual double green(const Point& a, const Point& x) const = 0;
  // Independent series evaluation; `terms` = 0 selects a default.
  virtual double green_series(const Point& a, const Point& x, int terms = 0) const = 0;
  // Exact value of H(a,a) (homogeneous surfaces).
  virtual double robin() const = 0;
  // H(a,x) = G(a,x) + (1/2pi) ln psi_a(x); at x = a by even-order
  // extrapolation along a chart ray.
  double green_regular(const Point& a, const Point& x) const;
  double green_regular_diagonal(const Point& a) const;
  // G(a, node) on the whole grid. Throws if a sits on a grid node.
  virtual ScalarField green_field(const Point& a) const;

  // Orthonormal tangent frame at a used for chart coordinates.
  virtual std::array<Point, 2> tangent_frame(const Point& a) const = 0;

 protected:
  Surface(int n, double eta) : n_(n), eta_(eta) { cutoff_.eta = eta; }
  // Projects a coefficient vector onto the coefficients of real fields.
  virtual void canonicalize(std::vector<double>&) const {}
  int n_;
  double eta_;
  CutoffProfile cutoff_;
  std::vector<double> slot_mu_;
  std::vector<double> slot_w_;
};

using SurfacePtr = std::shared_ptr<const Surface>;

// Builds a unit-volume model surface. Torus: N x N grid, N >= 64 a power of
// two. Sphere: Gauss-Legendre order N >= 32 with 2N longitudes.
SurfacePtr build_surface(SurfaceKind kind, int n, double eta);
double default_eta(SurfaceKind kind);

// Flat-torus specific routines exposed for derivative assembly and tests.
namespace torus {
// Minimum-image displacement in [-1/2, 1/2)^2.
Vec2 min_image(double dx, double dy);
double green(double dx, double dy);
// Gradient and Hessian of G(0, y) with respect to y.
void green_derivatives(double dx, double dy, double& g, Vec2& grad, Mat2& hess);
double green_series(double dx, double dy, int terms);
double robin_constant();
}  // namespace torus

namespace sphere {
inline constexpr double kRadius = 0.28209479177387814;  // 1 / (2 sqrt(pi))
double green_closed(double cos_angle);
double green_legendre(double cos_angle, int lmax);
double robin_constant();
}  // namespace sphere

}  // namespace barymorse
