#pragma once

#include <memory>
#include <string>
#include <vector>

#include "barymorse/surface.hpp"

namespace barymorse {

// Positive prescribed function K, built from a named analytic preset.
//   constant:  K = c
//   trig:      K = c0 + sum a cos(2 pi k.x) + b sin(2 pi k.x)      (torus)
//   gaussian:  K = c0 + sum A exp(-d^2 / 2 sigma^2)
//              torus d = periodised displacement (3x3 images),
//              sphere d = chord length on the area-one sphere
//   linear:    K = c0 + b.x  with x the unit position vector      (sphere)
struct TrigTerm {
  int k1 = 0;
  int k2 = 0;
  double cos_coef = 0.0;
  double sin_coef = 0.0;
};

struct GaussianBump {
  Point center;
  double amplitude = 0.0;
  double sigma = 0.1;
};

struct KPreset {
  std::string name = "constant";
  double c0 = 1.0;
  std::vector<TrigTerm> trig;
  std::vector<GaussianBump> bumps;
  Point linear;
};

class KFunction {
 public:
  KFunction(SurfacePtr surface, KPreset preset);

  const KPreset& preset() const { return preset_; }
  const Surface& surface() const { return *surface_; }
  bool is_constant() const { return preset_.name == "constant"; }

  double value(const Point& x) const;
  // ln K with its gradient and Hessian in the chart coordinates at x.
  void log_derivatives(const Point& x, double& lnk, Vec2& grad, Mat2& hess) const;
  ScalarField on_grid() const;
  // K at every grid node (cached at construction).
  const std::vector<double>& grid_values() const { return *grid_; }
  // Returns a copy with K replaced by c K.
  KFunction scaled(double c) const;

 private:
  void torus_derivatives(const Point& x, double& k, Vec2& grad, Mat2& hess) const;
  // Sphere presets as functions on R^3.
  void ambient_derivatives(const Point& x, double& k, double grad[3], double hess[9]) const;

  SurfacePtr surface_;
  KPreset preset_;
  double scale_ = 1.0;
  std::shared_ptr<const std::vector<double>> grid_;
};

}  // namespace barymorse
