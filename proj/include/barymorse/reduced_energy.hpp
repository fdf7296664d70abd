#pragma once

#include <vector>

#include <Eigen/Dense>

#include "barymorse/kfunc.hpp"
#include "barymorse/surface.hpp"

namespace barymorse {

using Configuration = std::vector<Point>;

// Smallest pairwise surface distance; +inf for m = 1.
double min_pairwise_distance(const Surface& s, const Configuration& a);

// F_i^A(x) = K(x) exp(8 pi H(a_i, x) + 8 pi sum_{j != i} G(x, a_j)).
double interaction_fn(const KFunction& k, const Configuration& a, int i, const Point& x);
// g_i^A(x) = exp(8 pi (alpha_i - 1) H(a_i, x) + 8 pi sum_{j != i} (alpha_j - 1) G(a_j, x)).
double weight_fn(const Surface& s, const Configuration& a, const std::vector<double>& alpha, int i, const Point& x);
// F_i^A(a_i), using the exact diagonal value of H.
double interaction_at_center(const KFunction& k, const Configuration& a, int i);

struct EnergyValue {
  double value = 0.0;
  bool near_collision = false;  // some pair closer than d_min
};

// F_m^K(A) = sum_i ln K(a_i) + 4 pi H(a_i, a_i) + 4 pi sum_{j != i} G(a_i, a_j).
// d_min <= 0 selects 4 eta.
EnergyValue reduced_energy(const KFunction& k, const Configuration& a, double d_min = 0.0);
double reduced_energy_value(const KFunction& k, const Configuration& a);

// Gradient (size 2m) and Hessian (2m x 2m) in the chart coordinates at each
// a_i, assembled analytically on both surfaces.
Eigen::VectorXd reduced_energy_grad(const KFunction& k, const Configuration& a);
Eigen::MatrixXd reduced_energy_hessian(const KFunction& k, const Configuration& a);
// Central-difference fallback with step h (chart units).
Eigen::VectorXd reduced_energy_grad_fd(const KFunction& k, const Configuration& a, double h = 1e-4);
Eigen::MatrixXd reduced_energy_hessian_fd(const KFunction& k, const Configuration& a, double h = 1e-3);

// Moves each a_i by step[2i..2i+1] in its own chart.
Configuration displace(const Surface& s, const Configuration& a, const Eigen::VectorXd& step);

// Laplacian of F_i^A at a_i by the 9-point fourth-order chart stencil with
// step h (<= 0 selects eta / 8).
double interaction_laplacian(const KFunction& k, const Configuration& a, int i, double h = 0.0);
// L(A) = sum_i Laplacian F_i^A(a_i) - 2 K_g(a_i) F_i^A(a_i).
double stability_quantity(const KFunction& k, const Configuration& a, double h = 0.0);

}  // namespace barymorse
