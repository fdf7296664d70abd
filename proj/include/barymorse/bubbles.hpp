#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "barymorse/kfunc.hpp"
#include "barymorse/reduced_energy.hpp"
#include "barymorse/surface.hpp"

namespace barymorse {

struct BubbleParams {
  Configuration points;
  std::vector<double> lambda;
  std::vector<double> alpha;  // empty means all ones

  int m() const { return int(points.size()); }
  double alpha_at(int i) const { return alpha.empty() ? 1.0 : alpha[i]; }
  std::vector<double> alpha_or_ones() const;
};

// Throws std::domain_error unless lambda * h <= 0.15 on this surface.
void require_resolvable(const Surface& s, double lambda);
double max_resolvable_lambda(const Surface& s);

// delta_{a,lambda}(x) = ln(8 lambda^2 / (1 + lambda^2 psi_a(x)^2)^2).
double standard_bubble(const Surface& s, const Point& a, double lambda, const Point& x);
// e^{delta + u_a} on the grid, with the extended conformal factor.
ScalarField bubble_source(const Surface& s, const Point& a, double lambda);

// phi_{a,lambda}, lambda dphi/dlambda and dphi/da along the chart axes at a.
// Derivatives come from differentiating the source and Poisson solving.
// With values = false only the spectral coefficients are filled.
struct BubbleBasis {
  ScalarField phi;
  ScalarField lambda_d;
  std::array<ScalarField, 2> a_d;
  double mass = 0.0;  // int e^{delta + u_a}
};
BubbleBasis bubble_basis(const Surface& s, const Point& a, double lambda, bool values = true);

ScalarField projected_bubble(const Surface& s, const Point& a, double lambda);
// U = sum alpha_i phi_{a_i, lambda_i}.
ScalarField approximate_solution(const Surface& s, const BubbleParams& p);

struct Balancing {
  std::vector<double> residual;  // lambda_j^2 F_j / (lambda_1^2 F_1) - 1, j = 2..m
  std::vector<double> balanced_lambda;  // for the given lambda_1
};
Balancing balancing_residual(const KFunction& k, const Configuration& a, const std::vector<double>& lambda);

double integral_Keu(const KFunction& k, const ScalarField& u);
// tau_i = 1 - m pi / (2 alpha_i - 1) lambda_i^{4 alpha_i - 2} F_i(a_i) g_i(a_i) / int K e^u.
double tau(const KFunction& k, const ScalarField& u, const BubbleParams& p, int i);
double tau(const KFunction& k, double keu, const BubbleParams& p, int i);
// tau'_i = 1 - m lambda_i^{4 alpha_i - 2} F_i(a_i) / sum_k lambda_k^{4 alpha_k - 2} F_k(a_k).
double tau_prime(const KFunction& k, const BubbleParams& p, int i);

struct KeuExpansion {
  double quadrature = 0.0;
  double order1 = 0.0;
  double order2 = 0.0;
  double log_term = 0.0;     // (pi/2) sum (Lap F_i - 2 K_g F_i) ln lambda_i
  double shift_term = 0.0;   // 4 pi^2 (sum ln lambda_j / lambda_j^2) sum lambda_i^{4 alpha_i - 2} F_i
};
// Quadrature of K e^U for U = approximate_solution(p) and the closed forms.
KeuExpansion integral_Keu(const KFunction& k, const BubbleParams& p);
KeuExpansion integral_Keu(const KFunction& k, const BubbleParams& p, const ScalarField& u);

// The 4m directions phi_i, lambda_i dphi_i/dlambda_i, dphi_i/da_i (two axes).
std::vector<ScalarField> constraint_directions(const Surface& s, const BubbleParams& p, bool values = false);
// |<w, f>_g| / ||f||_g for each constraint direction f.
std::vector<double> orthogonality_residuals(const Surface& s, const ScalarField& w,
                                            const std::vector<ScalarField>& dirs);

struct WBarConfig {
  double tol = 1e-9;  // on the projected gradient norm
  int max_newton = 30;
  int max_cg = 300;
  double cg_tol = 1e-10;  // relative
};

struct WBarResult {
  ScalarField w;
  double norm = 0.0;
  double energy_before = 0.0;  // J(U)
  double energy_after = 0.0;   // J(U + w)
  double projected_grad = 0.0;
  std::vector<double> orthogonality;
  int newton_steps = 0;
  bool converged = false;
  bool indefinite = false;
  std::string message;
};

// Minimises J_rho(U + w) over w orthogonal in <.,.>_g to the 4m directions.
// rho <= 0 selects 8 pi m.
WBarResult minimize_w_bar(const KFunction& k, double rho, const BubbleParams& p, const WBarConfig& cfg = {});

struct ProjectConfig {
  double eps = 0.1;
  double c1 = 4.0;       // comparability lambda_i < c1 lambda_j
  int max_m = 4;         // scan range when m = 0
  int max_iter = 80;
  double tol_step = 1e-12;
};

struct Decomposition {
  int m = 0;
  BubbleParams params;
  ScalarField w;
  double w_norm = 0.0;
  std::vector<double> orthogonality;
  int iterations = 0;
  bool converged = false;
  bool in_V = false;
  std::vector<std::string> reasons;  // failed membership conditions
  std::optional<double> grad_norm;   // ||grad J_rho(u)||, when K is known
};

// Least-squares fit of u by sum alpha_i phi_{a_i, lambda_i} in the Dirichlet
// norm. m = 0 scans 1..max_m. Pass k (and rho, 0 for 8 pi m) to evaluate
// ||grad J_rho(u)|| as a diagnostic.
Decomposition project_to_V(const Surface& s, const ScalarField& u, int m, const ProjectConfig& cfg = {},
                           const KFunction* k = nullptr, double rho = 0.0);

}  // namespace barymorse
