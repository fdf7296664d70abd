#pragma once

#include <string>
#include <vector>

#include "barymorse/bubbles.hpp"
#include "barymorse/kfunc.hpp"

namespace barymorse {

// Check ids (two-sided: quadrature against closed-form asymptotics):
//   bubble_mass            int e^{delta+u_a} = 8 pi
//   far_field              phi = 8 pi G + 4 pi ln l / l^2 off B_a(eta)
//   near_field             phi = delta + ln(l^2/8) + 8 pi H + 4 pi ln l / l^2 in B_a(eta)
//   rate_derivative_far    l dphi/dl = -8 pi ln l / l^2 off B_a(eta)
//   dirichlet_norm         ||phi||^2
//   norm_rate_pairing      <phi, l dphi/dl>
//   cross_pairing          <phi_j, phi_i>
//   cross_rate_pairing     <phi_j, l_i dphi_i/dl_i>
//   keu_pointwise          K e^U near a_i
//   keu_integral           int K e^U, second-order closed form
//   approx_residual        weak residual of U as an approximate solution
//   rate_gradient          <grad J, l_i dphi_i/dl_i>
//   weight_gradient        <grad J, phi_i>
//   weight_gradient_combined  <grad J, phi_i / ln l_i - (2/alpha_i) l_i dphi_i/dl_i>
//   tau_sum                sum tau_i
//   position_gradient      <grad J, (1/l_i) dphi_i/da_i> against -8 pi (1 + mu) grad F_i(a_i) / l_i
//   position_gradient_normalized  same pairing against -8 pi (1 + mu) grad ln F_i(a_i) / l_i
//   energy_expansion       J_{8 pi m}(u)
std::vector<std::string> expansion_check_ids();

struct ExpansionParams {
  Configuration points;
  std::vector<double> lambdas = {10.0, 20.0, 40.0, 80.0};
  std::vector<double> alphas = {1.0};
  std::vector<double> mus = {0.0};
  int bubble = 0;           // index i for per-bubble checks
  bool balanced = true;     // lambda_j from the balancing condition, else all equal
  bool with_wbar = false;   // u = U + w_bar instead of U
};

struct ExpansionRow {
  double lambda = 0.0;
  double lhs = 0.0;       // quadrature side
  double rhs = 0.0;       // closed form
  double residual = 0.0;  // |lhs - rhs| (relative for keu_* checks)
};

struct ExpansionCell {
  double alpha = 1.0;
  double mu = 0.0;
  // Declared envelope C (ln l)^log_power / l^declared_order.
  double declared_order = 2.0;
  double log_power = 0.0;
  std::vector<ExpansionRow> rows;
  double fitted_order = 0.0;
  double lhs_order = 0.0;  // decay exponent of |lhs| itself
  bool monotone = false;
  bool pass = false;
};

struct ExpansionCheck {
  std::string id;
  std::vector<ExpansionCell> cells;
  bool pass = false;
  std::vector<std::string> notes;
};

struct EnvelopeFit {
  double order = 0.0;
  bool monotone = false;
};
// Decay exponent of r / (ln l)^q by least squares in log-log, and whether
// each residual is at most twice the previous one.
EnvelopeFit fit_envelope(const std::vector<double>& lambdas, const std::vector<double>& residuals, double q);

ExpansionCheck verify_expansion(const KFunction& k, const std::string& id, const ExpansionParams& params);

// Energy correction at a critical configuration: measured
// J_{8 pi m}(U) + 8 pi m (1 + ln m pi) + 8 pi F(A) against
// -4 pi ln l_1 / (l_1^2 F_1) L(A), with balanced rates and alpha = 1.
struct EnergyCorrection {
  double lambda1 = 0.0;
  double measured = 0.0;
  double predicted = 0.0;
  double stability = 0.0;  // L(A)
  bool sign_matches = false;
  double ratio = 0.0;  // measured / predicted
};
EnergyCorrection energy_correction(const KFunction& k, const Configuration& a, double lambda1);

}  // namespace barymorse
