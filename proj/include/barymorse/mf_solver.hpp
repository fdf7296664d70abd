#pragma once

#include <optional>
#include <string>
#include <vector>

#include "barymorse/kfunc.hpp"
#include "barymorse/surface.hpp"

namespace barymorse {

// J_rho(u) = 1/2 ||grad u||^2 - rho ln int K e^u, evaluated once at a fixed u.
// Gradients are Riesz representatives in the Dirichlet inner product, so
// <grad J, h>_g = <u, h>_g - rho int K e^u h / int K e^u.
class EnergyAt {
 public:
  EnergyAt(const KFunction& k, double rho, const ScalarField& u);

  double value() const { return value_; }
  double integral() const { return integral_; }  // int K e^u
  double rho() const { return rho_; }
  // K e^u / int K e^u on the grid.
  const std::vector<double>& density() const { return density_; }

  std::vector<double> gradient() const;
  // Second variation applied to h (coefficients), including the rank-one term.
  std::vector<double> hessian_apply(const std::vector<double>& h) const;
  // -Lap u - rho (K e^u / int K e^u - 1) on the grid; its L2 norm.
  double strong_residual() const;

 private:
  const Surface* s_;
  std::vector<double> coeffs_;
  double rho_;
  double value_ = 0.0;
  double integral_ = 0.0;
  std::vector<double> density_;
};

double energy(const KFunction& k, double rho, const ScalarField& u);
ScalarField energy_grad(const KFunction& k, double rho, const ScalarField& u);
// Throws if the field is not mean zero.
void require_mean_zero(const ScalarField& u, const char* who, double tol = 1e-8);

struct SolverConfig {
  double tol = 1e-10;          // on ||grad J||_g
  int max_iter = 60;
  int krylov_iter = 400;
  double krylov_tol = 1e-12;   // relative
  // Blow-up once max u > blowup_factor ln(1/h); 4 by default.
  double blowup_factor = 4.0;
};

enum class SolveStatus { converged, diverged_blowup, max_iterations, failed };
std::string to_string(SolveStatus s);

struct SolverState {
  double rho = 0.0;
  ScalarField u;
  double grad_norm = 0.0;
  double residual = 0.0;  // strong form, L2
  double energy = 0.0;
  SolveStatus status = SolveStatus::failed;
  int iterations = 0;
  bool energy_monotone = true;  // J did not increase along accepted steps
  std::vector<double> grad_history;
  std::vector<double> energy_history;
  std::string message;
};

SolverState solve_mf(const KFunction& k, double rho, const ScalarField& init, const SolverConfig& cfg = {});

struct SpectrumReport {
  std::vector<double> eigenvalues;        // T_omega, ascending
  std::vector<double> hessian_eigenvalues;  // second variation of J
  int morse_index = 0;
  int kernel_dim = 0;
  int generalized_index = 0;
  int hessian_morse_index = 0;
  int basis_size = 0;
};

// Lowest n eigenvalues of T_omega = -Lap - rho K e^w / int K e^w on mean-zero
// fields, by Galerkin projection on the first `basis` eigenmodes (0 selects
// max(8n, 64)). Kernel threshold tol_deg scaled like the reduced Hessian.
SpectrumReport linearized_spectrum(const KFunction& k, double rho, const ScalarField& omega, int n,
                                   int basis = 0, double tol_deg_rel = 1e-6);

struct ContinuationStep {
  double mu = 0.0;
  double rho = 0.0;
  SolveStatus status = SolveStatus::failed;
  double energy = 0.0;
  double grad_norm = 0.0;
  double max_u = 0.0;
  int morse_index = -1;
  int generalized_index = -1;
  bool in_V = false;
  std::vector<Point> fitted_points;
  std::vector<double> fitted_lambda;
  double fit_w_norm = 0.0;
};

struct BranchRecord {
  int m = 0;
  std::string direction;  // "sup" or "sub"
  std::vector<ContinuationStep> steps;
  // "converged", "blown-up" or "incomplete".
  std::string outcome;
  std::optional<double> limit_stability;  // L(A) at the fitted points on blow-up
  bool lambda_monotone = false;
  std::vector<std::string> notes;
};

struct ContinuationConfig {
  std::vector<double> schedule = {0.2, 0.1, 0.05, 0.02, 0.01};
  double min_mu = 1e-5;
  int spectrum_modes = 8;
  double eps = 0.1;
  SolverConfig solver;
};

// Solves (MF) at rho = 8 pi m (1 + mu) ("sup") or (1 - mu) ("sub") along the
// decreasing schedule, warm-started, then attempts rho = 8 pi m itself.
BranchRecord continuation(const KFunction& k, int m, const std::string& direction, const ScalarField& init,
                          const ContinuationConfig& cfg = {});

}  // namespace barymorse
