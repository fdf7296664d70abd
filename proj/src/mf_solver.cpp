#include "barymorse/mf_solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/IterativeSolvers>

#include "barymorse/bubbles.hpp"
#include "barymorse/reduced_energy.hpp"

namespace barymorse::detail {
class ScaledHessian;
}

namespace Eigen::internal {
template <>
struct traits<barymorse::detail::ScaledHessian> : public traits<Eigen::SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace barymorse::detail {

// The second variation in coordinates z_s = sqrt(w_s mu_s) c_s, where the
// Dirichlet inner product becomes Euclidean and the operator symmetric.
class ScaledHessian : public Eigen::EigenBase<ScaledHessian> {
 public:
  using Scalar = double;
  using RealScalar = double;
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

  ScaledHessian(const Surface& s, const EnergyAt& e) : s_(s), e_(e) {
    const auto& mu = s.slot_eigenvalues();
    const auto& w = s.slot_weights();
    for (std::size_t k = 0; k < mu.size(); ++k)
      if (w[k] * mu[k] > 0.0) {
        slots_.push_back(k);
        scale_.push_back(std::sqrt(w[k] * mu[k]));
      }
  }
  Eigen::Index rows() const { return Eigen::Index(slots_.size()); }
  Eigen::Index cols() const { return rows(); }

  template <class Rhs>
  Eigen::Product<ScaledHessian, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
    return Eigen::Product<ScaledHessian, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
  }

  Eigen::VectorXd to_scaled(const std::vector<double>& c) const {
    Eigen::VectorXd z(rows());
    for (Eigen::Index i = 0; i < rows(); ++i) z[i] = scale_[i] * c[slots_[i]];
    return z;
  }
  std::vector<double> from_scaled(const Eigen::VectorXd& z) const {
    std::vector<double> c(s_.coeff_size(), 0.0);
    for (Eigen::Index i = 0; i < rows(); ++i) c[slots_[i]] = z[i] / scale_[i];
    return c;
  }
  Eigen::VectorXd apply(const Eigen::VectorXd& z) const { return to_scaled(e_.hessian_apply(from_scaled(z))); }

 private:
  const Surface& s_;
  const EnergyAt& e_;
  std::vector<std::size_t> slots_;
  std::vector<double> scale_;
};

}  // namespace barymorse::detail

namespace Eigen::internal {

template <typename Rhs>
struct generic_product_impl<barymorse::detail::ScaledHessian, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<barymorse::detail::ScaledHessian, Rhs,
                                generic_product_impl<barymorse::detail::ScaledHessian, Rhs>> {
  using Scalar = typename Product<barymorse::detail::ScaledHessian, Rhs>::Scalar;
  template <typename Dest>
  static void scaleAndAddTo(Dest& dst, const barymorse::detail::ScaledHessian& lhs, const Rhs& rhs,
                            const Scalar& alpha) {
    dst.noalias() += alpha * lhs.apply(rhs);
  }
};

}  // namespace Eigen::internal

namespace barymorse {

namespace {

constexpr double kPi = std::numbers::pi;

double dinner(const Surface& s, const std::vector<double>& a, const std::vector<double>& b) {
  const auto& w = s.slot_weights();
  const auto& mu = s.slot_eigenvalues();
  double r = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) r += w[k] * mu[k] * a[k] * b[k];
  return r;
}

}  // namespace

void require_mean_zero(const ScalarField& u, const char* who, double tol) {
  if (std::abs(u.mean()) > tol)
    throw std::invalid_argument(std::string(who) + ": field must have zero mean (mean " + std::to_string(u.mean()) +
                                ")");
}

EnergyAt::EnergyAt(const KFunction& k, double rho, const ScalarField& u)
    : s_(&k.surface()), coeffs_(u.coeffs), rho_(rho) {
  const auto& kv = k.grid_values();
  const double top = *std::max_element(u.values.begin(), u.values.end());
  density_.resize(kv.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < kv.size(); ++i) {
    density_[i] = kv[i] * std::exp(u.values[i] - top);
    sum += s_->weight(i) * density_[i];
  }
  for (double& d : density_) d /= sum;
  const double log_int = top + std::log(sum);
  integral_ = std::exp(log_int);
  value_ = 0.5 * dinner(*s_, coeffs_, coeffs_) - rho * log_int;
}

std::vector<double> EnergyAt::gradient() const {
  std::vector<double> g = s_->inverse_laplacian(s_->analyze(density_));
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = coeffs_[k] - rho_ * g[k];
  return g;
}

std::vector<double> EnergyAt::hessian_apply(const std::vector<double>& h) const {
  const ScalarField hf = s_->from_coeffs(h);
  std::vector<double> ph(density_.size());
  for (std::size_t i = 0; i < ph.size(); ++i) ph[i] = density_[i] * hf.values[i];
  const double mean = s_->integrate(ph);
  for (std::size_t i = 0; i < ph.size(); ++i) ph[i] -= density_[i] * mean;
  std::vector<double> out = s_->inverse_laplacian(s_->analyze(ph));
  // Identity on the raw input: slots that do not survive synthesis stay
  // invertible instead of forming a null space.
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = h[k] - rho_ * out[k];
  return out;
}

double EnergyAt::strong_residual() const {
  std::vector<double> c(coeffs_.size());
  const auto& mu = s_->slot_eigenvalues();
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = mu[k] * coeffs_[k];
  std::vector<double> r = s_->synthesize(c);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] -= rho_ * (density_[i] - 1.0);
    r[i] *= r[i];
  }
  return std::sqrt(s_->integrate(r));
}

double energy(const KFunction& k, double rho, const ScalarField& u) {
  require_mean_zero(u, "energy");
  return EnergyAt(k, rho, u).value();
}

ScalarField energy_grad(const KFunction& k, double rho, const ScalarField& u) {
  require_mean_zero(u, "energy_grad");
  return k.surface().from_coeffs(EnergyAt(k, rho, u).gradient());
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::diverged_blowup: return "diverged_blowup";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::failed: return "failed";
  }
  return "failed";
}

SolverState solve_mf(const KFunction& k, double rho, const ScalarField& init, const SolverConfig& cfg) {
  const Surface& s = k.surface();
  if (!(rho > 0.0)) throw std::invalid_argument("solve_mf: rho must be positive");
  require_mean_zero(init, "solve_mf");
  SolverState st;
  st.rho = rho;
  st.u = init;
  const double blowup = cfg.blowup_factor * std::log(1.0 / s.grid_spacing());
  double j_prev = std::numeric_limits<double>::infinity();
  for (int it = 0;; ++it) {
    const EnergyAt e(k, rho, st.u);
    const std::vector<double> g = e.gradient();
    st.grad_norm = std::sqrt(dinner(s, g, g));
    st.energy = e.value();
    st.residual = e.strong_residual();
    st.iterations = it;
    st.grad_history.push_back(st.grad_norm);
    st.energy_history.push_back(st.energy);
    if (st.energy > j_prev + 1e-12 * (1.0 + std::abs(j_prev))) st.energy_monotone = false;
    j_prev = st.energy;
    if (it > 0 && *std::max_element(st.u.values.begin(), st.u.values.end()) > blowup) {
      st.status = SolveStatus::diverged_blowup;
      st.message = "max u exceeded the blow-up threshold";
      return st;
    }
    if (st.grad_norm < cfg.tol) {
      st.status = SolveStatus::converged;
      return st;
    }
    if (it >= cfg.max_iter) {
      st.status = SolveStatus::max_iterations;
      st.message = "Newton iteration limit";
      return st;
    }
    const detail::ScaledHessian op(s, e);
    Eigen::MINRES<detail::ScaledHessian, Eigen::Lower | Eigen::Upper, Eigen::IdentityPreconditioner> minres;
    minres.setMaxIterations(cfg.krylov_iter);
    minres.setTolerance(cfg.krylov_tol);
    minres.compute(op);
    const Eigen::VectorXd z = minres.solve(-op.to_scaled(g));
    const std::vector<double> d = op.from_scaled(z);

    // Backtrack on the gradient norm; the energy is only monitored.
    bool accepted = false;
    for (double t = 1.0; t > 1e-8; t *= 0.5) {
      std::vector<double> c = st.u.coeffs;
      for (std::size_t q = 0; q < c.size(); ++q) c[q] += t * d[q];
      ScalarField trial = s.from_coeffs(std::move(c));
      const std::vector<double> gt = EnergyAt(k, rho, trial).gradient();
      if (std::sqrt(dinner(s, gt, gt)) < (1.0 - 1e-4 * t) * st.grad_norm) {
        st.u = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      st.status = SolveStatus::failed;
      st.message = "line search failed at |grad J| = " + std::to_string(st.grad_norm);
      return st;
    }
  }
}

SpectrumReport linearized_spectrum(const KFunction& k, double rho, const ScalarField& omega, int n, int basis,
                                   double tol_deg_rel) {
  const Surface& s = k.surface();
  if (n < 1) throw std::invalid_argument("linearized_spectrum: n must be >= 1");
  require_mean_zero(omega, "linearized_spectrum");
  const int nb = basis > 0 ? basis : std::max(8 * n, 64);
  if (nb < n) throw std::invalid_argument("linearized_spectrum: basis smaller than n");
  const auto modes = s.eigenmodes(std::size_t(nb));
  const EnergyAt e(k, rho, omega);
  const auto& p = e.density();
  const Eigen::Index g = Eigen::Index(s.grid_size());
  Eigen::MatrixXd v(g, nb);
  Eigen::VectorXd wp(g);
  for (Eigen::Index i = 0; i < g; ++i) {
    const Point x = s.node(std::size_t(i));
    wp[i] = s.weight(std::size_t(i)) * p[std::size_t(i)];
    for (int j = 0; j < nb; ++j) v(i, j) = s.mode_value(modes[j], x);
  }
  const Eigen::MatrixXd m = v.transpose() * (wp.asDiagonal() * v);
  const Eigen::VectorXd b = v.transpose() * wp;
  Eigen::MatrixXd t = -rho * m;
  for (int j = 0; j < nb; ++j) t(j, j) += modes[j].mu;
  const Eigen::MatrixXd h = t + rho * b * b.transpose();

  SpectrumReport r;
  r.basis_size = nb;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> et(0.5 * (t + t.transpose()), Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eh(0.5 * (h + h.transpose()), Eigen::EigenvaluesOnly);
  double scale = 1.0;
  for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(et.eigenvalues()[j]));
  const double tol = tol_deg_rel * scale;
  for (int j = 0; j < n; ++j) {
    const double lt = et.eigenvalues()[j], lh = eh.eigenvalues()[j];
    r.eigenvalues.push_back(lt);
    r.hessian_eigenvalues.push_back(lh);
  }
  for (int j = 0; j < nb; ++j) {
    const double lt = et.eigenvalues()[j];
    if (lt < -tol) ++r.morse_index;
    if (std::abs(lt) <= tol) ++r.kernel_dim;
    if (eh.eigenvalues()[j] < -tol) ++r.hessian_morse_index;
  }
  r.generalized_index = r.morse_index + r.kernel_dim;
  return r;
}

BranchRecord continuation(const KFunction& k, int m, const std::string& direction, const ScalarField& init,
                          const ContinuationConfig& cfg) {
  const Surface& s = k.surface();
  if (m < 1) throw std::invalid_argument("continuation: m must be >= 1");
  if (direction != "sup" && direction != "sub") throw std::invalid_argument("continuation: direction must be sup or sub");
  for (std::size_t i = 0; i < cfg.schedule.size(); ++i)
    if (!(cfg.schedule[i] > 0.0) || (i > 0 && !(cfg.schedule[i] < cfg.schedule[i - 1])))
      throw std::invalid_argument("continuation: schedule must be positive and decreasing");
  const double sign = direction == "sup" ? 1.0 : -1.0;
  BranchRecord br;
  br.m = m;
  br.direction = direction;

  ScalarField u = init;
  std::deque<double> todo(cfg.schedule.begin(), cfg.schedule.end());
  todo.push_back(0.0);
  std::optional<double> last_ok;
  bool blown = false;
  while (!todo.empty()) {
    const double mu = todo.front();
    todo.pop_front();
    const double rho = 8.0 * kPi * m * (1.0 + sign * mu);
    const SolverState st = solve_mf(k, rho, u, cfg.solver);
    if (st.status != SolveStatus::converged && st.status != SolveStatus::diverged_blowup && mu > 0.0 && last_ok) {
      const double mid = 0.5 * (*last_ok + mu);
      if (*last_ok - mid >= cfg.min_mu) {
        todo.push_front(mu);
        todo.push_front(mid);
        br.notes.push_back("step halved at mu = " + std::to_string(mu));
        continue;
      }
    }
    ContinuationStep step;
    step.mu = mu;
    step.rho = rho;
    step.status = st.status;
    step.energy = st.energy;
    step.grad_norm = st.grad_norm;
    step.max_u = *std::max_element(st.u.values.begin(), st.u.values.end());
    if (st.status == SolveStatus::converged) {
      const SpectrumReport sp = linearized_spectrum(k, rho, st.u, cfg.spectrum_modes);
      step.morse_index = sp.morse_index;
      step.generalized_index = sp.generalized_index;
    }
    try {
      ProjectConfig pc;
      pc.eps = cfg.eps;
      const Decomposition d = project_to_V(s, st.u, m, pc);
      step.in_V = d.in_V;
      step.fitted_points = d.params.points;
      step.fitted_lambda = d.params.lambda;
      step.fit_w_norm = d.w_norm;
    } catch (const std::exception& e) {
      br.notes.push_back(std::string("projection failed at mu = ") + std::to_string(mu) + ": " + e.what());
    }
    br.steps.push_back(step);
    if (st.status == SolveStatus::converged) {
      u = st.u;
      last_ok = mu;
    } else {
      blown = st.status == SolveStatus::diverged_blowup || step.in_V;
      br.notes.push_back("solver stopped at mu = " + std::to_string(mu) + ": " + st.message);
      break;
    }
  }
  const auto& last = br.steps.back();
  if (last.status == SolveStatus::converged && last.mu == 0.0) {
    br.outcome = "converged";
  } else if (blown || (!br.steps.empty() && br.steps.back().in_V)) {
    br.outcome = "blown-up";
  } else {
    br.outcome = "incomplete";
  }
  // Concentration rates along the branch, largest fitted rate per step.
  std::vector<double> rates;
  for (const auto& st : br.steps)
    if (!st.fitted_lambda.empty()) rates.push_back(*std::max_element(st.fitted_lambda.begin(), st.fitted_lambda.end()));
  br.lambda_monotone = rates.size() >= 2 && std::is_sorted(rates.begin(), rates.end());
  if (br.outcome == "blown-up") {
    for (auto it = br.steps.rbegin(); it != br.steps.rend(); ++it) {
      if (it->fitted_points.empty()) continue;
      try {
        br.limit_stability = stability_quantity(k, it->fitted_points);
      } catch (const std::exception& e) {
        br.notes.push_back(std::string("stability at fitted points unavailable: ") + e.what());
      }
      break;
    }
  }
  return br;
}

}  // namespace barymorse
