#include "barymorse/bubbles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "barymorse/mf_solver.hpp"

namespace barymorse {

namespace {

constexpr double kPi = std::numbers::pi;
using Coeffs = std::vector<double>;

double dinner(const Surface& s, const Coeffs& a, const Coeffs& b) {
  const auto& w = s.slot_weights();
  const auto& mu = s.slot_eigenvalues();
  double r = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) r += w[k] * mu[k] * a[k] * b[k];
  return r;
}

void axpy(double t, const Coeffs& x, Coeffs& y) {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += t * x[k];
}

ScalarField coeff_field(Coeffs c) {
  ScalarField f;
  f.coeffs = std::move(c);
  return f;
}

}  // namespace

std::vector<double> BubbleParams::alpha_or_ones() const {
  return alpha.empty() ? std::vector<double>(points.size(), 1.0) : alpha;
}

double max_resolvable_lambda(const Surface& s) { return 0.15 / s.grid_spacing(); }

void require_resolvable(const Surface& s, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("bubble rate must be positive");
  if (lambda * s.grid_spacing() > 0.15 * (1.0 + 1e-12))
    throw std::domain_error("bubble rate " + std::to_string(lambda) + " not resolvable: lambda h = " +
                            std::to_string(lambda * s.grid_spacing()) + " > 0.15");
}

double standard_bubble(const Surface& s, const Point& a, double lambda, const Point& x) {
  const double psi = s.cutoff(a, x);
  const double q = 1.0 + lambda * lambda * psi * psi;
  return std::log(8.0 * lambda * lambda / (q * q));
}

ScalarField bubble_source(const Surface& s, const Point& a, double lambda) {
  const auto& cut = s.cutoff_profile();
  std::vector<double> v(s.grid_size());
  const double l2 = lambda * lambda;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double rho = s.chart_radius(a, s.node(i));
    const double psi = cut.value(rho);
    const double q = 1.0 + l2 * psi * psi;
    v[i] = 8.0 * l2 * std::exp(s.conformal_profile(rho)) / (q * q);
  }
  return s.from_values(std::move(v));
}

BubbleBasis bubble_basis(const Surface& s, const Point& a, double lambda, bool values) {
  require_resolvable(s, lambda);
  const auto& cut = s.cutoff_profile();
  const std::size_t n = s.grid_size();
  std::vector<double> src(n), lam(n), d0(n, 0.0), d1(n, 0.0);
  const double l2 = lambda * lambda;
  for (std::size_t i = 0; i < n; ++i) {
    const Point x = s.node(i);
    const double rho = s.chart_radius(a, x);
    const double psi = cut.value(rho);
    const double lp = l2 * psi * psi;
    const double q = 1.0 + lp;
    const double e = 8.0 * l2 * std::exp(s.conformal_profile(rho)) / (q * q);
    src[i] = e;
    lam[i] = e * 2.0 * (1.0 - lp) / q;
    // d ln(source)/d rho divided by rho; zero where everything is constant.
    const double f = -4.0 * l2 * cut.psi_dpsi_over_t(rho) / q + s.conformal_profile_drho_over_rho(rho);
    if (f != 0.0) {
      const Vec2 g = s.rho_drho_da(a, x);
      d0[i] = e * f * g[0];
      d1[i] = e * f * g[1];
    }
  }
  BubbleBasis b;
  const Coeffs cs = s.analyze(src);
  b.mass = cs[0];
  auto finish = [&](const Coeffs& c) {
    Coeffs u = s.inverse_laplacian(c);
    return values ? s.from_coeffs(std::move(u)) : coeff_field(std::move(u));
  };
  b.phi = finish(cs);
  b.lambda_d = finish(s.analyze(lam));
  b.a_d[0] = finish(s.analyze(d0));
  b.a_d[1] = finish(s.analyze(d1));
  return b;
}

ScalarField projected_bubble(const Surface& s, const Point& a, double lambda) {
  require_resolvable(s, lambda);
  return s.from_coeffs(s.inverse_laplacian(bubble_source(s, a, lambda).coeffs));
}

ScalarField approximate_solution(const Surface& s, const BubbleParams& p) {
  if (p.lambda.size() != p.points.size() || (!p.alpha.empty() && p.alpha.size() != p.points.size()))
    throw std::invalid_argument("approximate_solution: parameter sizes differ");
  Coeffs c(s.coeff_size(), 0.0);
  for (int i = 0; i < p.m(); ++i) {
    require_resolvable(s, p.lambda[i]);
    Coeffs src = bubble_source(s, p.points[i], p.lambda[i]).coeffs;
    axpy(p.alpha_at(i), s.inverse_laplacian(src), c);
  }
  return s.from_coeffs(std::move(c));
}

Balancing balancing_residual(const KFunction& k, const Configuration& a, const std::vector<double>& lambda) {
  const int m = int(a.size());
  if (m < 2) throw std::invalid_argument("balancing_residual: needs m >= 2");
  if (int(lambda.size()) != m) throw std::invalid_argument("balancing_residual: lambda size differs from m");
  std::vector<double> f(m);
  for (int i = 0; i < m; ++i) f[i] = interaction_at_center(k, a, i);
  Balancing b;
  b.balanced_lambda.resize(m);
  for (int j = 0; j < m; ++j) {
    b.balanced_lambda[j] = lambda[0] * std::sqrt(f[0] / f[j]);
    if (j > 0) b.residual.push_back(lambda[j] * lambda[j] * f[j] / (lambda[0] * lambda[0] * f[0]) - 1.0);
  }
  return b;
}

double integral_Keu(const KFunction& k, const ScalarField& u) {
  const auto& kv = k.grid_values();
  const Surface& s = k.surface();
  double r = 0.0;
  for (std::size_t i = 0; i < kv.size(); ++i) r += s.weight(i) * kv[i] * std::exp(u.values[i]);
  return r;
}

double tau(const KFunction& k, double keu, const BubbleParams& p, int i) {
  if (!(keu > 0.0)) throw std::domain_error("tau: int K e^u must be positive");
  const double al = p.alpha_at(i);
  const double f = interaction_at_center(k, p.points, i);
  const double g = weight_fn(k.surface(), p.points, p.alpha_or_ones(), i, p.points[i]);
  return 1.0 - p.m() * kPi / (2.0 * al - 1.0) * std::pow(p.lambda[i], 4.0 * al - 2.0) * f * g / keu;
}

double tau(const KFunction& k, const ScalarField& u, const BubbleParams& p, int i) {
  return tau(k, integral_Keu(k, u), p, i);
}

double tau_prime(const KFunction& k, const BubbleParams& p, int i) {
  double sum = 0.0, mine = 0.0;
  for (int j = 0; j < p.m(); ++j) {
    const double t = std::pow(p.lambda[j], 4.0 * p.alpha_at(j) - 2.0) * interaction_at_center(k, p.points, j);
    sum += t;
    if (j == i) mine = t;
  }
  return 1.0 - p.m() * mine / sum;
}

KeuExpansion integral_Keu(const KFunction& k, const BubbleParams& p, const ScalarField& u) {
  const Surface& s = k.surface();
  KeuExpansion e;
  e.quadrature = integral_Keu(k, u);
  const auto alpha = p.alpha_or_ones();
  double inv_sum = 0.0, weighted = 0.0;
  for (int i = 0; i < p.m(); ++i) {
    const double l = p.lambda[i], al = alpha[i];
    const double f = interaction_at_center(k, p.points, i);
    const double g = weight_fn(s, p.points, alpha, i, p.points[i]);
    const double lp = std::pow(l, 4.0 * al - 2.0);
    e.order1 += kPi * lp / (2.0 * al - 1.0) * f * g;
    const double lap = interaction_laplacian(k, p.points, i);
    e.log_term += 0.5 * kPi * (lap - 2.0 * s.gauss_curvature(p.points[i]) * f) * std::log(l);
    inv_sum += std::log(l) / (l * l);
    weighted += lp * f;
  }
  e.shift_term = 4.0 * kPi * kPi * inv_sum * weighted;
  e.order2 = e.order1 + e.log_term + e.shift_term;
  return e;
}

KeuExpansion integral_Keu(const KFunction& k, const BubbleParams& p) {
  return integral_Keu(k, p, approximate_solution(k.surface(), p));
}

std::vector<ScalarField> constraint_directions(const Surface& s, const BubbleParams& p, bool values) {
  std::vector<ScalarField> out;
  for (int i = 0; i < p.m(); ++i) {
    BubbleBasis b = bubble_basis(s, p.points[i], p.lambda[i], values);
    out.push_back(std::move(b.phi));
    out.push_back(std::move(b.lambda_d));
    out.push_back(std::move(b.a_d[0]));
    out.push_back(std::move(b.a_d[1]));
  }
  return out;
}

std::vector<double> orthogonality_residuals(const Surface& s, const ScalarField& w,
                                            const std::vector<ScalarField>& dirs) {
  std::vector<double> r;
  for (const auto& f : dirs) {
    const double nf = std::sqrt(dinner(s, f.coeffs, f.coeffs));
    r.push_back(std::abs(dinner(s, w.coeffs, f.coeffs)) / nf);
  }
  return r;
}

namespace {

// Orthogonal projection onto the complement of span(dirs) in <.,.>_g.
class ConstraintProjector {
 public:
  ConstraintProjector(const Surface& s, const std::vector<ScalarField>& dirs) : s_(s), dirs_(dirs) {
    const int n = int(dirs.size());
    Eigen::MatrixXd g(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) g(a, b) = g(b, a) = dinner(s, dirs[a].coeffs, dirs[b].coeffs);
    gram_.compute(g);
    if (gram_.info() != Eigen::Success) throw std::runtime_error("constraint Gram matrix is singular");
  }
  void apply(Coeffs& v) const {
    const int n = int(dirs_.size());
    Eigen::VectorXd b(n);
    for (int a = 0; a < n; ++a) b[a] = dinner(s_, dirs_[a].coeffs, v);
    const Eigen::VectorXd c = gram_.solve(b);
    for (int a = 0; a < n; ++a) axpy(-c[a], dirs_[a].coeffs, v);
  }

 private:
  const Surface& s_;
  const std::vector<ScalarField>& dirs_;
  Eigen::LDLT<Eigen::MatrixXd> gram_;
};

}  // namespace

WBarResult minimize_w_bar(const KFunction& k, double rho, const BubbleParams& p, const WBarConfig& cfg) {
  const Surface& s = k.surface();
  if (rho <= 0.0) rho = 8.0 * kPi * p.m();
  const ScalarField u = approximate_solution(s, p);
  const auto dirs = constraint_directions(s, p, false);
  const ConstraintProjector proj(s, dirs);

  WBarResult res;
  Coeffs w(s.coeff_size(), 0.0);
  auto field_at = [&](const Coeffs& wc) {
    Coeffs c = u.coeffs;
    axpy(1.0, wc, c);
    return s.from_coeffs(std::move(c));
  };
  res.energy_before = energy(k, rho, u);
  double j_cur = res.energy_before;
  for (int it = 0;; ++it) {
    const ScalarField v = field_at(w);
    const EnergyAt e(k, rho, v);
    j_cur = e.value();
    Coeffs g = e.gradient();
    proj.apply(g);
    const double gn = std::sqrt(dinner(s, g, g));
    res.projected_grad = gn;
    if (gn < cfg.tol) {
      res.converged = true;
      break;
    }
    if (it >= cfg.max_newton) {
      res.message = "Newton did not converge";
      break;
    }
    // Conjugate gradients on the projected second variation, in <.,.>_g.
    Coeffs d(w.size(), 0.0), r = g, dir;
    for (double& x : r) x = -x;
    dir = r;
    double rr = dinner(s, r, r);
    for (int c = 0; c < cfg.max_cg; ++c) {
      Coeffs hd = e.hessian_apply(dir);
      proj.apply(hd);
      const double curv = dinner(s, dir, hd);
      if (curv <= 0.0) {
        res.indefinite = true;
        if (c == 0) d = r;
        break;
      }
      const double step = rr / curv;
      axpy(step, dir, d);
      axpy(-step, hd, r);
      const double rr_new = dinner(s, r, r);
      if (std::sqrt(rr_new) < cfg.cg_tol * gn) break;
      for (std::size_t q = 0; q < dir.size(); ++q) dir[q] = r[q] + rr_new / rr * dir[q];
      rr = rr_new;
    }
    proj.apply(d);
    const double slope = dinner(s, g, d);
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      Coeffs trial = w;
      axpy(t, d, trial);
      const double jt = energy(k, rho, field_at(trial));
      // Slack at the rounding level of J so that converged Newton steps pass.
      if (jt <= j_cur + 1e-4 * t * slope + 1e-13 * (1.0 + std::abs(j_cur))) {
        w = std::move(trial);
        accepted = true;
        break;
      }
    }
    ++res.newton_steps;
    if (!accepted) {
      // At the floating-point floor of J the gradient is as small as it gets.
      res.message = "line search stalled at projected gradient " + std::to_string(gn);
      break;
    }
    proj.apply(w);
  }
  res.w = s.from_coeffs(w);
  res.norm = s.dirichlet_norm(res.w);
  res.energy_after = energy(k, rho, field_at(w));
  res.orthogonality = orthogonality_residuals(s, res.w, dirs);
  if (res.indefinite && res.message.empty()) res.message = "negative curvature on the constraint space";
  return res;
}

namespace {

struct Fit {
  BubbleParams p;
  Coeffs residual;
  double objective = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool capped = false;
};

// Greedy peak picking with deflation, then Levenberg-Marquardt over
// (alpha_i, ln lambda_i, chart shift of a_i) in the Dirichlet norm.
Fit fit_bubbles(const Surface& s, const ScalarField& u, int m, const ProjectConfig& cfg) {
  const double lmax = max_resolvable_lambda(s);
  const double sep = 2.0 * s.eta();
  Fit fit;
  fit.p.points.clear();
  std::vector<double> r = u.values;
  for (int i = 0; i < m; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t q = 0; q < r.size(); ++q) {
      if (r[q] <= best) continue;
      const Point x = s.node(q);
      bool ok = true;
      for (const auto& a : fit.p.points) ok = ok && s.distance(a, x) >= sep;
      if (ok) {
        best = r[q];
        arg = q;
      }
    }
    if (!std::isfinite(best)) throw std::runtime_error("project_to_V: peaks closer than 2 eta");
    const Point a = s.node(arg);
    // phi_{a,lambda}(a) ~ 4 ln lambda + 8 pi H(a,a) + sum_j 8 pi G(a, a_j).
    double lift = u.values[arg] - 8.0 * kPi * s.robin();
    for (const auto& b : fit.p.points) lift -= 8.0 * kPi * s.green(a, b);
    const double lam = std::clamp(std::exp(lift / 4.0), 1.0, lmax);
    fit.p.points.push_back(a);
    fit.p.lambda.push_back(lam);
    const ScalarField ph = projected_bubble(s, a, lam);
    for (std::size_t q = 0; q < r.size(); ++q) r[q] -= ph.values[q];
  }
  fit.p.alpha.assign(m, 1.0);

  auto evaluate = [&](const BubbleParams& p, std::vector<BubbleBasis>& basis, Coeffs& res) {
    basis.clear();
    res = u.coeffs;
    for (int i = 0; i < m; ++i) {
      basis.push_back(bubble_basis(s, p.points[i], p.lambda[i], false));
      axpy(-p.alpha[i], basis.back().phi.coeffs, res);
    }
    return 0.5 * dinner(s, res, res);
  };
  std::vector<BubbleBasis> basis;
  Coeffs res;
  double obj = evaluate(fit.p, basis, res);
  double nu = 1e-3;
  const int n = 4 * m;
  for (int it = 0; it < cfg.max_iter; ++it) {
    fit.iterations = it + 1;
    std::vector<Coeffs> cols;
    for (int i = 0; i < m; ++i) {
      const double al = fit.p.alpha[i];
      cols.push_back(basis[i].phi.coeffs);
      Coeffs c = basis[i].lambda_d.coeffs;
      for (double& x : c) x *= al;
      cols.push_back(std::move(c));
      for (int d = 0; d < 2; ++d) {
        Coeffs e = basis[i].a_d[d].coeffs;
        for (double& x : e) x *= al;
        cols.push_back(std::move(e));
      }
    }
    Eigen::MatrixXd jtj(n, n);
    Eigen::VectorXd jtr(n);
    for (int a = 0; a < n; ++a) {
      jtr[a] = dinner(s, cols[a], res);
      for (int b = a; b < n; ++b) jtj(a, b) = jtj(b, a) = dinner(s, cols[a], cols[b]);
    }
    bool stepped = false;
    double step_size = 0.0;
    for (int tries = 0; tries < 30 && !stepped; ++tries) {
      Eigen::MatrixXd lhs = jtj;
      for (int a = 0; a < n; ++a) lhs(a, a) *= 1.0 + nu;
      const Eigen::VectorXd delta = lhs.ldlt().solve(jtr);
      BubbleParams trial = fit.p;
      bool capped = false;
      for (int i = 0; i < m; ++i) {
        trial.alpha[i] += delta[4 * i];
        double ll = std::log(trial.lambda[i]) + std::clamp(double(delta[4 * i + 1]), -0.5, 0.5);
        if (ll > std::log(lmax)) {
          ll = std::log(lmax);
          capped = true;
        }
        trial.lambda[i] = std::exp(std::max(ll, 0.0));
        Vec2 dy{delta[4 * i + 2], delta[4 * i + 3]};
        const double len = std::hypot(dy[0], dy[1]);
        if (len > s.eta()) dy = {dy[0] * s.eta() / len, dy[1] * s.eta() / len};
        trial.points[i] = s.chart_inverse(trial.points[i], dy);
      }
      std::vector<BubbleBasis> tb;
      Coeffs tr;
      const double tobj = evaluate(trial, tb, tr);
      if (tobj < obj) {
        fit.p = std::move(trial);
        basis = std::move(tb);
        res = std::move(tr);
        step_size = delta.cwiseAbs().maxCoeff();
        fit.capped = capped;
        obj = tobj;
        nu = std::max(nu / 3.0, 1e-12);
        stepped = true;
      } else {
        nu *= 4.0;
      }
    }
    if (!stepped || step_size < cfg.tol_step) {
      fit.converged = true;
      break;
    }
  }
  fit.objective = obj;
  fit.residual = std::move(res);
  return fit;
}

}  // namespace

Decomposition project_to_V(const Surface& s, const ScalarField& u, int m, const ProjectConfig& cfg,
                           const KFunction* k, double rho) {
  if (std::abs(u.mean()) > 1e-8) throw std::invalid_argument("project_to_V: field must have zero mean");
  if (m < 0) throw std::invalid_argument("project_to_V: m must be >= 0");
  std::vector<int> orders;
  if (m > 0) {
    orders.push_back(m);
  } else {
    for (int q = 1; q <= cfg.max_m; ++q) orders.push_back(q);
  }
  std::optional<Fit> chosen;
  int chosen_m = 0;
  std::string last_error;
  for (int q : orders) {
    Fit f;
    try {
      f = fit_bubbles(s, u, q, cfg);
    } catch (const std::runtime_error& e) {
      last_error = e.what();
      continue;
    }
    const double wn = std::sqrt(2.0 * f.objective);
    if (!chosen || wn < std::sqrt(2.0 * chosen->objective)) {
      chosen = std::move(f);
      chosen_m = q;
    }
    if (m == 0 && wn < cfg.eps) break;
  }
  if (!chosen) throw std::runtime_error(last_error.empty() ? "project_to_V: no fit" : last_error);

  Decomposition d;
  d.m = chosen_m;
  d.params = chosen->p;
  d.iterations = chosen->iterations;
  d.converged = chosen->converged;
  d.w = s.from_coeffs(chosen->residual);
  d.w_norm = s.dirichlet_norm(d.w);
  d.orthogonality = orthogonality_residuals(s, d.w, constraint_directions(s, d.params, false));

  const auto& p = d.params;
  if (!(d.w_norm < cfg.eps)) d.reasons.push_back("||w|| >= eps");
  for (int i = 0; i < p.m(); ++i) {
    if (!(p.lambda[i] > 1.0 / cfg.eps)) d.reasons.push_back("lambda_" + std::to_string(i + 1) + " <= 1/eps");
    for (int j = 0; j < p.m(); ++j) {
      if (i == j) continue;
      if (!(p.lambda[i] < cfg.c1 * p.lambda[j])) d.reasons.push_back("rates not comparable");
      if (j > i && s.distance(p.points[i], p.points[j]) < 2.0 * s.eta())
        d.reasons.push_back("points closer than 2 eta");
    }
  }
  if (chosen->capped) d.reasons.push_back("rate reached the resolution cap");
  std::sort(d.reasons.begin(), d.reasons.end());
  d.reasons.erase(std::unique(d.reasons.begin(), d.reasons.end()), d.reasons.end());
  d.in_V = d.reasons.empty();
  if (k) {
    const double r = rho > 0.0 ? rho : 8.0 * kPi * d.m;
    d.grad_norm = s.dirichlet_norm(energy_grad(*k, r, u));
  }
  return d;
}

}  // namespace barymorse
