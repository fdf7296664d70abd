#include "barymorse/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "barymorse/mf_solver.hpp"
#include "barymorse/parallel.hpp"
#include "barymorse/reduced_energy.hpp"

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

double sum_log_over_sq(const std::vector<double>& lambda) {
  double r = 0.0;
  for (double l : lambda) r += std::log(l) / (l * l);
  return r;
}

enum class Dep { none, alpha, alpha_mu };

struct CheckInfo {
  const char* id;
  Dep dep;
  bool needs_pair;  // m >= 2
};

const CheckInfo kChecks[] = {
    {"bubble_mass", Dep::none, false},
    {"far_field", Dep::none, false},
    {"near_field", Dep::none, false},
    {"rate_derivative_far", Dep::none, false},
    {"dirichlet_norm", Dep::none, false},
    {"norm_rate_pairing", Dep::none, false},
    {"cross_pairing", Dep::none, true},
    {"cross_rate_pairing", Dep::none, true},
    {"keu_pointwise", Dep::alpha, false},
    {"keu_integral", Dep::alpha, false},
    {"approx_residual", Dep::none, false},
    {"rate_gradient", Dep::alpha_mu, false},
    {"weight_gradient", Dep::alpha_mu, false},
    {"weight_gradient_combined", Dep::alpha_mu, false},
    {"tau_sum", Dep::alpha, false},
    {"position_gradient", Dep::alpha_mu, false},
    {"position_gradient_normalized", Dep::alpha_mu, false},
    {"energy_expansion", Dep::alpha, false},
};

const CheckInfo& info(const std::string& id) {
  for (const auto& c : kChecks)
    if (id == c.id) return c;
  throw std::invalid_argument("unknown expansion check '" + id + "'");
}

// Declared envelope (order p, log power q) for a cell, read off the error
// terms of each expansion: terms scaling with |alpha - 1| or |mu| do not
// decay in lambda, so such cells only require boundedness.
std::pair<double, double> declared(const std::string& id, double alpha, double mu, bool critical) {
  const bool a1 = alpha == 1.0, m0 = mu == 0.0;
  if (id == "keu_pointwise") return {2.0, a1 ? 0.0 : 1.0};
  if (id == "keu_integral") return {2.0, a1 ? 0.0 : 2.0};
  if (id == "approx_residual") return critical ? std::pair{2.0, 1.0} : std::pair{1.0, 0.0};
  if (id == "rate_gradient") return a1 ? std::pair{2.0, 1.0} : std::pair{0.0, 0.0};
  if (id == "weight_gradient") return a1 && m0 ? std::pair{2.0, 2.0} : std::pair{0.0, 0.0};
  if (id == "weight_gradient_combined") return a1 && m0 ? std::pair{2.0, 1.0} : std::pair{0.0, 0.0};
  if (id == "tau_sum") return a1 ? std::pair{2.0, 1.0} : std::pair{0.0, 0.0};
  if (id == "position_gradient" || id == "position_gradient_normalized") {
    if (!a1) return {0.0, 0.0};
    return m0 ? std::pair{2.0, 1.0} : std::pair{1.0, 0.0};
  }
  if (id == "energy_expansion") return a1 ? std::pair{2.0, 0.0} : std::pair{0.0, 0.0};
  return {2.0, 0.0};
}

// Everything the checks need at one (alpha, lambda_1).
struct State {
  BubbleParams p;
  ScalarField u;
  std::vector<BubbleBasis> basis;
  double keu = 0.0;
  std::vector<double> kexp;  // K e^u on the grid
};

State make_state(const KFunction& k, const ExpansionParams& ep, double lambda, double alpha, double rho_wbar) {
  const Surface& s = k.surface();
  State st;
  st.p.points = ep.points;
  const int m = int(ep.points.size());
  std::vector<double> lam(m, lambda);
  if (ep.balanced && m >= 2) lam = balancing_residual(k, ep.points, lam).balanced_lambda;
  st.p.lambda = lam;
  st.p.alpha.assign(m, alpha);
  std::vector<double> c(s.coeff_size(), 0.0);
  for (int i = 0; i < m; ++i) {
    st.basis.push_back(bubble_basis(s, ep.points[i], lam[i], true));
    const auto& ph = st.basis.back().phi.coeffs;
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += alpha * ph[j];
  }
  if (ep.with_wbar) {
    const WBarResult wb = minimize_w_bar(k, rho_wbar, st.p);
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += wb.w.coeffs[j];
  }
  st.u = s.from_coeffs(std::move(c));
  const auto& kv = k.grid_values();
  st.kexp.resize(kv.size());
  for (std::size_t i = 0; i < kv.size(); ++i) {
    st.kexp[i] = kv[i] * std::exp(st.u.values[i]);
    st.keu += s.weight(i) * st.kexp[i];
  }
  return st;
}

// <grad J_rho(u), h>_g = <u, h>_g - rho int K e^u h / int K e^u.
double grad_pairing(const Surface& s, const State& st, double rho, const ScalarField& h) {
  double t = 0.0;
  for (std::size_t i = 0; i < st.kexp.size(); ++i) t += s.weight(i) * st.kexp[i] * h.values[i];
  return dinner(s, st.u.coeffs, h.coeffs) - rho * t / st.keu;
}

// Chart gradient of F_i^A at a_i, fourth-order central differences.
Vec2 interaction_gradient(const KFunction& k, const Configuration& a, int i) {
  const Surface& s = k.surface();
  const double h = s.eta() / 16.0;
  Vec2 g{};
  for (int d = 0; d < 2; ++d) {
    auto f = [&](double t) {
      Vec2 y{};
      y[d] = t;
      return interaction_fn(k, a, i, s.chart_inverse(a[i], y));
    };
    g[d] = (8.0 * (f(h) - f(-h)) - (f(2 * h) - f(-2 * h))) / (12.0 * h);
  }
  return g;
}

bool is_critical(const KFunction& k, const Configuration& a) {
  return reduced_energy_grad(k, a).norm() < 1e-6;
}

struct Row {
  double lhs, rhs, res;
};

class Evaluator {
 public:
  Evaluator(const KFunction& k, const ExpansionParams& ep, const std::string& id)
      : k_(k), s_(k.surface()), ep_(ep), id_(id), i_(ep.bubble) {
    const int m = int(ep.points.size());
    if (i_ < 0 || i_ >= m) throw std::invalid_argument("expansion check: bubble index out of range");
    if (info(id).needs_pair && m < 2) throw std::invalid_argument(id + ": needs at least two points");
    if (id == "far_field" || id == "near_field" || id == "rate_derivative_far") green_ = s_.green_field(ep.points[i_]);
    if (id == "keu_pointwise") prepare_pointwise();
    if (id == "approx_residual") modes_ = s_.eigenmodes(20);
  }

  // One row per mu for the state at (alpha, lambda).
  std::vector<Row> rows(const State& st, const std::vector<double>& mus) const {
    std::vector<Row> out;
    for (double mu : mus) out.push_back(row(st, mu));
    return out;
  }

 private:
  Row row(const State& st, double mu) const {
    const int m = st.p.m();
    const double l = st.p.lambda[i_], ll = std::log(l);
    const double al = st.p.alpha_at(i_);
    const BubbleBasis& b = st.basis[i_];
    const Point& a = st.p.points[i_];
    const double rho = 8.0 * kPi * m * (1.0 + mu);
    const auto& lam = st.p.lambda;

    if (id_ == "bubble_mass") return {b.mass, 8.0 * kPi, std::abs(b.mass - 8.0 * kPi)};

    if (id_ == "far_field" || id_ == "rate_derivative_far" || id_ == "near_field") {
      const ScalarField& f = id_ == "rate_derivative_far" ? b.lambda_d : b.phi;
      double worst = 0.0, lhs = 0.0, rhs = 0.0;
      for (std::size_t n = 0; n < s_.grid_size(); ++n) {
        const Point x = s_.node(n);
        double target;
        if (id_ == "far_field") {
          if (s_.distance(a, x) < s_.eta()) continue;
          target = 8.0 * kPi * green_.values[n] + 4.0 * kPi * ll / (l * l);
        } else if (id_ == "rate_derivative_far") {
          if (s_.distance(a, x) < s_.eta()) continue;
          target = -8.0 * kPi * ll / (l * l);
        } else {
          // delta + ln(l^2/8) + 8 pi H with H = G + ln(psi) / (2 pi).
          const double psi = s_.cutoff(a, x);
          const double q = 1.0 + l * l * psi * psi;
          target = std::log(l * l * l * l / (q * q)) + 8.0 * kPi * green_.values[n] + 4.0 * std::log(psi) +
                   4.0 * kPi * ll / (l * l);
        }
        const double r = std::abs(f.values[n] - target);
        if (r > worst) {
          worst = r;
          lhs = f.values[n];
          rhs = target;
        }
      }
      return {lhs, rhs, worst};
    }

    if (id_ == "dirichlet_norm") {
      const double lhs = dinner(s_, b.phi.coeffs, b.phi.coeffs);
      const double rhs = 32.0 * kPi * ll + 64.0 * kPi * kPi * s_.green_regular_diagonal(a) - 16.0 * kPi +
                         64.0 * kPi * kPi * ll / (l * l);
      return {lhs, rhs, std::abs(lhs - rhs)};
    }
    if (id_ == "norm_rate_pairing") {
      const double lhs = dinner(s_, b.phi.coeffs, b.lambda_d.coeffs);
      const double rhs = 16.0 * kPi - 64.0 * kPi * kPi * ll / (l * l);
      return {lhs, rhs, std::abs(lhs - rhs)};
    }
    if (id_ == "cross_pairing" || id_ == "cross_rate_pairing") {
      const int j = i_ == 0 ? 1 : 0;
      const double lj = lam[j];
      if (id_ == "cross_pairing") {
        const double lhs = dinner(s_, st.basis[j].phi.coeffs, b.phi.coeffs);
        const double rhs = 64.0 * kPi * kPi * s_.green(st.p.points[j], a) +
                           32.0 * kPi * kPi * std::log(lj) / (lj * lj) + 32.0 * kPi * kPi * ll / (l * l);
        return {lhs, rhs, std::abs(lhs - rhs)};
      }
      const double lhs = dinner(s_, st.basis[j].phi.coeffs, b.lambda_d.coeffs);
      const double rhs = -64.0 * kPi * kPi * ll / (l * l);
      return {lhs, rhs, std::abs(lhs - rhs)};
    }

    if (id_ == "keu_pointwise") {
      const double corr = 1.0 + 4.0 * kPi * sum_log_over_sq(lam);
      double worst = 0.0, lhs = 0.0, rhs = 0.0;
      for (std::size_t t = 0; t < sample_.size(); ++t) {
        const std::size_t n = sample_[t];
        // F_i g_i = K exp(8 pi alpha_i H(a_i, x) + 8 pi sum_{j != i} alpha_j G(a_j, x)).
        double e = 8.0 * kPi * st.p.alpha_at(i_) * sample_h_[t];
        for (int j = 0, c = 0; j < m; ++j)
          if (j != i_) e += 8.0 * kPi * st.p.alpha_at(j) * sample_g_[t][c++];
        const double y = sample_rho_[t];
        const double target = std::pow(l, 4.0 * al) * k_.grid_values()[n] * std::exp(e) /
                              std::pow(1.0 + l * l * y * y, 2.0 * al) * corr;
        const double r = std::abs(st.kexp[n] / target - 1.0);
        if (r > worst) {
          worst = r;
          lhs = st.kexp[n];
          rhs = target;
        }
      }
      return {lhs, rhs, worst};
    }

    if (id_ == "keu_integral") {
      const KeuExpansion e = integral_Keu(k_, st.p, st.u);
      return {e.quadrature, e.order2, std::abs(e.quadrature - e.order2) / e.order1};
    }

    if (id_ == "approx_residual") {
      // <f, e_k> = mu_k <U, e_k>_{L2} - 8 pi m int (K e^U / I) e_k.
      double worst = 0.0;
      for (const auto& md : modes_) {
        double pu = 0.0, pk = 0.0;
        for (std::size_t n = 0; n < s_.grid_size(); ++n) {
          const double e = s_.mode_value(md, s_.node(n)) * s_.weight(n);
          pu += st.u.values[n] * e;
          pk += st.kexp[n] * e;
        }
        worst = std::max(worst, std::abs(md.mu * pu - 8.0 * kPi * m * pk / st.keu));
      }
      return {worst, 0.0, worst};
    }

    if (id_ == "rate_gradient") {
      const double lhs = grad_pairing(s_, st, rho, b.lambda_d);
      const double t = tau(k_, st.keu, st.p, i_);
      const double rhs = 16.0 * kPi * al * (t - mu + mu * t) - 64.0 * kPi * kPi * sum_log_over_sq(lam);
      return {lhs, rhs, std::abs(lhs - rhs)};
    }
    if (id_ == "weight_gradient") {
      const double lhs = grad_pairing(s_, st, rho, b.phi);
      const double t = tau(k_, st.keu, st.p, i_);
      const double rhs = 32.0 * kPi * ll * ((al - 1.0) + (t - mu + mu * t));
      return {lhs, rhs, std::abs(lhs - rhs)};
    }
    if (id_ == "weight_gradient_combined") {
      const double lhs =
          grad_pairing(s_, st, rho, b.phi) / ll - (2.0 / al) * grad_pairing(s_, st, rho, b.lambda_d);
      const double rhs = 32.0 * kPi * (al - 1.0);
      return {lhs, rhs, std::abs(lhs - rhs)};
    }
    if (id_ == "tau_sum") {
      double lhs = 0.0;
      for (int j = 0; j < m; ++j) lhs += tau(k_, st.keu, st.p, j);
      const double rhs = 0.5 * kPi * m * std::log(lam[0]) / st.keu * stability_quantity(k_, st.p.points) +
                         4.0 * kPi * m * sum_log_over_sq(lam);
      return {lhs, rhs, std::abs(lhs - rhs)};
    }
    if (id_ == "position_gradient" || id_ == "position_gradient_normalized") {
      Vec2 gf = interaction_gradient(k_, st.p.points, i_);
      if (id_ == "position_gradient_normalized") {
        const double f = interaction_at_center(k_, st.p.points, i_);
        gf = {gf[0] / f, gf[1] / f};
      }
      double r2 = 0.0, lhs_n = 0.0, rhs_n = 0.0;
      for (int d = 0; d < 2; ++d) {
        const double lhs = grad_pairing(s_, st, rho, b.a_d[d]) / l;
        const double rhs = -8.0 * kPi * (1.0 + mu) * gf[d] / l;
        r2 += (lhs - rhs) * (lhs - rhs);
        lhs_n += lhs * lhs;
        rhs_n += rhs * rhs;
      }
      return {std::sqrt(lhs_n), std::sqrt(rhs_n), std::sqrt(r2)};
    }
    if (id_ == "energy_expansion") {
      const double rho0 = 8.0 * kPi * m;
      const double lhs = 0.5 * dinner(s_, st.u.coeffs, st.u.coeffs) - rho0 * std::log(st.keu);
      double tp2 = 0.0, lsum = 0.0;
      for (int j = 0; j < m; ++j) {
        const double t = tau_prime(k_, st.p, j);
        tp2 += t * t;
        const double aj = st.p.alpha_at(j);
        lsum += (aj - 1.0) * (aj - 1.0) * std::log(lam[j]);
      }
      const double f1 = interaction_at_center(k_, st.p.points, 0);
      const double rhs = -8.0 * kPi * m * (1.0 + std::log(m * kPi)) -
                         8.0 * kPi * reduced_energy_value(k_, st.p.points) - 4.0 * kPi * tp2 + 16.0 * kPi * lsum -
                         4.0 * kPi * std::log(lam[0]) / (lam[0] * lam[0] * f1) * stability_quantity(k_, st.p.points);
      return {lhs, rhs, std::abs(lhs - rhs)};
    }
    throw std::logic_error("unhandled expansion check " + id_);
  }

  void prepare_pointwise() {
    const Point a = ep_.points[i_];
    std::vector<std::size_t> inside;
    for (std::size_t n = 0; n < s_.grid_size(); ++n)
      if (s_.chart_radius(a, s_.node(n)) < s_.eta()) inside.push_back(n);
    const std::size_t stride = std::max<std::size_t>(1, inside.size() / 4000);
    for (std::size_t t = 0; t < inside.size(); t += stride) {
      const std::size_t n = inside[t];
      const Point x = s_.node(n);
      const double rho = s_.chart_radius(a, x);
      if (rho == 0.0) continue;
      sample_.push_back(n);
      sample_rho_.push_back(rho);
      sample_h_.push_back(s_.green(a, x) + std::log(s_.cutoff(a, x)) / (2.0 * kPi));
      std::vector<double> g;
      for (std::size_t j = 0; j < ep_.points.size(); ++j)
        if (int(j) != i_) g.push_back(s_.green(ep_.points[j], x));
      sample_g_.push_back(std::move(g));
    }
  }

  const KFunction& k_;
  const Surface& s_;
  const ExpansionParams& ep_;
  std::string id_;
  int i_;
  ScalarField green_;
  std::vector<EigenMode> modes_;
  std::vector<std::size_t> sample_;
  std::vector<double> sample_rho_, sample_h_;
  std::vector<std::vector<double>> sample_g_;
};

}  // namespace

std::vector<std::string> expansion_check_ids() {
  std::vector<std::string> out;
  for (const auto& c : kChecks) out.emplace_back(c.id);
  return out;
}

EnvelopeFit fit_envelope(const std::vector<double>& lambdas, const std::vector<double>& residuals, double q) {
  if (lambdas.size() != residuals.size() || lambdas.size() < 2)
    throw std::invalid_argument("fit_envelope: needs at least two matching samples");
  EnvelopeFit f;
  f.monotone = true;
  for (std::size_t i = 1; i < residuals.size(); ++i)
    if (residuals[i] > 2.0 * residuals[i - 1]) f.monotone = false;
  if (std::all_of(residuals.begin(), residuals.end(), [](double r) { return r == 0.0; })) {
    f.order = std::numeric_limits<double>::infinity();
    return f;
  }
  const std::size_t n = lambdas.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(lambdas[i]);
    const double y = std::log(std::max(residuals[i], 1e-300)) - q * std::log(std::log(lambdas[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  f.order = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
  return f;
}

ExpansionCheck verify_expansion(const KFunction& k, const std::string& id, const ExpansionParams& params) {
  const CheckInfo& ci = info(id);
  if (params.points.empty()) throw std::invalid_argument("verify_expansion: empty configuration");
  if (params.lambdas.size() < 2) throw std::invalid_argument("verify_expansion: needs at least two rates");
  const std::vector<double> alphas = ci.dep == Dep::none ? std::vector<double>{1.0} : params.alphas;
  const std::vector<double> mus = ci.dep == Dep::alpha_mu ? params.mus : std::vector<double>{0.0};
  if (alphas.empty() || mus.empty()) throw std::invalid_argument("verify_expansion: empty alpha or mu list");

  Evaluator ev(k, params, id);
  const std::size_t na = alphas.size(), nl = params.lambdas.size();
  std::vector<std::vector<Row>> results(na * nl);
  const int m = int(params.points.size());
  parallel_for(na * nl, [&](std::size_t t) {
    const std::size_t ia = t / nl, il = t % nl;
    // w_bar, when requested, is taken at the unperturbed parameter rho = 8 pi m.
    const State st = make_state(k, params, params.lambdas[il], alphas[ia], 8.0 * kPi * m);
    results[t] = ev.rows(st, mus);
  });

  const bool critical = id == "approx_residual" ? is_critical(k, params.points) : false;
  ExpansionCheck out;
  out.id = id;
  out.pass = true;
  for (std::size_t ia = 0; ia < na; ++ia) {
    for (std::size_t im = 0; im < mus.size(); ++im) {
      ExpansionCell c;
      c.alpha = alphas[ia];
      c.mu = mus[im];
      std::tie(c.declared_order, c.log_power) = declared(id, c.alpha, c.mu, critical);
      std::vector<double> res, lhs;
      for (std::size_t il = 0; il < nl; ++il) {
        const Row& r = results[ia * nl + il][im];
        c.rows.push_back({params.lambdas[il], r.lhs, r.rhs, r.res});
        res.push_back(r.res);
        lhs.push_back(std::abs(r.lhs));
      }
      const EnvelopeFit f = fit_envelope(params.lambdas, res, c.log_power);
      c.fitted_order = f.order;
      c.monotone = f.monotone;
      c.lhs_order = fit_envelope(params.lambdas, lhs, 0.0).order;
      c.pass = c.fitted_order >= c.declared_order - 0.3 && c.monotone;
      out.pass = out.pass && c.pass;
      out.cells.push_back(std::move(c));
    }
  }
  if (id == "rate_gradient" || id == "tau_sum")
    out.notes.push_back("o(ln l / l^2) remainder tested as the weaker O(ln l / l^2) envelope");
  if (id == "position_gradient_normalized")
    out.notes.push_back("leading term with grad ln F_i(a_i) in place of grad F_i(a_i)");
  if (id == "approx_residual" && !critical)
    out.notes.push_back("configuration is not critical; first-order decay declared");
  if (params.balanced && m >= 2) out.notes.push_back("rates balanced from lambda_1");
  if (params.with_wbar) out.notes.push_back("u = U + w_bar");
  return out;
}

EnergyCorrection energy_correction(const KFunction& k, const Configuration& a, double lambda1) {
  ExpansionParams ep;
  ep.points = a;
  const int m = int(a.size());
  const State st = make_state(k, ep, lambda1, 1.0, 8.0 * kPi * m);
  const Surface& s = k.surface();
  const double j = 0.5 * dinner(s, st.u.coeffs, st.u.coeffs) - 8.0 * kPi * m * std::log(st.keu);
  EnergyCorrection e;
  e.lambda1 = lambda1;
  e.measured = j + 8.0 * kPi * m * (1.0 + std::log(m * kPi)) + 8.0 * kPi * reduced_energy_value(k, a);
  e.stability = stability_quantity(k, a);
  const double f1 = interaction_at_center(k, a, 0);
  e.predicted = -4.0 * kPi * std::log(lambda1) / (lambda1 * lambda1 * f1) * e.stability;
  e.sign_matches = (e.measured > 0) == (e.predicted > 0) && e.measured != 0.0;
  e.ratio = e.measured / e.predicted;
  return e;
}

}  // namespace barymorse
