// Acceptance suite: one PASS/FAIL line per criterion, with the measured
// numbers behind each verdict. Exit status is nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "barymorse/bubbles.hpp"
#include "barymorse/critical_search.hpp"
#include "barymorse/mf_solver.hpp"
#include "barymorse/morse_report.hpp"
#include "barymorse/reduced_energy.hpp"
#include "barymorse/topology.hpp"
#include "barymorse/verify.hpp"
#include "oracles.hpp"

using namespace barymorse;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

KPreset trig_k() {
  KPreset p;
  p.name = "trig";
  p.trig = {{1, 0, 0.3, 0.0}, {0, 1, 0.2, 0.0}, {1, 1, 0.0, 0.15}};
  return p;
}

const Point kA{0.3137, 0.4719, 0};
const Point kB{0.8123, 0.9345, 0};

// Far-field torus regime shared by the quadrature checks.
SurfacePtr fine_torus() {
  static SurfacePtr s = build_surface(SurfaceKind::torus, 1024, 0.2);
  return s;
}

Verdict green_machinery() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  auto s = build_surface(SurfaceKind::torus, 256, default_eta(SurfaceKind::torus));
  const ScalarField g = s->green_field(kA);
  auto at = [&](const Point& x) { return s->green(kA, x); };
  double pair = 0.0;
  for (const auto& mode : s->eigenmodes(20)) {
    auto e = [&](const Point& x) { return s->mode_value(mode, x); };
    pair = std::max(pair, std::abs(mode.mu * oracle::singular_pairing(*s, kA, g.values, at, e) - e(kA)));
  }
  const double mean = std::abs(oracle::singular_pairing(*s, kA, g.values, at, [](const Point&) { return 1.0; }));
  double ewald = 0.0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const Point x{u(rng), u(rng), 0};
    ewald = std::max(ewald, std::abs(s->green(kA, x) - s->green_series(kA, x)));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.pass = pair < 1e-8 && mean < 1e-10 && ewald < 1e-8 && secs < 10.0;
  v.detail = "pairing " + fmt("%.2e", pair) + ", |int G| " + fmt("%.2e", mean) + ", Ewald vs series " +
             fmt("%.2e", ewald) + ", " + fmt("%.1f", secs) + " s";
  return v;
}

ExpansionParams two_points() {
  ExpansionParams p;
  p.points = {kA, kB};
  return p;
}

Verdict far_field() {
  const auto t0 = std::chrono::steady_clock::now();
  KFunction k(fine_torus(), {});
  ExpansionParams p;
  p.points = {kA};
  const ExpansionCheck c = verify_expansion(k, "far_field", p);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double order = c.cells.at(0).fitted_order;
  return {order >= 1.7 && secs < 120.0, "fitted exponent " + fmt("%.3f", order) + ", " + fmt("%.1f", secs) + " s"};
}

Verdict pairings() {
  KFunction k(fine_torus(), {});
  Verdict v{true, ""};
  for (const char* id : {"dirichlet_norm", "norm_rate_pairing", "cross_pairing", "cross_rate_pairing"}) {
    const ExpansionCheck c = verify_expansion(k, id, two_points());
    const double order = c.cells.at(0).fitted_order;
    v.pass = v.pass && order >= 1.7;
    v.detail += std::string(v.detail.empty() ? "" : ", ") + id + " " + fmt("%.3f", order);
  }
  return v;
}

Verdict keu_order_one() {
  KFunction k(fine_torus(), {});
  Verdict v{true, ""};
  for (double l : {20.0, 40.0, 80.0}) {
    const KeuExpansion e = integral_Keu(k, {{kA}, {l}, {1.0}});
    const double rel = std::abs(e.quadrature - e.order1) / e.order1, bound = 10.0 * std::log(l) / (l * l);
    v.pass = v.pass && rel <= bound;
    v.detail += "l=" + fmt("%g", l) + " rel " + fmt("%.4f", rel) + " (bound " + fmt("%.4f", bound) + "), ";
    if (l == 40.0) {
      const bool better = std::abs(e.quadrature - e.order2) < std::abs(e.quadrature - e.order1);
      v.pass = v.pass && better;
      v.detail += std::string("order 2 ") + (better ? "reduces" : "does not reduce") + " the residual at 40, ";
    }
  }
  v.detail.resize(v.detail.size() - 2);
  return v;
}

// Lowest nondegenerate index-0 critical configuration of F for m = 2.
const Configuration& critical_pair() {
  static const Configuration a = [] {
    KFunction k(fine_torus(), trig_k());
    SearchConfig cfg;
    cfg.seed = 7;
    cfg.starts = 200;
    cfg.d_min = 0.3;
    const SearchResult r = find_critical_points(k, 2, cfg);
    const ClassifiedCritical* best = nullptr;
    for (const auto& c : r.criticals)
      if (c.nondegenerate && c.morse_index == 0 && (!best || c.value < best->value)) best = &c;
    if (!best) throw std::runtime_error("no nondegenerate minimum of F for m = 2");
    return best->points;
  }();
  return a;
}

Verdict energy_correction_check() {
  KFunction k(fine_torus(), trig_k());
  const EnergyCorrection e = energy_correction(k, critical_pair(), 40.0);
  const bool within = e.ratio >= 1.0 / 3.0 && e.ratio <= 3.0;
  return {e.sign_matches && within, "measured " + fmt("%.4e", e.measured) + ", predicted " +
                                        fmt("%.4e", e.predicted) + ", ratio " + fmt("%.3f", e.ratio) +
                                        ", L(A) " + fmt("%.4f", e.stability)};
}

Verdict gradient_expansions() {
  KFunction k(fine_torus(), trig_k());
  ExpansionParams p;
  p.points = critical_pair();
  p.alphas = {1.0, 1.001};
  p.mus = {0.0, 1e-3, -1e-3};
  Verdict v{true, ""};
  for (const char* id : {"rate_gradient", "weight_gradient", "weight_gradient_combined", "tau_sum", "position_gradient"}) {
    const ExpansionCheck c = verify_expansion(k, id, p);
    int failed = 0;
    double worst = 1e300;
    for (const auto& cell : c.cells) {
      failed += !cell.pass;
      worst = std::min(worst, cell.fitted_order - cell.declared_order);
    }
    v.pass = v.pass && c.pass;
    v.detail += std::string(id) + " " + (c.pass ? "pass" : std::to_string(failed) + "/" +
                                                              std::to_string(c.cells.size()) + " cells fail") +
                " (min fitted - declared " + fmt("%.2f", worst) + "), ";
  }
  // The position pairing decays faster at the critical configuration than off it.
  ExpansionParams crit = p, off = p;
  crit.alphas = off.alphas = {1.0};
  crit.mus = off.mus = {0.0};
  off.points[0].x += 0.05;
  off.points[0].y -= 0.03;
  off.points[1].x -= 0.04;
  off.points[1].y += 0.02;
  const double oc = verify_expansion(k, "position_gradient", crit).cells.at(0).lhs_order;
  const double og = verify_expansion(k, "position_gradient", off).cells.at(0).lhs_order;
  const bool vanishes = oc > og + 0.5;
  v.pass = v.pass && vanishes;
  v.detail += "pairing decay " + fmt("%.3f", oc) + " at A vs " + fmt("%.3f", og) + " off A";
  return v;
}

Configuration random_configuration(const Surface& s, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    Configuration a;
    for (int i = 0; i < m; ++i)
      a.push_back(s.kind() == SurfaceKind::torus ? Point{u(rng), u(rng), 0} : s.normalize({n(rng), n(rng), n(rng)}));
    if (m == 1 || min_pairwise_distance(s, a) > 0.25) return a;
  }
}

Verdict reduced_energy_derivatives() {
  KPreset bumps;
  bumps.name = "gaussian";
  bumps.bumps = {{{0.0, 0.0, 0.28}, 0.4, 0.15}, {{0.2, 0.0, -0.2}, -0.3, 0.2}};
  std::mt19937_64 rng(11);
  double worst_g = 0.0, worst_h = 0.0;
  int count = 0;
  for (auto kind : {SurfaceKind::torus, SurfaceKind::sphere}) {
    auto s = build_surface(kind, 64, default_eta(kind));
    KFunction k(s, kind == SurfaceKind::torus ? trig_k() : bumps);
    for (int t = 0; t < 20; ++t, ++count) {
      const int m = 1 + t % 3;
      const Configuration a = random_configuration(*s, m, rng);
      auto f = [&](const Eigen::VectorXd& step) { return reduced_energy_value(k, displace(*s, a, step)); };
      const Eigen::VectorXd g = reduced_energy_grad(k, a), gf = oracle::fd4_gradient(f, 2 * m, 1e-3);
      const Eigen::MatrixXd h = reduced_energy_hessian(k, a), hf = oracle::fd4_hessian(f, 2 * m, 1e-3);
      worst_g = std::max(worst_g, (g - gf).norm() / gf.norm());
      worst_h = std::max(worst_h, (h - hf).norm() / hf.norm());
    }
  }
  return {worst_g < 1e-6 && worst_h < 1e-6, std::to_string(count) + " configurations, gradient " +
                                                fmt("%.2e", worst_g) + ", Hessian " + fmt("%.2e", worst_h)};
}

Verdict counting() {
  bool ok = true;
  for (int chi = -4; chi <= 2; ++chi) ok = ok && euler_char_barycenter(chi, 1) == chi;
  auto counts = [](int m, std::vector<long long> nu_inf) { return IndexCounts{m, {}, std::move(nu_inf)}; };
  const long long sphere2 = euler_identity(counts(2, {}), 2).rhs, torus3 = euler_identity(counts(3, {}), 0).rhs;
  ok = ok && sphere2 == -1 && torus3 == 1;
  const BettiStore store = BettiStore::bundled();
  bool tables = !store.tables().empty();
  for (const auto& t : store.tables()) tables = tables && betti_valid(t);
  ok = ok && tables;

  const BettiTable& sphere1 = store.get("sphere", 1);
  const BettiTable& torus1 = store.get("torus", 1);
  int examples = 0, reproduced = 0;
  auto expect = [&](bool c) {
    ++examples;
    reproduced += c;
  };
  // check_inequalities
  {
    bool all = true;
    for (const auto& v : check_inequalities(counts(2, {0, 1, 0, 1, 0, 0}), sphere1))
      all = all && v.holds && v.margin == 0;
    expect(all);
    bool k2 = false, k5 = false;
    for (const auto& v : check_inequalities(counts(2, {}), sphere1)) {
      if (v.k == 2) k2 = v.holds;
      if (v.k == 5) k5 = v.holds;
    }
    expect(k2 && k5);
    bool flagged = false;
    for (const auto& v : check_inequalities(counts(2, {}), torus1))
      if (v.k == 2) flagged = !v.holds;
    expect(flagged);
  }
  // euler_identity
  {
    expect(sphere2 == -1);
    expect(torus3 == 1);
    const EulerIdentity e = euler_identity(counts(2, {0, 0, 0, 0, 0, 1}), 2);
    expect(e.lhs == -1 && e.rhs == -1 && e.residual == 0);
  }
  // solution_lower_bound
  {
    expect(solution_lower_bound(counts(2, {}), 2) == 1);
    expect(solution_lower_bound(counts(2, {}), 0) == 1);
    expect(solution_lower_bound(counts(2, {0, 0, 0, 0, 0, 1}), 2) == 0);
  }
  // existence_certificates
  {
    auto certified = [](const std::vector<Certificate>& l, const std::string& id, int witness) {
      return std::any_of(l.begin(), l.end(), [&](const Certificate& c) {
        return c.id == id && c.status == "certified" &&
               (witness < 0 || std::find(c.witness.begin(), c.witness.end(), witness) != c.witness.end());
      });
    };
    expect(certified(existence_certificates(counts(2, {}), &sphere1), "missing_index_at_infinity", 3));
    expect(certified(existence_certificates(counts(2, {0, 0, 0, 0, 0, 1}), &sphere1), "top_pair_inequality_violated",
                     -1));
    expect(existence_certificates(counts(2, {0, 0, 0, 1, 0, 0}), &sphere1).empty());
  }
  ok = ok && reproduced == examples;
  return {ok, "sphere m=2 rhs " + std::to_string(sphere2) + ", torus m=3 rhs " + std::to_string(torus3) + ", " +
                  std::to_string(store.tables().size()) + " bundled tables " + (tables ? "valid" : "INVALID") +
                  ", examples " + std::to_string(reproduced) + "/" + std::to_string(examples)};
}

Verdict solver() {
  auto s = build_surface(SurfaceKind::torus, 64, default_eta(SurfaceKind::torus));
  KFunction k(s, {});
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  std::vector<double> c(s->coeff_size(), 0.0);
  for (std::size_t i = 1; i < c.size(); ++i)
    if (s->slot_eigenvalues()[i] < 400.0) c[i] = 0.02 * n(rng);
  const SolverState st = solve_mf(k, 4 * kPi, s->from_coeffs(c));
  const double norm = s->dirichlet_norm(st.u);
  const auto modes = s->eigenmodes(8);
  const SpectrumReport sp = linearized_spectrum(k, 4 * kPi, s->zero_field(), 8);
  double spec = 0.0;
  for (int i = 0; i < 8; ++i) spec = std::max(spec, std::abs(sp.eigenvalues.at(i) - (modes[i].mu - 4 * kPi)));
  const int below = linearized_spectrum(k, 39.0, s->zero_field(), 8).morse_index;
  const int above = linearized_spectrum(k, 40.0, s->zero_field(), 8).morse_index;
  return {st.status == SolveStatus::converged && norm < 1e-8 && spec < 1e-8 && below == 0 && above == 4,
          to_string(st.status) + " with |u| " + fmt("%.1e", norm) + ", spectrum error " + fmt("%.1e", spec) +
              ", Morse index " + std::to_string(below) + " -> " + std::to_string(above)};
}

Verdict roundtrip() {
  auto s = build_surface(SurfaceKind::torus, 512, 0.2);
  double worst = 0.0;
  bool ok = true;
  for (int m : {1, 2})
    for (double l : {20.0, 40.0}) {
      BubbleParams p;
      p.points = m == 1 ? Configuration{{0.3, 0.6, 0}} : Configuration{{0.3, 0.6, 0}, {0.75, 0.2, 0}};
      p.lambda.assign(m, l);
      p.alpha.assign(m, 1.0);
      if (m == 2) {
        p.lambda[1] = 1.3 * l;
        p.alpha[1] = 1.02;
      }
      const Decomposition d = project_to_V(*s, approximate_solution(*s, p), m);
      ok = ok && d.converged && int(d.params.points.size()) == m;
      if (!ok) break;
      for (int i = 0; i < m; ++i) {
        int j = 0;
        for (int q = 1; q < m; ++q)
          if (s->distance(p.points[i], d.params.points[q]) < s->distance(p.points[i], d.params.points[j])) j = q;
        worst = std::max({worst, s->distance(p.points[i], d.params.points[j]),
                          std::abs(d.params.lambda[j] / p.lambda[i] - 1.0),
                          std::abs(d.params.alpha_at(j) - p.alpha[i])});
      }
    }
  return {ok && worst < 1e-6, "worst parameter error " + fmt("%.2e", worst)};
}

Verdict wbar_bound() {
  KFunction k(fine_torus(), trig_k());
  Verdict v{true, ""};
  for (double alpha : {1.0, 1.001}) {
    std::vector<double> cs;
    for (double l : {20.0, 40.0, 80.0}) {
      const WBarResult r = minimize_w_bar(k, 0.0, {{{0.3, 0.6, 0}}, {l}, {alpha}});
      v.pass = v.pass && r.converged;
      cs.push_back(r.norm / (std::abs(alpha - 1.0) + 1.0 / l));
    }
    const auto [lo, hi] = std::minmax_element(cs.begin(), cs.end());
    v.pass = v.pass && *hi <= 3.0 * *lo;
    v.detail += "alpha " + fmt("%g", alpha) + ": C = " + fmt("%.2f", cs[0]) + ", " + fmt("%.2f", cs[1]) + ", " +
                fmt("%.2f", cs[2]) + "; ";
  }
  v.detail.resize(v.detail.size() - 2);
  return v;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("barymorse_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  Verdict v{true, ""};
  const std::pair<const char*, const char*> runs[] = {{"crit-find", "crit_find_torus_trig"},
                                                      {"crit-find", "crit_find_sphere_m2"},
                                                      {"solve", "solve_torus"}};
  for (const auto& [cmd, cfg] : runs) {
    std::string first;
    for (const char* threads : {"1", "3"}) {
      const std::string line = std::string("BARYMORSE_THREADS=") + threads + " \"" + BARYMORSE_CLI + "\" " + cmd +
                               " \"" + BARYMORSE_CONFIGS + "/" + cfg + ".json\" --seed 11 --out \"" + dir.string() +
                               "\" > /dev/null 2>&1";
      if (std::system(line.c_str()) != 0) {
        v.pass = false;
        v.detail += std::string(cfg) + " run failed; ";
        break;
      }
      const std::string bytes = slurp(dir / (std::string(cmd) + ".json"));
      if (first.empty()) {
        first = bytes;
      } else {
        const bool same = bytes == first && !bytes.empty();
        v.pass = v.pass && same;
        v.detail += std::string(cfg) + (same ? " identical" : " DIFFERS") + " (" + std::to_string(bytes.size()) +
                    " bytes); ";
      }
    }
  }
  fs::remove_all(dir);
  v.detail.resize(v.detail.size() - 2);
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria = {
      {1, green_machinery},   {2, far_field},           {3, pairings},
      {4, keu_order_one},     {5, energy_correction_check}, {6, gradient_expansions},
      {7, reduced_energy_derivatives}, {8, counting}, {9, solver},
      {10, roundtrip},        {11, wbar_bound},         {12, determinism}};
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    std::printf("criterion %2d %s  %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria pass\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
