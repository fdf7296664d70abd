#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "barymorse/bubbles.hpp"
#include "barymorse/critical_search.hpp"
#include "barymorse/json_io.hpp"
#include "barymorse/mf_solver.hpp"
#include "barymorse/morse_report.hpp"
#include "barymorse/parallel.hpp"
#include "barymorse/reduced_energy.hpp"
#include "barymorse/topology.hpp"
#include "barymorse/verify.hpp"

namespace fs = std::filesystem;
using namespace barymorse;

namespace {

constexpr int kNotEvaluable = 2;

struct Options {
  std::string config;
  std::string out;
  std::string betti_tables;
  std::int64_t seed = -1;
  std::vector<std::string> checks;
};

struct Output {
  Json result;
  std::ostringstream text;
  std::vector<std::pair<std::string, std::string>> files;  // name, contents
  int code = 0;
};

std::string fixed(double v, int prec = 6) {
  std::ostringstream o;
  o << std::setprecision(prec) << v;
  return o.str();
}

std::string points_text(const Configuration& a, SurfaceKind kind) {
  std::string s;
  for (const auto& p : a) {
    if (!s.empty()) s += " ";
    s += "(" + fixed(p.x) + ", " + fixed(p.y) + (kind == SurfaceKind::sphere ? ", " + fixed(p.z) : "") + ")";
  }
  return s;
}

BettiStore betti_store(const RunConfig& cfg) {
  return cfg.betti_tables.empty() ? BettiStore::bundled() : BettiStore::load(cfg.betti_tables);
}

void cmd_surface_info(const RunConfig& cfg, const Surface& s, Output& o) {
  const auto modes = s.eigenmodes(8);
  std::vector<double> mu;
  for (const auto& e : modes) mu.push_back(e.mu);
  o.result = {{"kind", to_string(s.kind())},
              {"N", s.resolution()},
              {"eta", s.eta()},
              {"eta0", s.eta0()},
              {"euler_characteristic", s.euler_characteristic()},
              {"grid_size", s.grid_size()},
              {"grid_spacing", s.grid_spacing()},
              {"robin", s.robin()},
              {"max_resolvable_lambda", max_resolvable_lambda(s)},
              {"eigenvalues", mu}};
  auto& t = o.text;
  t << std::left << std::setw(24) << "surface" << to_string(s.kind()) << "\n"
    << std::setw(24) << "N" << s.resolution() << "\n"
    << std::setw(24) << "eta / eta0" << fixed(s.eta()) << " / " << fixed(s.eta0()) << "\n"
    << std::setw(24) << "Euler characteristic" << s.euler_characteristic() << "\n"
    << std::setw(24) << "grid spacing" << fixed(s.grid_spacing()) << "\n"
    << std::setw(24) << "Robin constant" << fixed(s.robin(), 12) << "\n"
    << std::setw(24) << "max resolvable lambda" << fixed(max_resolvable_lambda(s)) << "\n";
  (void)cfg;
}

void critical_table(std::ostringstream& t, const std::vector<ClassifiedCritical>& list, SurfaceKind kind) {
  t << std::left << std::setw(4) << "#" << std::setw(16) << "F" << std::setw(12) << "|grad F|" << std::setw(7)
    << "index" << std::setw(8) << "nondeg" << std::setw(14) << "L(A)" << std::setw(7) << "K^-" << std::setw(6)
    << "iota" << "points\n";
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& c = list[i];
    t << std::left << std::setw(4) << i << std::setw(16) << fixed(c.value, 10) << std::setw(12)
      << fixed(c.grad_norm, 3) << std::setw(7) << c.morse_index << std::setw(8) << (c.nondegenerate ? "yes" : "no")
      << std::setw(14) << fixed(c.stability, 6) << std::setw(7) << (c.in_k_minus ? "yes" : "no") << std::setw(6)
      << (c.iota_infinity ? std::to_string(*c.iota_infinity) : "-") << points_text(c.points, kind) << "\n";
  }
}

void cmd_crit_find(const RunConfig& cfg, const KFunction& k, Output& o) {
  SearchConfig sc = cfg.search;
  sc.seed = cfg.seed;
  const SearchResult r = find_critical_points(k, cfg.m, sc);
  const SurfaceKind kind = k.surface().kind();
  o.result = to_json(r, kind);
  o.files.emplace_back("criticals.csv", criticals_csv(cfg.m, r.criticals, kind));
  o.text << "m = " << r.m << ": " << r.criticals.size() << " critical configurations from " << r.starts
         << " starts (" << r.converged << " converged, " << r.failed << " failed)\n";
  if (r.degenerate_family) o.text << "every converged start is degenerate (continuous family)\n";
  critical_table(o.text, r.criticals, kind);
  for (const auto& n : r.notes) o.text << "note: " << n << "\n";
}

void cmd_crit_classify(const RunConfig& cfg, const KFunction& k, Output& o) {
  if (cfg.classify.empty()) throw ConfigError("crit-classify: config field 'classify' lists no configurations");
  const Surface& s = k.surface();
  std::vector<ClassifiedCritical> list;
  for (const auto& a : cfg.classify)
    list.push_back(classify(k, on_surface(s, a), cfg.search.tol_grad, cfg.search.tol_deg_rel));
  Json arr = Json::array();
  for (const auto& c : list) arr.push_back(to_json(c, s.kind()));
  o.result = {{"m", int(cfg.classify.front().size())}, {"criticals", arr}};
  o.files.emplace_back("criticals.csv", criticals_csv(int(cfg.classify.front().size()), list, s.kind()));
  critical_table(o.text, list, s.kind());
}

void cmd_betti(const RunConfig& cfg, Output& o) {
  const BettiStore store = betti_store(cfg);
  const auto t = store.find(cfg.surface.kind, cfg.m);
  if (!t) {
    o.result = {{"kind", cfg.surface.kind}, {"m", cfg.m}, {"available", false}};
    o.text << "no Betti table for " << cfg.surface.kind << " m = " << cfg.m << "\n";
    o.code = kNotEvaluable;
    return;
  }
  Json checks = Json::array();
  for (const auto& c : validate_betti(*t)) {
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    o.text << std::left << std::setw(28) << c.name << (c.pass ? "pass" : "FAIL") << "  " << c.detail << "\n";
  }
  o.result = {{"available", true}, {"table", to_json(*t)}, {"checks", checks},
              {"euler_char", euler_char_barycenter(t->chi, t->m)}};
  o.text << "beta:";
  for (auto b : t->beta) o.text << " " << b;
  o.text << "\n";
}

void cmd_morse_report(const RunConfig& cfg, const fs::path& config_dir, Output& o) {
  std::vector<ClassifiedCritical> records;
  if (!cfg.classification.empty()) {
    fs::path p = cfg.classification;
    if (p.is_relative() && !fs::exists(p)) p = config_dir / p;
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open classification file '" + p.string() + "'");
    records = criticals_from_json(Json::parse(in));
  }
  std::vector<std::string> caveats;
  const IndexCounts counts = counts_from_criticals(cfg.m, records, cfg.nu, &caveats);
  const SurfaceKind kind = surface_kind_from_string(cfg.surface.kind);
  const int chi = kind == SurfaceKind::torus ? 0 : 2;
  const MorseReport r = build_morse_report(counts, chi, cfg.surface.kind, betti_store(cfg), &records, caveats);
  o.result = to_json(r);
  auto& t = o.text;
  t << "m = " << r.m << ", chi = " << r.chi << "\n";
  t << "euler identity: lhs " << r.euler.lhs << ", rhs " << r.euler.rhs << ", residual " << r.euler.residual << "\n";
  t << "solution lower bound: " << r.lower_bound << "\n";
  if (!r.inequalities_evaluable) t << "Morse inequalities: not evaluable (missing Betti table)\n";
  for (const auto& v : r.inequalities)
    t << "  k = " << std::setw(3) << v.k << " lhs " << std::setw(5) << v.lhs << " rhs " << std::setw(5) << v.rhs
      << (v.holds ? "  holds" : "  VIOLATED -> solutions forced") << "\n";
  for (const auto& c : r.certificates) t << std::left << std::setw(32) << c.id << c.status << "  " << c.conclusion << "\n";
  for (const auto& c : r.caveats) t << "caveat: " << c << "\n";
  if (r.not_evaluable()) o.code = kNotEvaluable;
}

void cmd_verify(const RunConfig& cfg, const KFunction& k, const std::vector<std::string>& flag_checks, Output& o) {
  const Surface& s = k.surface();
  ExpansionParams p = cfg.expansion.params;
  if (p.points.empty()) throw ConfigError("verify-expansions: config field 'expansion.points' is empty");
  p.points = on_surface(s, p.points);
  std::vector<std::string> ids = flag_checks.empty() ? cfg.expansion.checks : flag_checks;
  if (ids.empty()) {
    for (const auto& id : expansion_check_ids())
      if (p.points.size() >= 2 || (id != "cross_pairing" && id != "cross_rate_pairing")) ids.push_back(id);
  }
  std::vector<std::string> expanded;
  for (const auto& id : ids) {
    if (id == "inner_products") {
      for (const char* x : {"dirichlet_norm", "norm_rate_pairing", "cross_pairing", "cross_rate_pairing"})
        expanded.emplace_back(x);
    } else {
      expanded.push_back(id);
    }
  }
  std::vector<ExpansionCheck> results;
  Json arr = Json::array();
  bool all = true;
  o.text << std::left << std::setw(32) << "check" << std::setw(9) << "alpha" << std::setw(9) << "mu"
         << std::setw(10) << "declared" << std::setw(10) << "fitted" << "result\n";
  for (const auto& id : expanded) {
    results.push_back(verify_expansion(k, id, p));
    const auto& c = results.back();
    arr.push_back(to_json(c));
    all = all && c.pass;
    for (const auto& cell : c.cells)
      o.text << std::left << std::setw(32) << id << std::setw(9) << fixed(cell.alpha, 5) << std::setw(9)
             << fixed(cell.mu, 3) << std::setw(10) << fixed(cell.declared_order, 3) << std::setw(10)
             << fixed(cell.fitted_order, 4) << (cell.pass ? "pass" : "FAIL") << "\n";
  }
  Json pts = Json::array();
  for (const auto& a : p.points) pts.push_back(point_json(a, s.kind()));
  o.result = {{"points", pts}, {"all_pass", all}, {"checks", arr}};
  o.files.emplace_back("expansions.csv", expansion_csv(results));
}

ScalarField initial_field(const Surface& s, const BubbleParams& init) {
  if (init.points.empty()) return s.zero_field();
  BubbleParams p = init;
  p.points = on_surface(s, p.points);
  return approximate_solution(s, p);
}

void cmd_solve(const RunConfig& cfg, const KFunction& k, Output& o) {
  const Surface& s = k.surface();
  const double rho = cfg.solve.rho > 0.0 ? cfg.solve.rho : 8.0 * std::numbers::pi * cfg.m * (1.0 + cfg.solve.mu);
  const SolverState st = solve_mf(k, rho, initial_field(s, cfg.solve.init), cfg.solve.solver);
  o.result = {{"state", to_json(st)}};
  o.text << "rho = " << fixed(rho, 10) << ": " << to_string(st.status) << " after " << st.iterations
         << " iterations, |grad J| = " << fixed(st.grad_norm, 3) << ", J = " << fixed(st.energy, 12) << "\n";
  if (st.status == SolveStatus::converged && cfg.solve.spectrum_modes > 0) {
    const SpectrumReport sp = linearized_spectrum(k, rho, st.u, cfg.solve.spectrum_modes);
    o.result["spectrum"] = to_json(sp);
    o.text << "Morse index " << sp.morse_index << ", kernel " << sp.kernel_dim << "\n";
  }
}

void cmd_continuation(const RunConfig& cfg, const KFunction& k, Output& o) {
  const Surface& s = k.surface();
  const BranchRecord b =
      continuation(k, cfg.m, cfg.continuation.direction, initial_field(s, cfg.continuation.init), cfg.continuation.cfg);
  o.result = to_json(b, s.kind());
  o.files.emplace_back("branch.jsonl", branch_jsonl(b, s.kind()));
  o.text << "branch m = " << b.m << " (" << b.direction << "): " << b.outcome << "\n";
  o.text << std::left << std::setw(12) << "mu" << std::setw(18) << "status" << std::setw(14) << "max u"
         << std::setw(7) << "index" << "in V\n";
  for (const auto& st : b.steps)
    o.text << std::left << std::setw(12) << fixed(st.mu, 4) << std::setw(18) << to_string(st.status) << std::setw(14)
           << fixed(st.max_u, 6) << std::setw(7) << st.morse_index << (st.in_V ? "yes" : "no") << "\n";
  if (b.limit_stability) o.text << "L(A) at the blow-up points: " << fixed(*b.limit_stability) << "\n";
  for (const auto& n : b.notes) o.text << "note: " << n << "\n";
}

void cmd_project(const RunConfig& cfg, const KFunction& k, Output& o) {
  const Surface& s = k.surface();
  if (cfg.project.source.points.empty()) throw ConfigError("project: config field 'project.source' is empty");
  BubbleParams src = cfg.project.source;
  src.points = on_surface(s, src.points);
  const ScalarField u = approximate_solution(s, src);
  const Decomposition d = project_to_V(s, u, cfg.project.m, cfg.project.cfg, &k);
  o.result = to_json(d, s.kind());
  o.text << "m = " << d.m << ", |w| = " << fixed(d.w_norm, 4) << ", in V: " << (d.in_V ? "yes" : "no") << "\n";
  for (int i = 0; i < d.m; ++i)
    o.text << "  a = " << points_text({d.params.points[i]}, s.kind()) << "  lambda = " << fixed(d.params.lambda[i], 10)
           << "  alpha = " << fixed(d.params.alpha_at(i), 10) << "\n";
  for (const auto& r : d.reasons) o.text << "not in V: " << r << "\n";
}

void write_file(const fs::path& p, const std::string& contents) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  f << contents;
}

int run(const std::string& command, const Options& opt) {
  RunConfig cfg = load_run_config(opt.config);
  if (opt.seed >= 0) cfg.seed = std::uint64_t(opt.seed);
  if (!opt.betti_tables.empty()) cfg.betti_tables = opt.betti_tables;
  if (!opt.out.empty()) cfg.output_dir = opt.out;
  const fs::path config_dir = fs::path(opt.config).parent_path();

  Output o;
  if (command == "betti") {
    cmd_betti(cfg, o);
  } else if (command == "morse-report") {
    cmd_morse_report(cfg, config_dir, o);
  } else {
    const SurfacePtr s = make_surface(cfg.surface);
    if (command == "surface-info") {
      cmd_surface_info(cfg, *s, o);
    } else {
      KFunction k(s, cfg.k);
      if (command == "crit-find") cmd_crit_find(cfg, k, o);
      else if (command == "crit-classify") cmd_crit_classify(cfg, k, o);
      else if (command == "verify-expansions") cmd_verify(cfg, k, opt.checks, o);
      else if (command == "solve") cmd_solve(cfg, k, o);
      else if (command == "continuation") cmd_continuation(cfg, k, o);
      else if (command == "project") cmd_project(cfg, k, o);
    }
  }

  Json report;
  report["schema_version"] = kSchemaVersion;
  report["command"] = command;
  report["config"] = to_json(cfg);
  report["result"] = o.result;

  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  write_file(dir / (command + ".json"), report.dump(2) + "\n");
  write_file(dir / (command + ".txt"), o.text.str());
  for (const auto& [name, contents] : o.files) write_file(dir / name, contents);
  // Run metadata lives apart from the report so the report is reproducible.
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream ts;
  ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
  Json meta = {{"schema_version", kSchemaVersion}, {"command", command}, {"timestamp", ts.str()},
               {"threads", thread_count()}};
  write_file(dir / (command + ".meta.json"), meta.dump(2) + "\n");

  std::cout << o.text.str();
  return o.code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critical points at infinity for the mean field equation on model surfaces"};
  app.require_subcommand(1);
  Options opt;
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"surface-info", "Describe the discretised surface"},
      {"crit-find", "Multistart search for critical points of the reduced energy"},
      {"crit-classify", "Classify listed configurations"},
      {"betti", "Show and validate a Betti table of the barycenter space"},
      {"morse-report", "Morse inequalities, Euler identity and existence certificates"},
      {"verify-expansions", "Quadrature checks of the asymptotic expansions"},
      {"solve", "Newton solve of the mean field equation"},
      {"continuation", "Follow a branch as rho approaches 8 pi m"},
      {"project", "Decompose a field into bubbles plus remainder"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", opt.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory (overrides output_dir)");
    sub->add_option("--seed", opt.seed, "Random seed (overrides seed)");
    sub->add_option("--betti-tables", opt.betti_tables, "Betti table file (default: bundled)");
    if (std::string(name) == "verify-expansions")
      sub->add_option("--check", opt.checks, "Check ids, or inner_products for the four pairings");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, opt);
  } catch (const std::exception& e) {
    std::cerr << "barymorse " << command << ": " << e.what() << "\n";
    return 1;
  }
}
