#include "barymorse/json_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace barymorse {

namespace {

// Field access with the dotted path in every error message.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string at(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  Reader child(const char* key) const { return Reader(j_.at(key), at(key)); }
  const Json& raw(const char* key) const { return j_.at(key); }

  template <class T>
  void get(const char* key, T& out) const {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected true or false");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      throw ConfigError("config field '" + at(key) + "': " + e.what());
    }
  }

  std::vector<double> numbers(const char* key) const {
    const Json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError("config field '" + at(key) + "': expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError("config field '" + at(key) + "': expected an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  // Rejects keys outside `allowed`; a typo would otherwise fall back to a default silently.
  void only(std::initializer_list<const char*> allowed) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool ok = false;
      for (const char* k : allowed) ok = ok || it.key() == k;
      if (!ok) fail("unknown field '" + it.key() + "'");
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config field '" + (path_.empty() ? std::string("<root>") : path_) + "': " + msg);
  }

 private:
  const Json& j_;
  std::string path_;
};

Point point_from(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() < 2 || v.size() > 3)
    throw ConfigError("config field '" + path + "': expected a point [x, y] or [x, y, z]");
  double c[3] = {0, 0, 0};
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError("config field '" + path + "': point coordinates must be numbers");
    c[i] = v[i].get<double>();
  }
  return {c[0], c[1], c[2]};
}

Configuration points_from(const Json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError("config field '" + path + "': expected a list of points");
  Configuration out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(point_from(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Json raw_point(const Point& p) { return Json::array({p.x, p.y, p.z}); }

Json raw_points(const Configuration& a) {
  Json out = Json::array();
  for (const auto& p : a) out.push_back(raw_point(p));
  return out;
}

KPreset preset_from(const Reader& r) {
  KPreset k;
  r.only({"name", "c0", "terms", "bumps", "linear"});
  r.get("name", k.name);
  r.get("c0", k.c0);
  if (k.name != "constant" && k.name != "trig" && k.name != "gaussian" && k.name != "linear")
    throw ConfigError("config field '" + r.at("name") + "': unknown K preset '" + k.name +
                      "' (constant, trig, gaussian, linear)");
  if (r.has("terms")) {
    const Json& t = r.raw("terms");
    if (!t.is_array()) r.fail("terms must be an array");
    for (std::size_t i = 0; i < t.size(); ++i) {
      Reader tr(t[i], r.at("terms") + "[" + std::to_string(i) + "]");
      tr.only({"k", "cos", "sin"});
      TrigTerm term;
      const auto kv = tr.numbers("k");
      if (kv.size() != 2) tr.fail("k must have two entries");
      term.k1 = int(kv[0]);
      term.k2 = int(kv[1]);
      if (term.k1 != kv[0] || term.k2 != kv[1]) tr.fail("k must be integer");
      tr.get("cos", term.cos_coef);
      tr.get("sin", term.sin_coef);
      k.trig.push_back(term);
    }
  }
  if (r.has("bumps")) {
    const Json& b = r.raw("bumps");
    if (!b.is_array()) r.fail("bumps must be an array");
    for (std::size_t i = 0; i < b.size(); ++i) {
      const std::string path = r.at("bumps") + "[" + std::to_string(i) + "]";
      Reader br(b[i], path);
      br.only({"center", "amplitude", "sigma"});
      GaussianBump bump;
      bump.center = point_from(br.raw("center"), path + ".center");
      br.get("amplitude", bump.amplitude);
      br.get("sigma", bump.sigma);
      k.bumps.push_back(bump);
    }
  }
  if (r.has("linear")) k.linear = point_from(r.raw("linear"), r.at("linear"));
  return k;
}

BubbleParams bubbles_from(const Reader& r) {
  BubbleParams p;
  r.only({"points", "lambda", "alpha"});
  if (r.has("points")) p.points = points_from(r.raw("points"), r.at("points"));
  if (r.has("lambda")) p.lambda = r.numbers("lambda");
  if (r.has("alpha")) p.alpha = r.numbers("alpha");
  if (p.lambda.size() != p.points.size()) r.fail("lambda must have one entry per point");
  if (!p.alpha.empty() && p.alpha.size() != p.points.size()) r.fail("alpha must have one entry per point");
  return p;
}

Json bubbles_json(const BubbleParams& p) {
  Json j;
  j["points"] = raw_points(p.points);
  j["lambda"] = p.lambda;
  j["alpha"] = p.alpha;
  return j;
}

void solver_from(const Reader& r, SolverConfig& s) {
  r.only({"tol", "max_iter", "krylov_iter", "krylov_tol", "blowup_factor"});
  r.get("tol", s.tol);
  r.get("max_iter", s.max_iter);
  r.get("krylov_iter", s.krylov_iter);
  r.get("krylov_tol", s.krylov_tol);
  r.get("blowup_factor", s.blowup_factor);
}

Json solver_json(const SolverConfig& s) {
  Json j;
  j["tol"] = s.tol;
  j["max_iter"] = s.max_iter;
  j["krylov_iter"] = s.krylov_iter;
  j["krylov_tol"] = s.krylov_tol;
  j["blowup_factor"] = s.blowup_factor;
  return j;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

std::string format_double(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  Json root;
  try {
    root = Json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(origin + ":" + std::to_string(line_of(text, e.byte)) + ": malformed config: " + e.what());
  }
  RunConfig c;
  const Reader r(root, "");
  static const char* known[] = {"surface", "K",       "m",         "seed",         "output_dir",
                                "betti_tables", "search", "classify", "classification", "nu",
                                "expansion", "solve",   "continuation", "project"};
  for (auto it = root.begin(); it != root.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(origin + ": unknown config field '" + it.key() + "'");
  }
  try {
    if (r.has("surface")) {
      const Reader s = r.child("surface");
      s.only({"kind", "N", "eta"});
      s.get("kind", c.surface.kind);
      s.get("N", c.surface.n);
      s.get("eta", c.surface.eta);
      try {
        (void)surface_kind_from_string(c.surface.kind);
      } catch (const std::exception&) {
        s.fail("unknown surface kind '" + c.surface.kind + "' (torus, sphere)");
      }
      if (c.surface.n < 8) s.fail("N must be at least 8");
    }
    if (r.has("K")) c.k = preset_from(r.child("K"));
    r.get("m", c.m);
    if (c.m < 1) throw ConfigError("config field 'm': must be at least 1");
    r.get("seed", c.seed);
    r.get("output_dir", c.output_dir);
    r.get("betti_tables", c.betti_tables);
    if (r.has("search")) {
      const Reader s = r.child("search");
      s.only({"starts", "tol_grad", "tol_pos", "d_min", "tol_deg_rel", "max_iter"});
      s.get("starts", c.search.starts);
      s.get("tol_grad", c.search.tol_grad);
      s.get("tol_pos", c.search.tol_pos);
      s.get("d_min", c.search.d_min);
      s.get("tol_deg_rel", c.search.tol_deg_rel);
      s.get("max_iter", c.search.max_iter);
    }
    if (r.has("classify")) {
      const Json& v = r.raw("classify");
      if (!v.is_array()) throw ConfigError("config field 'classify': expected a list of configurations");
      for (std::size_t i = 0; i < v.size(); ++i)
        c.classify.push_back(points_from(v[i], "classify[" + std::to_string(i) + "]"));
    }
    r.get("classification", c.classification);
    if (r.has("nu")) {
      for (double x : r.numbers("nu")) {
        if (x < 0 || x != std::floor(x)) throw ConfigError("config field 'nu': counts must be non-negative integers");
        c.nu.push_back((long long)x);
      }
    }
    if (r.has("expansion")) {
      const Reader e = r.child("expansion");
      e.only({"checks", "points", "lambdas", "alphas", "mus", "bubble", "balanced", "with_wbar"});
      if (e.has("checks")) {
        const Json& v = e.raw("checks");
        if (!v.is_array()) e.fail("checks must be a list of names");
        for (const auto& x : v) {
          if (!x.is_string()) e.fail("checks must be a list of names");
          c.expansion.checks.push_back(x.get<std::string>());
        }
      }
      auto& p = c.expansion.params;
      if (e.has("points")) p.points = points_from(e.raw("points"), e.at("points"));
      if (e.has("lambdas")) p.lambdas = e.numbers("lambdas");
      if (e.has("alphas")) p.alphas = e.numbers("alphas");
      if (e.has("mus")) p.mus = e.numbers("mus");
      e.get("bubble", p.bubble);
      e.get("balanced", p.balanced);
      e.get("with_wbar", p.with_wbar);
    }
    if (r.has("solve")) {
      const Reader s = r.child("solve");
      s.only({"rho", "mu", "init", "solver", "spectrum_modes"});
      s.get("rho", c.solve.rho);
      s.get("mu", c.solve.mu);
      if (s.has("init")) c.solve.init = bubbles_from(s.child("init"));
      if (s.has("solver")) solver_from(s.child("solver"), c.solve.solver);
      s.get("spectrum_modes", c.solve.spectrum_modes);
    }
    if (r.has("continuation")) {
      const Reader s = r.child("continuation");
      s.only({"direction", "init", "schedule", "min_mu", "spectrum_modes", "eps", "solver"});
      s.get("direction", c.continuation.direction);
      if (c.continuation.direction != "sup" && c.continuation.direction != "sub")
        s.fail("direction must be 'sup' or 'sub'");
      if (s.has("init")) c.continuation.init = bubbles_from(s.child("init"));
      if (s.has("schedule")) c.continuation.cfg.schedule = s.numbers("schedule");
      s.get("min_mu", c.continuation.cfg.min_mu);
      s.get("spectrum_modes", c.continuation.cfg.spectrum_modes);
      s.get("eps", c.continuation.cfg.eps);
      if (s.has("solver")) solver_from(s.child("solver"), c.continuation.cfg.solver);
    }
    if (r.has("project")) {
      const Reader s = r.child("project");
      s.only({"source", "m", "eps", "c1", "max_m", "max_iter", "tol_step"});
      if (s.has("source")) c.project.source = bubbles_from(s.child("source"));
      s.get("m", c.project.m);
      s.get("eps", c.project.cfg.eps);
      s.get("c1", c.project.cfg.c1);
      s.get("max_m", c.project.cfg.max_m);
      s.get("max_iter", c.project.cfg.max_iter);
      s.get("tol_step", c.project.cfg.tol_step);
    }
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  } catch (const Json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

Json to_json(const KPreset& k) {
  Json j;
  j["name"] = k.name;
  j["c0"] = k.c0;
  Json terms = Json::array();
  for (const auto& t : k.trig) terms.push_back({{"k", {t.k1, t.k2}}, {"cos", t.cos_coef}, {"sin", t.sin_coef}});
  j["terms"] = terms;
  Json bumps = Json::array();
  for (const auto& b : k.bumps)
    bumps.push_back({{"center", raw_point(b.center)}, {"amplitude", b.amplitude}, {"sigma", b.sigma}});
  j["bumps"] = bumps;
  j["linear"] = raw_point(k.linear);
  return j;
}

Json to_json(const RunConfig& c) {
  Json j;
  j["surface"] = {{"kind", c.surface.kind}, {"N", c.surface.n}, {"eta", c.surface.eta}};
  j["K"] = to_json(c.k);
  j["m"] = c.m;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["betti_tables"] = c.betti_tables;
  j["search"] = {{"starts", c.search.starts},         {"tol_grad", c.search.tol_grad},
                 {"tol_pos", c.search.tol_pos},       {"d_min", c.search.d_min},
                 {"tol_deg_rel", c.search.tol_deg_rel}, {"max_iter", c.search.max_iter}};
  Json cl = Json::array();
  for (const auto& a : c.classify) cl.push_back(raw_points(a));
  j["classify"] = cl;
  j["classification"] = c.classification;
  j["nu"] = c.nu;
  const auto& p = c.expansion.params;
  j["expansion"] = {{"checks", c.expansion.checks}, {"points", raw_points(p.points)}, {"lambdas", p.lambdas},
                    {"alphas", p.alphas},           {"mus", p.mus},                   {"bubble", p.bubble},
                    {"balanced", p.balanced},       {"with_wbar", p.with_wbar}};
  j["solve"] = {{"rho", c.solve.rho},
                {"mu", c.solve.mu},
                {"init", bubbles_json(c.solve.init)},
                {"solver", solver_json(c.solve.solver)},
                {"spectrum_modes", c.solve.spectrum_modes}};
  const auto& cc = c.continuation.cfg;
  j["continuation"] = {{"direction", c.continuation.direction},
                       {"init", bubbles_json(c.continuation.init)},
                       {"schedule", cc.schedule},
                       {"min_mu", cc.min_mu},
                       {"spectrum_modes", cc.spectrum_modes},
                       {"eps", cc.eps},
                       {"solver", solver_json(cc.solver)}};
  const auto& pc = c.project.cfg;
  j["project"] = {{"source", bubbles_json(c.project.source)},
                  {"m", c.project.m},
                  {"eps", pc.eps},
                  {"c1", pc.c1},
                  {"max_m", pc.max_m},
                  {"max_iter", pc.max_iter},
                  {"tol_step", pc.tol_step}};
  return j;
}

SurfacePtr make_surface(const SurfaceConfig& cfg) {
  const SurfaceKind kind = surface_kind_from_string(cfg.kind);
  return build_surface(kind, cfg.n, cfg.eta > 0.0 ? cfg.eta : default_eta(kind));
}

Configuration on_surface(const Surface& s, Configuration a) {
  for (auto& p : a) p = s.normalize(p);
  return a;
}

Json point_json(const Point& p, SurfaceKind kind) {
  if (kind == SurfaceKind::torus) return Json::array({p.x, p.y});
  return Json::array({p.x, p.y, p.z});
}

Json to_json(const ClassifiedCritical& c, SurfaceKind kind) {
  Json j;
  Json pts = Json::array();
  for (const auto& p : c.points) pts.push_back(point_json(p, kind));
  j["points"] = pts;
  j["F"] = c.value;
  j["grad_norm"] = c.grad_norm;
  j["fd_grad_norm"] = c.fd_grad_norm;
  j["eigenvalues"] = c.eigenvalues;
  j["morse_index"] = c.morse_index;
  j["nondegenerate"] = c.nondegenerate;
  j["L"] = c.stability;
  j["in_K_minus"] = c.in_k_minus;
  j["iota_inf"] = c.iota_infinity ? Json(*c.iota_infinity) : Json(nullptr);
  return j;
}

Json to_json(const SearchResult& r, SurfaceKind kind) {
  Json j;
  j["m"] = r.m;
  j["starts"] = r.starts;
  j["converged"] = r.converged;
  j["failed"] = r.failed;
  j["degenerate_family"] = r.degenerate_family;
  Json list = Json::array();
  for (const auto& c : r.criticals) list.push_back(to_json(c, kind));
  j["criticals"] = list;
  j["notes"] = r.notes;
  return j;
}

std::vector<ClassifiedCritical> criticals_from_json(const Json& report) {
  const Json* list = &report;
  if (report.is_object()) {
    if (report.contains("result") && report["result"].contains("criticals")) list = &report["result"]["criticals"];
    else if (report.contains("criticals")) list = &report["criticals"];
    else throw ConfigError("classification file has no 'criticals' list");
  }
  if (!list->is_array()) throw ConfigError("classification file: 'criticals' must be a list");
  std::vector<ClassifiedCritical> out;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const std::string path = "criticals[" + std::to_string(i) + "]";
    const Reader r((*list)[i], path);
    ClassifiedCritical c;
    c.points = points_from(r.raw("points"), r.at("points"));
    r.get("F", c.value);
    r.get("grad_norm", c.grad_norm);
    r.get("fd_grad_norm", c.fd_grad_norm);
    if (r.has("eigenvalues")) c.eigenvalues = r.numbers("eigenvalues");
    r.get("morse_index", c.morse_index);
    r.get("nondegenerate", c.nondegenerate);
    r.get("L", c.stability);
    r.get("in_K_minus", c.in_k_minus);
    if (r.has("iota_inf") && !r.raw("iota_inf").is_null()) {
      int q = 0;
      r.get("iota_inf", q);
      c.iota_infinity = q;
    }
    out.push_back(std::move(c));
  }
  return out;
}

Json to_json(const BettiTable& t) {
  return {{"kind", t.kind}, {"chi", t.chi}, {"m", t.m}, {"beta", t.beta}};
}

Json to_json(const MorseReport& r) {
  Json j;
  j["m"] = r.m;
  j["chi"] = r.chi;
  j["nu"] = r.counts.nu;
  j["nu_inf"] = r.counts.nu_inf;
  j["inequalities_evaluable"] = r.inequalities_evaluable;
  Json ineq = Json::array();
  for (const auto& v : r.inequalities)
    ineq.push_back({{"k", v.k}, {"lhs", v.lhs}, {"rhs", v.rhs}, {"holds", v.holds}, {"margin", v.margin}});
  j["inequalities"] = ineq;
  j["euler"] = {{"lhs", r.euler.lhs}, {"rhs", r.euler.rhs}, {"residual", r.euler.residual}};
  j["lower_bound"] = r.lower_bound;
  Json certs = Json::array();
  for (const auto& c : r.certificates)
    certs.push_back({{"id", c.id},
                     {"status", c.status},
                     {"hypotheses", c.hypotheses},
                     {"conclusion", c.conclusion},
                     {"witness", c.witness}});
  j["certificates"] = certs;
  j["caveats"] = r.caveats;
  return j;
}

Json to_json(const ExpansionCheck& c) {
  Json j;
  j["check"] = c.id;
  j["pass"] = c.pass;
  Json cells = Json::array();
  for (const auto& cell : c.cells) {
    Json rows = Json::array();
    for (const auto& r : cell.rows)
      rows.push_back({{"lambda", r.lambda}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"residual", r.residual}});
    cells.push_back({{"alpha", cell.alpha},
                     {"mu", cell.mu},
                     {"declared_order", cell.declared_order},
                     {"log_power", cell.log_power},
                     {"fitted_order", finite_or_null(cell.fitted_order)},
                     {"lhs_order", finite_or_null(cell.lhs_order)},
                     {"monotone", cell.monotone},
                     {"pass", cell.pass},
                     {"rows", rows}});
  }
  j["cells"] = cells;
  j["notes"] = c.notes;
  return j;
}

Json to_json(const EnergyCorrection& e) {
  return {{"lambda1", e.lambda1},     {"measured", e.measured}, {"predicted", e.predicted},
          {"L", e.stability},         {"sign_matches", e.sign_matches}, {"ratio", e.ratio}};
}

Json to_json(const SpectrumReport& r) {
  return {{"eigenvalues", r.eigenvalues},
          {"hessian_eigenvalues", r.hessian_eigenvalues},
          {"morse_index", r.morse_index},
          {"kernel_dim", r.kernel_dim},
          {"generalized_index", r.generalized_index},
          {"hessian_morse_index", r.hessian_morse_index},
          {"basis_size", r.basis_size}};
}

Json to_json(const SolverState& s) {
  return {{"rho", s.rho},
          {"status", to_string(s.status)},
          {"iterations", s.iterations},
          {"grad_norm", s.grad_norm},
          {"residual", s.residual},
          {"energy", s.energy},
          {"energy_monotone", s.energy_monotone},
          {"grad_history", s.grad_history},
          {"energy_history", s.energy_history},
          {"message", s.message}};
}

Json to_json(const ContinuationStep& s, SurfaceKind kind) {
  Json pts = Json::array();
  for (const auto& p : s.fitted_points) pts.push_back(point_json(p, kind));
  return {{"mu", s.mu},
          {"rho", s.rho},
          {"status", to_string(s.status)},
          {"energy", s.energy},
          {"grad_norm", s.grad_norm},
          {"max_u", s.max_u},
          {"morse_index", s.morse_index},
          {"generalized_index", s.generalized_index},
          {"in_V", s.in_V},
          {"fitted_points", pts},
          {"fitted_lambda", s.fitted_lambda},
          {"fit_w_norm", s.fit_w_norm}};
}

Json to_json(const BranchRecord& b, SurfaceKind kind) {
  Json steps = Json::array();
  for (const auto& s : b.steps) steps.push_back(to_json(s, kind));
  return {{"m", b.m},
          {"direction", b.direction},
          {"outcome", b.outcome},
          {"limit_stability", b.limit_stability ? Json(*b.limit_stability) : Json(nullptr)},
          {"lambda_monotone", b.lambda_monotone},
          {"steps", steps},
          {"notes", b.notes}};
}

Json to_json(const Decomposition& d, SurfaceKind kind) {
  Json pts = Json::array();
  for (const auto& p : d.params.points) pts.push_back(point_json(p, kind));
  return {{"m", d.m},
          {"points", pts},
          {"lambda", d.params.lambda},
          {"alpha", d.params.alpha_or_ones()},
          {"w_norm", d.w_norm},
          {"orthogonality", d.orthogonality},
          {"iterations", d.iterations},
          {"converged", d.converged},
          {"in_V", d.in_V},
          {"reasons", d.reasons},
          {"grad_norm", d.grad_norm ? Json(*d.grad_norm) : Json(nullptr)}};
}

std::string criticals_csv(int m, const std::vector<ClassifiedCritical>& list, SurfaceKind kind) {
  std::ostringstream o;
  o << "m,points,F,grad_norm,eigs,morse_index,nondeg,L,in_K_minus,iota_inf\n";
  for (const auto& c : list) {
    std::string pts;
    for (const auto& p : c.points) {
      if (!pts.empty()) pts += ';';
      pts += format_double(p.x) + ' ' + format_double(p.y);
      if (kind == SurfaceKind::sphere) pts += ' ' + format_double(p.z);
    }
    std::string eigs;
    for (double e : c.eigenvalues) {
      if (!eigs.empty()) eigs += ';';
      eigs += format_double(e);
    }
    o << m << ",\"" << pts << "\"," << format_double(c.value) << ',' << format_double(c.grad_norm) << ",\""
      << eigs << "\"," << c.morse_index << ',' << (c.nondegenerate ? 1 : 0) << ',' << format_double(c.stability)
      << ',' << (c.in_k_minus ? 1 : 0) << ',' << (c.iota_infinity ? std::to_string(*c.iota_infinity) : "") << '\n';
  }
  return o.str();
}

std::string expansion_csv(const std::vector<ExpansionCheck>& checks) {
  std::ostringstream o;
  o << "check,alpha,mu,lambda,lhs,rhs,residual,fitted_order,declared_order,log_power,pass\n";
  for (const auto& c : checks)
    for (const auto& cell : c.cells)
      for (const auto& r : cell.rows)
        o << c.id << ',' << format_double(cell.alpha) << ',' << format_double(cell.mu) << ','
          << format_double(r.lambda) << ',' << format_double(r.lhs) << ',' << format_double(r.rhs) << ','
          << format_double(r.residual) << ',' << format_double(cell.fitted_order) << ','
          << format_double(cell.declared_order) << ',' << format_double(cell.log_power) << ','
          << (cell.pass ? 1 : 0) << '\n';
  return o.str();
}

std::string branch_jsonl(const BranchRecord& b, SurfaceKind kind) {
  std::string out;
  for (const auto& s : b.steps) {
    Json j = to_json(s, kind);
    j["m"] = b.m;
    j["direction"] = b.direction;
    out += j.dump() + '\n';
  }
  return out;
}

}  // namespace barymorse
