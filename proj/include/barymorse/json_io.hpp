#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "barymorse/bubbles.hpp"
#include "barymorse/critical_search.hpp"
#include "barymorse/kfunc.hpp"
#include "barymorse/mf_solver.hpp"
#include "barymorse/morse_report.hpp"
#include "barymorse/surface.hpp"
#include "barymorse/topology.hpp"
#include "barymorse/verify.hpp"

namespace barymorse {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Run configuration. Every block is optional; defaults are the member
// initialisers below. Points are [x, y] on the torus (unit square
// coordinates) and [x, y, z] on the sphere (normalised on load).
struct SurfaceConfig {
  std::string kind = "torus";
  int n = 128;
  double eta = 0.0;  // 0 selects the surface default
};

struct ExpansionConfig {
  std::vector<std::string> checks;  // empty selects all applicable
  ExpansionParams params;
};

struct SolveConfig {
  double rho = 0.0;        // 0 selects 8 pi m (1 + mu)
  double mu = 0.0;
  BubbleParams init;       // empty points: start from u = 0
  SolverConfig solver;
  int spectrum_modes = 8;
};

struct ContinuationBlock {
  std::string direction = "sup";
  BubbleParams init;
  ContinuationConfig cfg;
};

struct ProjectBlock {
  BubbleParams source;     // u = approximate_solution(source)
  int m = 0;               // 0 scans 1..max_m
  ProjectConfig cfg;
};

struct RunConfig {
  SurfaceConfig surface;
  KPreset k;
  int m = 1;
  std::uint64_t seed = 1;
  std::string output_dir = ".";
  std::string betti_tables;  // empty selects the bundled tables
  SearchConfig search;
  std::vector<Configuration> classify;  // crit-classify inputs
  std::string classification;           // morse-report: crit-find/crit-classify JSON
  std::vector<long long> nu;            // morse-report: solution counts by index
  ExpansionConfig expansion;
  SolveConfig solve;
  ContinuationBlock continuation;
  ProjectBlock project;
};

// Throws ConfigError naming the line (syntax) or the field path (content).
RunConfig parse_run_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_run_config(const std::string& path);
Json to_json(const RunConfig& cfg);

SurfacePtr make_surface(const SurfaceConfig& cfg);
// Normalises points onto the surface.
Configuration on_surface(const Surface& s, Configuration a);

Json point_json(const Point& p, SurfaceKind kind);
Json to_json(const KPreset& k);
Json to_json(const ClassifiedCritical& c, SurfaceKind kind);
Json to_json(const SearchResult& r, SurfaceKind kind);
Json to_json(const BettiTable& t);
Json to_json(const MorseReport& r);
Json to_json(const ExpansionCheck& c);
Json to_json(const EnergyCorrection& e);
Json to_json(const SpectrumReport& r);
Json to_json(const SolverState& s);  // the field itself is omitted
Json to_json(const ContinuationStep& s, SurfaceKind kind);
Json to_json(const BranchRecord& b, SurfaceKind kind);
Json to_json(const Decomposition& d, SurfaceKind kind);

// Records from a crit-find / crit-classify report.
std::vector<ClassifiedCritical> criticals_from_json(const Json& report);

std::string criticals_csv(int m, const std::vector<ClassifiedCritical>& list, SurfaceKind kind);
std::string expansion_csv(const std::vector<ExpansionCheck>& checks);
// One JSON object per line, one line per step.
std::string branch_jsonl(const BranchRecord& b, SurfaceKind kind);

// Shortest round-trip decimal form, used by every report writer.
std::string format_double(double v);

}  // namespace barymorse
