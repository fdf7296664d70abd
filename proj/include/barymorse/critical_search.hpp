#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "barymorse/reduced_energy.hpp"

namespace barymorse {

struct SearchConfig {
  int starts = 0;  // 0 selects 200 m
  std::uint64_t seed = 1;
  double tol_grad = 1e-8;
  double tol_pos = 1e-5;
  double d_min = 0.0;  // collision barrier; 0 selects 4 eta
  double tol_deg_rel = 1e-6;
  int max_iter = 200;
};

struct ClassifiedCritical {
  Configuration points;
  double value = 0.0;
  double grad_norm = 0.0;
  double fd_grad_norm = 0.0;  // independent central-difference check
  std::vector<double> eigenvalues;  // ascending
  int morse_index = 0;
  bool nondegenerate = false;
  double stability = 0.0;  // L(A)
  bool in_k_minus = false;
  std::optional<int> iota_infinity;
};

struct SearchResult {
  int m = 0;
  std::vector<ClassifiedCritical> criticals;
  int starts = 0;
  int converged = 0;
  int failed = 0;
  // Every converged start is degenerate (e.g. a translation-invariant F).
  bool degenerate_family = false;
  std::vector<std::string> notes;
};

// Index at infinity of a critical configuration in K^-_m: 3m - 1 - Morse index.
int iota_at_infinity(int m, int morse_index);

// Degeneracy threshold used by classify: tol_deg_rel * max(1, max |eig|).
double degeneracy_tolerance(const std::vector<double>& eigenvalues, double tol_deg_rel = 1e-6);

// Throws std::invalid_argument if |grad F(A)| >= tol_grad.
ClassifiedCritical classify(const KFunction& k, const Configuration& a, double tol_grad = 1e-8,
                            double tol_deg_rel = 1e-6);

// Levenberg-Marquardt on grad F = 0 from one start. Returns the refined
// configuration, or nothing on breakdown / non-convergence.
std::optional<Configuration> refine_critical(const KFunction& k, Configuration a, const SearchConfig& cfg,
                                             std::string* failure = nullptr);

SearchResult find_critical_points(const KFunction& k, int m, const SearchConfig& cfg);

// Points sorted lexicographically; the canonical representative of the
// permutation orbit.
Configuration canonical_order(const Configuration& a);
bool same_up_to_permutation(const Surface& s, const Configuration& a, const Configuration& b, double tol);
std::vector<ClassifiedCritical> dedupe(const Surface& s, std::vector<ClassifiedCritical> list, double tol_pos = 1e-5);

// Randomly shifted Halton starts with pairwise distance >= 2 eta.
std::vector<Configuration> multistart_points(const Surface& s, int m, int count, std::uint64_t seed);

}  // namespace barymorse
