#pragma once

#include <optional>
#include <string>
#include <vector>

#include "barymorse/critical_search.hpp"
#include "barymorse/topology.hpp"

namespace barymorse {

// nu[i]: solutions of the mean field equation with Morse index i (may be
// empty when no solver data exists). nu_inf[q]: classified critical
// configurations in K^-_m with iota_infinity = q, q in [0, 3m-1].
struct IndexCounts {
  int m = 0;
  std::vector<long long> nu;
  std::vector<long long> nu_inf;
};

// Counts the nondegenerate K^-_m records; degenerate records are excluded
// and described in `caveats`.
IndexCounts counts_from_criticals(int m, const std::vector<ClassifiedCritical>& records, std::vector<long long> nu,
                                  std::vector<std::string>* caveats = nullptr);

struct InequalityVerdict {
  int k = 0;
  long long lhs = 0;  // nu_k + nu_inf_k
  long long rhs = 0;  // beta^{m-1}_{k-1}
  bool holds = true;
  long long margin = 0;
};

// Requires m >= 2 and the table of order m - 1. k runs over 2..N with
// N = max(3m - 1, nu.size() - 1).
std::vector<InequalityVerdict> check_inequalities(const IndexCounts& counts, const BettiTable& betti_m1);

struct EulerIdentity {
  long long lhs = 0;
  long long rhs = 0;
  long long residual = 0;
};

EulerIdentity euler_identity(const IndexCounts& counts, int chi);
long long solution_lower_bound(const IndexCounts& counts, int chi);

struct Certificate {
  std::string id;
  std::string status;  // "certified", "conditional" or "not evaluable"
  std::vector<std::string> hypotheses;
  std::string conclusion;
  std::vector<int> witness;  // indices q or record positions used
};

// `betti_m1` is the order m-1 table and may be absent; Betti numbers are
// then known only where they are forced (beta_0 = 1, zero above the top
// degree, nonzero in the top degree). `records` enables the certificates
// that need L(A) at minima and index-2 points.
std::vector<Certificate> existence_certificates(const IndexCounts& counts, const BettiTable* betti_m1,
                                                const std::vector<ClassifiedCritical>* records = nullptr);

struct MorseReport {
  int m = 0;
  int chi = 0;
  IndexCounts counts;
  bool inequalities_evaluable = false;
  std::vector<InequalityVerdict> inequalities;
  EulerIdentity euler;
  long long lower_bound = 0;
  std::vector<Certificate> certificates;
  std::vector<std::string> caveats;

  // True when a Betti table needed by the inequalities or a certificate
  // was absent.
  bool not_evaluable() const;
};

MorseReport build_morse_report(const IndexCounts& counts, int chi, const std::string& kind, const BettiStore& betti,
                               const std::vector<ClassifiedCritical>* records = nullptr,
                               std::vector<std::string> caveats = {});

}  // namespace barymorse
