#include "barymorse/morse_report.hpp"

#include <algorithm>
#include <stdexcept>

namespace barymorse {

namespace {

long long entry(const std::vector<long long>& v, int i) {
  return i >= 0 && i < int(v.size()) ? v[i] : 0;
}

std::string str(long long v) { return std::to_string(v); }

// What is known about beta^{m-1}_i without or with the table.
struct BettiFact {
  std::optional<long long> value;
  bool nonzero = false;
};

BettiFact betti_fact(const BettiTable* table, int order, int i) {
  BettiFact f;
  if (table) {
    f.value = table->at(i);
    f.nonzero = *f.value != 0;
    return f;
  }
  const int top = 3 * order - 1;
  if (i < 0 || i > top) {
    f.value = 0;
  } else if (i == 0) {
    f.value = 1;
    f.nonzero = true;
  } else if (i == top) {
    f.nonzero = true;
  }
  return f;
}

}  // namespace

IndexCounts counts_from_criticals(int m, const std::vector<ClassifiedCritical>& records, std::vector<long long> nu,
                                  std::vector<std::string>* caveats) {
  IndexCounts c;
  c.m = m;
  c.nu = std::move(nu);
  c.nu_inf.assign(3 * m, 0);
  int degenerate = 0;
  for (const auto& r : records) {
    if (int(r.points.size()) != m) throw std::invalid_argument("counts_from_criticals: record with wrong m");
    if (!r.nondegenerate) {
      ++degenerate;
      continue;
    }
    if (r.in_k_minus && r.iota_infinity) ++c.nu_inf.at(*r.iota_infinity);
  }
  if (caveats && degenerate > 0)
    caveats->push_back(str(degenerate) + " degenerate critical configuration(s) excluded from nu_inf; "
                       "the nondegeneracy hypothesis fails for this K");
  return c;
}

std::vector<InequalityVerdict> check_inequalities(const IndexCounts& c, const BettiTable& b) {
  if (c.m < 2) throw std::invalid_argument("check_inequalities: m must be >= 2");
  if (b.m != c.m - 1) throw std::invalid_argument("check_inequalities: Betti table must have order m - 1");
  const int nbar = std::max(3 * c.m - 1, int(c.nu.size()) - 1);
  std::vector<InequalityVerdict> out;
  for (int k = 2; k <= nbar; ++k) {
    InequalityVerdict v;
    v.k = k;
    v.lhs = entry(c.nu, k) + entry(c.nu_inf, k);
    v.rhs = b.at(k - 1);
    v.margin = v.lhs - v.rhs;
    v.holds = v.margin >= 0;
    out.push_back(v);
  }
  return out;
}

EulerIdentity euler_identity(const IndexCounts& c, int chi) {
  if (c.m < 1) throw std::invalid_argument("euler_identity: m must be >= 1");
  EulerIdentity e;
  for (int i = 0; i < int(c.nu.size()); ++i) e.lhs += (i % 2 == 0 ? 1 : -1) * c.nu[i];
  for (int q = 0; q < int(c.nu_inf.size()); ++q) e.lhs += (q % 2 == 0 ? 1 : -1) * c.nu_inf[q];
  e.rhs = gen_binomial(c.m - 1 - chi, c.m - 1);
  e.residual = e.lhs - e.rhs;
  return e;
}

long long solution_lower_bound(const IndexCounts& c, int chi) {
  long long s = 0;
  for (int q = 0; q < int(c.nu_inf.size()); ++q) s += (q % 2 == 0 ? 1 : -1) * c.nu_inf[q];
  const long long d = gen_binomial(c.m - 1 - chi, c.m - 1) - s;
  return d < 0 ? -d : d;
}

std::vector<Certificate> existence_certificates(const IndexCounts& c, const BettiTable* b,
                                                const std::vector<ClassifiedCritical>* records) {
  const int m = c.m;
  std::vector<Certificate> out;
  if (b && b->m != m - 1) throw std::invalid_argument("existence_certificates: Betti table must have order m - 1");
  auto ninf = [&](int q) { return entry(c.nu_inf, q); };
  const std::string order = "beta^{" + str(m - 1) + "}_";

  if (m >= 2) {
    // No critical point at infinity of index q0 while beta_{q0-1} != 0.
    for (int q0 = 2; q0 <= 3 * m - 3; ++q0) {
      if (ninf(q0) != 0) continue;
      const BettiFact f = betti_fact(b, m - 1, q0 - 1);
      Certificate cert;
      cert.id = "missing_index_at_infinity";
      cert.witness = {q0};
      cert.hypotheses.push_back("nu_inf_" + str(q0) + " = 0");
      if (f.value && *f.value == 0) continue;
      if (!f.value && !f.nonzero) {
        cert.status = "not evaluable";
        cert.hypotheses.push_back(order + str(q0 - 1) + " != 0 (table of order " + str(m - 1) + " absent)");
        cert.conclusion = "undecided";
        out.push_back(cert);
        continue;
      }
      cert.status = "certified";
      cert.hypotheses.push_back(order + str(q0 - 1) + (f.value ? " = " + str(*f.value) : " != 0 (top degree)"));
      cert.conclusion = "at least one solution with Morse index " + str(q0);
      if (q0 == 3 * m - 3) {
        if (f.value)
          cert.conclusion += "; at least " + str(*f.value) + " solutions";
        else
          cert.conclusion += "; multiplicity bound needs the order " + str(m - 1) + " table";
      }
      out.push_back(cert);
    }

    // A critical point at infinity of index q0 with empty neighbouring indices.
    for (int q0 = 0; q0 < int(c.nu_inf.size()); ++q0) {
      if (ninf(q0) < 1 || ninf(q0 - 1) != 0 || ninf(q0 + 1) != 0) continue;
      const BettiFact f = betti_fact(b, m - 1, q0 - 1);
      if (f.nonzero) continue;
      Certificate cert;
      cert.id = (m == 4 && q0 == 3) ? "isolated_local_maximum_at_infinity" : "isolated_index_at_infinity";
      cert.witness = {q0};
      cert.hypotheses = {"nu_inf_" + str(q0) + " = " + str(ninf(q0)),
                         "nu_inf_" + str(q0 - 1) + " = nu_inf_" + str(q0 + 1) + " = 0"};
      if (!f.value) {
        cert.status = "not evaluable";
        cert.hypotheses.push_back(order + str(q0 - 1) + " = 0 (table of order " + str(m - 1) + " absent)");
        cert.conclusion = "undecided";
      } else {
        cert.status = "certified";
        cert.hypotheses.push_back(order + str(q0 - 1) + " = 0");
        cert.conclusion = "at least one solution";
      }
      out.push_back(cert);
    }

    const int t1 = 3 * m - 1, t2 = 3 * m - 2, t3 = 3 * m - 3;
    if (ninf(t2) < ninf(t1)) {
      out.push_back({"top_pair_inequality_violated", "certified",
                     {"nu_inf_" + str(t2) + " = " + str(ninf(t2)) + " < nu_inf_" + str(t1) + " = " + str(ninf(t1))},
                     "at least one solution",
                     {t2, t1}});
    }
    const long long d = ninf(t2) - ninf(t1);
    const BettiFact f = betti_fact(b, m - 1, 3 * m - 4);
    const std::string lhs = "nu_inf_" + str(t3) + " - " + order + str(3 * m - 4);
    if (f.value) {
      if (ninf(t3) - *f.value < d)
        out.push_back({"second_inequality_violated", "certified",
                       {lhs + " = " + str(ninf(t3) - *f.value) + " < nu_inf_" + str(t2) + " - nu_inf_" + str(t1) +
                        " = " + str(d)},
                       "at least one solution",
                       {t3, t2, t1}});
    } else if (ninf(t3) - 1 < d) {
      out.push_back({"second_inequality_violated", "certified",
                     {lhs + " <= " + str(ninf(t3) - 1) + " < " + str(d) + " (beta >= 1 in the top degree)"},
                     "at least one solution",
                     {t3, t2, t1}});
    } else {
      out.push_back({"second_inequality_violated", "not evaluable",
                     {lhs + " vs " + str(d) + " (table of order " + str(m - 1) + " absent)"},
                     "undecided",
                     {t3, t2, t1}});
    }
  }

  if (records && !records->empty()) {
    const bool all_nondeg = std::all_of(records->begin(), records->end(), [](const ClassifiedCritical& r) {
      return r.nondegenerate && r.stability != 0.0;
    });
    if (all_nondeg) {
      std::vector<int> minima, index2;
      bool minima_negative = true, index2_positive = true;
      for (int i = 0; i < int(records->size()); ++i) {
        const auto& r = (*records)[i];
        if (r.morse_index == 0) {
          minima.push_back(i);
          minima_negative = minima_negative && r.stability < 0.0;
        }
        if (r.morse_index == 2) {
          index2.push_back(i);
          index2_positive = index2_positive && r.stability > 0.0;
        }
      }
      if (!minima.empty() && minima_negative)
        out.push_back({"negative_stability_at_all_minima", "conditional",
                       {"L(A) < 0 at all " + str(minima.size()) + " local minima found",
                        "conditional on search completeness"},
                       "at least one solution with generalized Morse index " + str(3 * m),
                       minima});
      if (m >= 2 && index2_positive)
        out.push_back({"positive_stability_at_index_two", "conditional",
                       {index2.empty() ? std::string("no critical point of Morse index 2 found (vacuous)")
                                       : "L(A) > 0 at all " + str(index2.size()) + " index-2 points found",
                        "conditional on search completeness"},
                       "at least one solution with generalized Morse index " + str(3 * m - 3),
                       index2});
    }
  }
  return out;
}

bool MorseReport::not_evaluable() const {
  if (m >= 2 && !inequalities_evaluable) return true;
  return std::any_of(certificates.begin(), certificates.end(),
                     [](const Certificate& c) { return c.status == "not evaluable"; });
}

MorseReport build_morse_report(const IndexCounts& counts, int chi, const std::string& kind, const BettiStore& betti,
                               const std::vector<ClassifiedCritical>* records, std::vector<std::string> caveats) {
  MorseReport r;
  r.m = counts.m;
  r.chi = chi;
  r.counts = counts;
  r.counts.nu_inf.resize(std::max<std::size_t>(r.counts.nu_inf.size(), std::size_t(3 * counts.m)), 0);
  r.caveats = std::move(caveats);
  std::optional<BettiTable> b;
  if (counts.m >= 2) {
    b = betti.find(kind, counts.m - 1);
    if (b) {
      r.inequalities = check_inequalities(r.counts, *b);
      r.inequalities_evaluable = true;
    } else {
      r.caveats.push_back("no Betti table of order " + str(counts.m - 1) + " for " + kind +
                          ": inequalities not evaluable");
    }
  }
  r.euler = euler_identity(r.counts, chi);
  r.lower_bound = solution_lower_bound(r.counts, chi);
  r.certificates = existence_certificates(r.counts, b ? &*b : nullptr, records);
  if (r.counts.nu.empty()) r.caveats.push_back("no solver data: nu = 0 assumed in the inequalities and Euler sum");
  r.caveats.push_back("nondegeneracy of the solutions of the mean field equation is assumed, not verified");
  return r;
}

}  // namespace barymorse
