#include "barymorse/topology.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "betti_default.hpp"

namespace barymorse {

long long gen_binomial(long long n, int k) {
  if (k < 0) throw std::invalid_argument("gen_binomial: k must be >= 0");
  // C(n, i+1) = C(n, i) (n - i) / (i + 1) stays integral at every step.
  __int128 c = 1;
  for (int i = 0; i < k; ++i) {
    c = c * (n - i) / (i + 1);
    if (c > __int128(INT64_MAX) || c < __int128(INT64_MIN)) throw std::overflow_error("gen_binomial: overflow");
  }
  return static_cast<long long>(c);
}

long long euler_char_barycenter(int chi, int m) {
  if (m < 1) throw std::invalid_argument("euler_char_barycenter: m must be >= 1");
  return 1 - gen_binomial(m - chi, m);
}

long long BettiTable::at(int i) const {
  if (i < 0 || i >= int(beta.size())) return 0;
  return beta[i];
}

std::vector<BettiCheck> validate_betti(const BettiTable& t) {
  std::vector<BettiCheck> out;
  auto add = [&](std::string name, bool pass, std::string detail) {
    out.push_back({std::move(name), pass, std::move(detail)});
  };
  const int top = 3 * t.m - 1;
  add("order", t.m >= 1, "m = " + std::to_string(t.m));
  add("length", int(t.beta.size()) == 3 * t.m,
      std::to_string(t.beta.size()) + " entries, expected 3m = " + std::to_string(3 * t.m));
  bool nonneg = true;
  for (long long b : t.beta) nonneg = nonneg && b >= 0;
  add("nonnegative", nonneg, "");
  add("connected", t.at(0) == 1, "beta_0 = " + std::to_string(t.at(0)));
  add("top_degree", t.at(top) >= 1, "beta_" + std::to_string(top) + " = " + std::to_string(t.at(top)));
  if (t.m >= 2)
    add("degree_3m-4", t.at(3 * t.m - 4) >= 1,
        "beta_" + std::to_string(3 * t.m - 4) + " = " + std::to_string(t.at(3 * t.m - 4)));
  if (t.m >= 1) {
    long long alt = 0;
    for (int i = 0; i < int(t.beta.size()); ++i) alt += (i % 2 == 0 ? 1 : -1) * t.beta[i];
    const long long want = euler_char_barycenter(t.chi, t.m);
    add("euler_characteristic", alt == want,
        "alternating sum " + std::to_string(alt) + ", expected " + std::to_string(want));
  }
  return out;
}

bool betti_valid(const BettiTable& t) {
  for (const auto& c : validate_betti(t))
    if (!c.pass) return false;
  return true;
}

BettiStore BettiStore::parse(const std::string& text, const std::string& origin) {
  BettiStore store;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw std::runtime_error(where + ": expected 'kind chi m : b0 ...'");
    BettiTable t;
    std::istringstream head(line.substr(0, colon)), body(line.substr(colon + 1));
    std::string extra;
    if (!(head >> t.kind >> t.chi >> t.m) || (head >> extra))
      throw std::runtime_error(where + ": header must be 'kind chi m'");
    long long b;
    while (body >> b) t.beta.push_back(b);
    if (!body.eof()) throw std::runtime_error(where + ": non-integer Betti entry");
    for (const auto& c : validate_betti(t))
      if (!c.pass) throw std::runtime_error(where + ": table fails check '" + c.name + "' (" + c.detail + ")");
    if (store.find(t.kind, t.m)) throw std::runtime_error(where + ": duplicate table");
    store.tables_.push_back(std::move(t));
  }
  return store;
}

BettiStore BettiStore::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open Betti table file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path);
}

BettiStore BettiStore::bundled() { return parse(detail::kDefaultBettiTables, "bundled"); }

std::optional<BettiTable> BettiStore::find(const std::string& kind, int m) const {
  for (const auto& t : tables_)
    if (t.kind == kind && t.m == m) return t;
  return std::nullopt;
}

BettiTable BettiStore::get(const std::string& kind, int m) const {
  if (auto t = find(kind, m)) return *t;
  throw std::out_of_range("no Betti table for " + kind + " of order " + std::to_string(m));
}

}  // namespace barymorse
