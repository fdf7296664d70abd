#pragma once

#include <optional>
#include <string>
#include <vector>

namespace barymorse {

// C(n, k) = n (n-1) ... (n-k+1) / k!, n any integer. Exact for |n|, k <= 64;
// throws std::overflow_error beyond int64.
long long gen_binomial(long long n, int k);

// Euler characteristic of the barycenter space of order m: 1 - C(m - chi, m).
long long euler_char_barycenter(int chi, int m);

// Z2 Betti numbers of the barycenter space of order m; beta has 3m entries.
struct BettiTable {
  std::string kind;
  int chi = 0;
  int m = 0;
  std::vector<long long> beta;

  // beta_i, zero outside [0, 3m-1].
  long long at(int i) const;
};

struct BettiCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<BettiCheck> validate_betti(const BettiTable& table);
bool betti_valid(const BettiTable& table);

class BettiStore {
 public:
  // Parses lines "kind chi m : b0 b1 ... b{3m-1}"; '#' starts a comment.
  // Malformed lines and tables failing validation are rejected with an
  // error naming the line.
  static BettiStore parse(const std::string& text, const std::string& origin = "<betti tables>");
  static BettiStore load(const std::string& path);
  static BettiStore bundled();

  std::optional<BettiTable> find(const std::string& kind, int m) const;
  // Throws std::out_of_range when the table is absent.
  BettiTable get(const std::string& kind, int m) const;
  const std::vector<BettiTable>& tables() const { return tables_; }

 private:
  std::vector<BettiTable> tables_;
};

}  // namespace barymorse
