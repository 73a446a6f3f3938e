#pragma once

#include <stdexcept>
#include <vector>

namespace steep {

/// Upper bound for the steepness indices on m-dimensional subspaces at jet
/// order r; always an odd positive integer (or 1), so beta_m below is a
/// positive integer.
inline long long alpha_bar(int n, int r, int m) {
  if (n < 2 || r < 2 || m < 1 || m > n - 1) throw std::invalid_argument("invalid (n, r, m)");
  long long base = 2LL * r - 3;
  long long corr;
  if (n % 2 == 0) {
    corr = static_cast<long long>(n) * (n - 2) / 2;
  } else {
    corr = static_cast<long long>(n - 1) * (n - 1) / 2;
  }
  long long v = base - corr + 2LL * m * (n - m - 1);
  return v < 1 ? 1 : v;
}

inline long long beta_m(int n, int r, int m) {
  long long a = alpha_bar(n, r, m);
  if ((a + 3) % 2 != 0) throw std::logic_error("beta_m is not an integer");
  return (a + 3) / 2;
}

/// Lower bound for the codimension of the closed bad set at order r.
inline long long codim_lower_bound(int n, int r) {
  if (n < 2 || r < 2) throw std::invalid_argument("invalid (n, r)");
  long long num = (n % 2 == 0) ? static_cast<long long>(n) * (n - 2)
                               : static_cast<long long>(n - 1) * (n - 1);
  if (num % 4 != 0) throw std::logic_error("codimension correction is not an integer");
  long long v = r - 1 - num / 4;
  return v < 0 ? 0 : v;
}

struct IndexTable {
  int n = 0;
  int r = 0;
  std::vector<long long> alpha;  // alpha[m-1], m = 1..n-1
  std::vector<long long> beta;   // beta[m-1]
  long long codim = 0;
};

inline IndexTable index_table(int n, int r) {
  IndexTable t;
  t.n = n;
  t.r = r;
  for (int m = 1; m <= n - 1; ++m) {
    t.alpha.push_back(alpha_bar(n, r, m));
    t.beta.push_back(beta_m(n, r, m));
  }
  t.codim = codim_lower_bound(n, r);
  return t;
}

}  // namespace steep
