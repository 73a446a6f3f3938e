#pragma once

#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace steep {

/// Exponent multi-index over n variables. Ordering is lexicographic, which
/// doubles as the canonical term order everywhere in this project.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> entries) : e_(std::move(entries)) {}
  static MultiIndex zeros(int n) { return MultiIndex(std::vector<int>(n, 0)); }
  static MultiIndex unit(int n, int i) {  // i is 0-based
    std::vector<int> e(n, 0);
    e[i] = 1;
    return MultiIndex(std::move(e));
  }

  int size() const { return static_cast<int>(e_.size()); }
  int operator[](int i) const { return e_[i]; }
  int& operator[](int i) { return e_[i]; }
  int degree() const { return std::accumulate(e_.begin(), e_.end(), 0); }
  const std::vector<int>& entries() const { return e_; }

  MultiIndex plus(int i) const {
    MultiIndex r = *this;
    r.e_[i] += 1;
    return r;
  }
  MultiIndex minus(int i) const {
    MultiIndex r = *this;
    r.e_[i] -= 1;
    return r;
  }

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) { return a.e_ == b.e_; }
  friend bool operator!=(const MultiIndex& a, const MultiIndex& b) { return a.e_ != b.e_; }
  friend bool operator<(const MultiIndex& a, const MultiIndex& b) { return a.e_ < b.e_; }

  std::string to_string() const {
    std::string s = "(";
    for (int i = 0; i < size(); ++i) {
      if (i) s += ",";
      s += std::to_string(e_[i]);
    }
    return s + ")";
  }

  /// All multi-indices over n variables with |mu| == k, lexicographic order.
  static std::vector<MultiIndex> all_of_degree(int n, int k) {
    std::vector<MultiIndex> out;
    std::vector<int> cur(n, 0);
    std::function<void(int, int)> rec = [&](int pos, int left) {
      if (pos == n - 1) {
        cur[pos] = left;
        out.emplace_back(cur);
        return;
      }
      for (int v = left; v >= 0; --v) {
        cur[pos] = v;
        rec(pos + 1, left - v);
      }
    };
    if (n > 0) rec(0, k);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// mu! = prod mu_i!
  long long factorial_product() const {
    long long f = 1;
    for (int v : e_)
      for (int j = 2; j <= v; ++j) f *= j;
    return f;
  }

 private:
  std::vector<int> e_;
};

inline long long factorial(int k) {
  long long f = 1;
  for (int j = 2; j <= k; ++j) f *= j;
  return f;
}

}  // namespace steep
