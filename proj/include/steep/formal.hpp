#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "steep/jet.hpp"
#include "steep/rational.hpp"

namespace steep::formal {

/// Formal symbols: jet forms h^k[A^{i1},...,A^{ik}] on basis vectors of the
/// tangent subspace (index multiset stored sorted), and curve coefficients
/// b_{ij} (i >= 2 since x_1(t) = t has no free coefficients).
struct Symbol {
  enum class Kind { CurveCoeff, JetForm };
  Kind kind;
  int i = 0, j = 0;          // CurveCoeff b_{ij}
  int k = 0;                 // JetForm order
  std::vector<int> idx;      // JetForm basis indices, sorted, 1-based

  static Symbol curve(int i, int j) {
    Symbol s;
    s.kind = Kind::CurveCoeff;
    s.i = i;
    s.j = j;
    return s;
  }
  static Symbol form(int k, std::vector<int> idx);

  friend bool operator<(const Symbol& a, const Symbol& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.kind == Kind::CurveCoeff) return std::tie(a.i, a.j) < std::tie(b.i, b.j);
    return std::tie(a.k, a.idx) < std::tie(b.k, b.idx);
  }
  friend bool operator==(const Symbol& a, const Symbol& b) {
    return a.kind == b.kind && a.i == b.i && a.j == b.j && a.k == b.k && a.idx == b.idx;
  }
  std::string to_string() const;
};

using Monomial = std::vector<Symbol>;  // sorted product of symbols

/// Canonical-form polynomial over formal symbols: terms sorted, zero
/// coefficients dropped, equality is structural.
class FormalPolynomial {
 public:
  const std::map<Monomial, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  void add(const Rational& c, Monomial m);
  FormalPolynomial operator+(const FormalPolynomial& o) const;
  FormalPolynomial operator*(const FormalPolynomial& o) const;
  FormalPolynomial scaled(const Rational& c) const;

  static FormalPolynomial constant(const Rational& c);
  static FormalPolynomial symbol(Symbol s);

  /// Scales so the leading (first) coefficient is 1; canonical representative
  /// for comparison up to a nonzero scalar.
  FormalPolynomial normalized() const;

  std::string to_string() const;

 private:
  std::map<Monomial, Rational> terms_;
};

struct FormalEquation {
  FormalPolynomial poly;  // == 0
  int component = 0;      // which gradient component (1-based basis index)
  int tpower = 0;         // which power of t produced it (0 if not applicable)
};

/// A system of formal polynomial equations. For generated tangency systems
/// the equation count is m*(beta-1); the nondegeneracy/rank/orthogonality
/// side conditions are carried as metadata by convention, not as equations.
struct FormalSystem {
  int n = 0;
  int r = 0;
  int m = 0;
  int beta = 0;
  std::vector<FormalEquation> equations;
};

/// Builds the tangency system for an m-dimensional subspace: Taylor
/// polynomial of the restriction up to order beta_m, gradient along the
/// curve x_1 = t, x_i = sum_j b_ij t^j, coefficients of t^1..t^(beta_m - 1)
/// per component set to zero.
FormalSystem build_xi(int n, int r, int m);

/// Hand-transcribed expected systems for r = 5 (golden data for build_xi).
FormalSystem golden_xi(int n, int m);

/// The curve-parametrized defining systems of the closed sets Psi_m(n), and
/// their parameter-eliminated companions Psi*_m(n), for n = 3,4,5 and
/// 2 <= m <= n-1. Vector slots map to basis indices: v=A1, u=A2, w=A3, x=A4.
FormalSystem psi_system(int n, int m);
FormalSystem psi_star_system(int n, int m);

/// Curve-coefficient assignment for instantiation.
using BValues = std::map<std::pair<int, int>, double>;

/// Numeric residuals: every equation evaluated with JetForm -> multilinear
/// form on the given basis vectors and CurveCoeff -> assigned value.
std::vector<double> instantiate(const FormalSystem& sys, const Jet& jet,
                                const std::vector<std::vector<double>>& basis,
                                const BValues& b);

bool equal_up_to_scale(const FormalPolynomial& a, const FormalPolynomial& b);

std::string system_to_text(const FormalSystem& sys);
std::string system_to_json(const FormalSystem& sys);

struct EliminationReport {
  int requested = 0;
  int passes = 0;
  int failures = 0;
  int filtered = 0;  // deliberately invalid samples rejected by the residual filter
  double max_star_residual = 0;
};

/// Draws random solutions of the parametrized Psi_m(n) system (the defining
/// equations are linear in the jet entries once the curve parameters are
/// fixed) and checks that every Psi*_m(n) equation vanishes on them.
EliminationReport validate_elimination(int n, int m, int samples, unsigned long long seed);

}  // namespace steep::formal
