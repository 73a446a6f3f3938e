#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "steep/multi_index.hpp"
#include "steep/rational.hpp"

namespace steep {

/// Parse failure with the byte offset where the problem was detected.
struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, size_t offset)
      : std::runtime_error(msg + " at offset " + std::to_string(offset)), offset(offset) {}
  size_t offset;
};

/// Multivariate polynomial with exact rational coefficients.
/// Invariants: every multi-index has exactly n entries, no stored
/// coefficient is zero, term order is lexicographic.
class Polynomial {
 public:
  explicit Polynomial(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("polynomial needs at least one variable");
  }

  int n() const { return n_; }
  const std::map<MultiIndex, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;

  void add_term(const MultiIndex& mu, const Rational& c);

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator-() const;
  Polynomial scaled(const Rational& c) const;

  /// Exact partial derivative with respect to variable i (1-based).
  Polynomial differentiate(int i) const;

  Rational eval(const std::vector<Rational>& point) const;
  double eval(const std::vector<double>& point) const;

  /// Canonical rendering; parse(to_string()) reproduces the polynomial.
  std::string to_string() const;

 private:
  int n_;
  std::map<MultiIndex, Rational> terms_;
};

/// Recursive-descent parser for the expression grammar:
///   expr   := ['-'] term (('+'|'-') term)*
///   term   := factor ('*' factor)*
///   factor := primary ('/' uint)*
///   primary:= coefficient | var ('^' uint)? | '(' expr ')'
///   var    := ('I'|'x') uint          (1-based, index <= n)
///   coefficient := uint | decimal
/// Whitespace is insignificant; implicit multiplication is a syntax error.
Polynomial parse_polynomial(const std::string& text, int n);

}  // namespace steep
