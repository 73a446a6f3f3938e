#include "steep/examples.hpp"

namespace steep::examples {

namespace {
MultiIndex mi(std::vector<int> e) { return MultiIndex(std::move(e)); }
}  // namespace

Polynomial example1() {
  Polynomial p(4);
  p.add_term(mi({0, 5, 0, 0}), Rational(1, 5));
  p.add_term(mi({3, 0, 0, 0}), Rational(1, 3));
  p.add_term(mi({2, 0, 0, 0}), Rational(-1, 2));
  p.add_term(mi({1, 1, 0, 0}), Rational(1, 2));
  p.add_term(mi({0, 0, 2, 0}), Rational(-1, 2));
  p.add_term(mi({0, 0, 0, 1}), Rational(-1));
  return p;
}

Polynomial example2() {
  Polynomial p(5);
  p.add_term(mi({0, 0, 0, 4, 0}), Rational(1, 4));
  p.add_term(mi({0, 0, 0, 0, 4}), Rational(1, 4));
  p.add_term(mi({0, 0, 3, 0, 0}), Rational(1, 3));
  p.add_term(mi({0, 2, 1, 0, 0}), Rational(1, 2));
  p.add_term(mi({2, 0, 0, 0, 0}), Rational(-1, 2));
  p.add_term(mi({0, 0, 2, 0, 0}), Rational(-1, 2));
  p.add_term(mi({0, 0, 0, 0, 2}), Rational(-1, 2));
  p.add_term(mi({0, 0, 1, 1, 0}), Rational(1));
  p.add_term(mi({0, 1, 0, 0, 0}), Rational(1));
  return p;
}

Polynomial example3_member(long long k) {
  if (k < 1) throw std::invalid_argument("family index must be positive");
  Polynomial p(3);
  p.add_term(mi({4, 0, 0}), Rational(1, 8));
  p.add_term(mi({0, 4, 0}), Rational(1, 8));
  p.add_term(mi({0, 0, 4}), Rational(-1, 24 * k));
  p.add_term(mi({2, 1, 0}), Rational(-1, 2 * k));
  p.add_term(mi({1, 2, 0}), Rational(-1, 2 * k));
  p.add_term(mi({0, 2, 0}), Rational(1, 2 * k * k));
  p.add_term(mi({0, 0, 1}), Rational(1));
  return p;
}

Polynomial example3_limit() {
  Polynomial p(3);
  p.add_term(mi({4, 0, 0}), Rational(1, 16));
  p.add_term(mi({0, 4, 0}), Rational(1, 16));
  p.add_term(mi({0, 0, 1}), Rational(1));
  return p;
}

}  // namespace steep::examples
