#include "steep/polynomial.hpp"

#include <cctype>

namespace steep {

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [mu, c] : terms_) d = std::max(d, mu.degree());
  return d;
}

void Polynomial::add_term(const MultiIndex& mu, const Rational& c) {
  if (mu.size() != n_) throw std::invalid_argument("multi-index size mismatch");
  for (int i = 0; i < n_; ++i)
    if (mu[i] < 0) throw std::invalid_argument("negative exponent");
  if (c.is_zero()) return;
  auto it = terms_.find(mu);
  if (it == terms_.end()) {
    terms_.emplace(mu, c);
  } else {
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
  }
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  if (o.n_ != n_) throw std::invalid_argument("variable count mismatch");
  Polynomial r = *this;
  for (const auto& [mu, c] : o.terms_) r.add_term(mu, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + (-o); }

Polynomial Polynomial::operator-() const {
  Polynomial r(n_);
  for (const auto& [mu, c] : terms_) r.terms_.emplace(mu, -c);
  return r;
}

Polynomial Polynomial::scaled(const Rational& c) const {
  Polynomial r(n_);
  if (c.is_zero()) return r;
  for (const auto& [mu, k] : terms_) r.terms_.emplace(mu, k * c);
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (o.n_ != n_) throw std::invalid_argument("variable count mismatch");
  Polynomial r(n_);
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : o.terms_) {
      std::vector<int> e(n_);
      for (int i = 0; i < n_; ++i) e[i] = ma[i] + mb[i];
      r.add_term(MultiIndex(std::move(e)), ca * cb);
    }
  }
  return r;
}

Polynomial Polynomial::differentiate(int i) const {
  if (i < 1 || i > n_) throw std::out_of_range("variable index out of range");
  int k = i - 1;
  Polynomial r(n_);
  for (const auto& [mu, c] : terms_) {
    if (mu[k] == 0) continue;
    r.add_term(mu.minus(k), c * Rational(mu[k]));
  }
  return r;
}

Rational Polynomial::eval(const std::vector<Rational>& point) const {
  if (static_cast<int>(point.size()) != n_) throw std::invalid_argument("point dimension mismatch");
  Rational acc(0);
  for (const auto& [mu, c] : terms_) {
    Rational t = c;
    for (int i = 0; i < n_; ++i)
      for (int p = 0; p < mu[i]; ++p) t *= point[i];
    acc += t;
  }
  return acc;
}

double Polynomial::eval(const std::vector<double>& point) const {
  if (static_cast<int>(point.size()) != n_) throw std::invalid_argument("point dimension mismatch");
  double acc = 0;
  for (const auto& [mu, c] : terms_) {
    double t = c.to_double();
    for (int i = 0; i < n_; ++i)
      for (int p = 0; p < mu[i]; ++p) t *= point[i];
    acc += t;
  }
  return acc;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [mu, c] : terms_) {
    Rational a = c;
    if (first) {
      if (a.is_negative()) {
        out += "-";
        a = -a;
      }
    } else {
      out += a.is_negative() ? " - " : " + ";
      if (a.is_negative()) a = -a;
    }
    first = false;
    std::string vars;
    for (int i = 0; i < n_; ++i) {
      if (mu[i] == 0) continue;
      if (!vars.empty()) vars += "*";
      vars += "I" + std::to_string(i + 1);
      if (mu[i] > 1) vars += "^" + std::to_string(mu[i]);
    }
    std::string num = Rational::int128_to_string(a.num());
    std::string den = a.den() == 1 ? "" : "/" + Rational::int128_to_string(a.den());
    if (vars.empty()) {
      out += num + den;
    } else if (a.num() == 1 && a.den() == 1) {
      out += vars;
    } else if (a.num() == 1) {
      out += vars + den;
    } else {
      out += num + "*" + vars + den;
    }
  }
  return out;
}

namespace {

class Parser {
 public:
  Parser(const std::string& text, int n) : s_(text), n_(n) {}

  Polynomial run() {
    Polynomial p = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) { throw ParseError("syntax error: " + msg, pos_); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  long long uint_lit() {
    skip_ws();
    if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_])))
      fail("expected integer");
    long long v = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      v = v * 10 + (s_[pos_] - '0');
      if (v > (1LL << 60)) fail("integer literal too large");
      ++pos_;
    }
    return v;
  }

  Polynomial expr() {
    bool neg = eat('-');
    Polynomial acc = term();
    if (neg) acc = -acc;
    for (;;) {
      if (eat('+')) {
        acc = acc + term();
      } else if (eat('-')) {
        acc = acc - term();
      } else {
        return acc;
      }
    }
  }

  Polynomial term() {
    Polynomial acc = factor();
    while (eat('*')) acc = acc * factor();
    return acc;
  }

  Polynomial factor() {
    Polynomial acc = primary();
    while (eat('/')) {
      skip_ws();
      size_t at = pos_;
      long long d = uint_lit();
      if (d == 0) throw ParseError("syntax error: division by zero", at);
      acc = acc.scaled(Rational(1, d));
    }
    return acc;
  }

  Polynomial primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("expected operand");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial p = expr();
      if (!eat(')')) fail("expected ')'");
      return p;
    }
    if (c == 'I' || c == 'x') {
      ++pos_;
      size_t at = pos_;
      long long idx = uint_lit();
      if (idx < 1 || idx > n_)
        throw ParseError("variable index out of range (n=" + std::to_string(n_) + ")", at);
      int exp = 1;
      if (eat('^')) {
        long long e = uint_lit();
        if (e > 64) fail("exponent too large");
        exp = static_cast<int>(e);
      }
      Polynomial p(n_);
      std::vector<int> mu(n_, 0);
      mu[idx - 1] = exp;
      p.add_term(MultiIndex(std::move(mu)), Rational(1));
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
        ++pos_;
      Rational v;
      try {
        v = Rational::parse(s_.substr(start, pos_ - start));
      } catch (const std::exception&) {
        pos_ = start;
        fail("malformed number");
      }
      Polynomial p(n_);
      p.add_term(MultiIndex::zeros(n_), v);
      return p;
    }
    fail("expected operand");
  }

  const std::string& s_;
  int n_;
  size_t pos_ = 0;
};

}  // namespace

Polynomial parse_polynomial(const std::string& text, int n) {
  if (n < 1) throw std::invalid_argument("polynomial needs at least one variable");
  return Parser(text, n).run();
}

}  // namespace steep
