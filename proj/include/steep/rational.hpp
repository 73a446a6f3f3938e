#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace steep {

/// Exact rational arithmetic over 128-bit integers.
///
/// Coefficient work (parsing, differentiation, jet extraction at rational
/// points) stays exact; anything that leaves this range throws instead of
/// silently losing precision. 128 bits is ample for five-fold products of
/// the coefficient sizes this tool works with.
class Rational {
 public:
  using Int = __int128;

  Rational() : num_(0), den_(1) {}
  Rational(long long n) : num_(n), den_(1) {}  // NOLINT: implicit by design
  Rational(long long n, long long d) : num_(n), den_(d) { normalize(); }

  static Rational from_int128(Int n, Int d) {
    Rational r;
    r.num_ = n;
    r.den_ = d;
    r.normalize();
    return r;
  }

  Int num() const { return num_; }
  Int den() const { return den_; }
  bool is_zero() const { return num_ == 0; }
  bool is_negative() const { return num_ < 0; }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return from_int128(checked_add(checked_mul(a.num_, b.den_), checked_mul(b.num_, a.den_)),
                       checked_mul(a.den_, b.den_));
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return from_int128(checked_sub(checked_mul(a.num_, b.den_), checked_mul(b.num_, a.den_)),
                       checked_mul(a.den_, b.den_));
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return from_int128(checked_mul(a.num_, b.num_), checked_mul(a.den_, b.den_));
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return from_int128(checked_mul(a.num_, b.den_), checked_mul(a.den_, b.num_));
  }
  Rational operator-() const { return from_int128(-num_, den_); }
  Rational& operator+=(const Rational& b) { return *this = *this + b; }
  Rational& operator-=(const Rational& b) { return *this = *this - b; }
  Rational& operator*=(const Rational& b) { return *this = *this * b; }
  Rational& operator/=(const Rational& b) { return *this = *this / b; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return checked_mul(a.num_, b.den_) < checked_mul(b.num_, a.den_);
  }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

  double to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  std::string to_string() const {
    std::string s = int128_to_string(num_);
    if (den_ != 1) s += "/" + int128_to_string(den_);
    return s;
  }

  /// Parses "n", "n/d" or a plain decimal like "1.25" / "-0.5". Exact.
  static Rational parse(const std::string& text);

  static std::string int128_to_string(Int v) {
    if (v == 0) return "0";
    bool neg = v < 0;
    unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : v;
    std::string out;
    while (u > 0) {
      out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(u % 10)));
      u /= 10;
    }
    return neg ? "-" + out : out;
  }

 private:
  static Int checked_mul(Int a, Int b) {
    Int r;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("rational overflow (mul)");
    return r;
  }
  static Int checked_add(Int a, Int b) {
    Int r;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("rational overflow (add)");
    return r;
  }
  static Int checked_sub(Int a, Int b) {
    Int r;
    if (__builtin_sub_overflow(a, b, &r)) throw std::overflow_error("rational overflow (sub)");
    return r;
  }
  static Int gcd128(Int a, Int b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      Int t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  void normalize() {
    if (den_ == 0) throw std::domain_error("rational with zero denominator");
    if (num_ == 0) {
      den_ = 1;
      return;
    }
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    Int g = gcd128(num_, den_);
    num_ /= g;
    den_ /= g;
  }

  Int num_;
  Int den_;
};

inline Rational Rational::parse(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty rational literal");
  auto slash = text.find('/');
  auto parse_int = [](const std::string& s) -> Int {
    if (s.empty()) throw std::invalid_argument("empty integer literal");
    size_t i = 0;
    bool neg = false;
    if (s[i] == '+' || s[i] == '-') {
      neg = s[i] == '-';
      ++i;
    }
    if (i == s.size()) throw std::invalid_argument("malformed integer literal");
    Int v = 0;
    for (; i < s.size(); ++i) {
      if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("malformed integer literal");
      Int nv;
      if (__builtin_mul_overflow(v, (Int)10, &nv) ||
          __builtin_add_overflow(nv, (Int)(s[i] - '0'), &nv))
        throw std::overflow_error("integer literal out of range");
      v = nv;
    }
    return neg ? -v : v;
  };
  if (slash != std::string::npos) {
    return from_int128(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
  }
  auto dot = text.find('.');
  if (dot == std::string::npos) return from_int128(parse_int(text), 1);
  std::string whole = text.substr(0, dot);
  std::string frac = text.substr(dot + 1);
  if (frac.empty()) throw std::invalid_argument("malformed decimal literal");
  bool neg = !whole.empty() && whole[0] == '-';
  if (whole == "-" || whole == "+" || whole.empty()) whole += "0";
  Int scale = 1;
  for (size_t i = 0; i < frac.size(); ++i) {
    if (__builtin_mul_overflow(scale, (Int)10, &scale))
      throw std::overflow_error("decimal literal out of range");
  }
  Int w = parse_int(whole);
  Int f = parse_int(frac);
  if (f < 0) throw std::invalid_argument("malformed decimal literal");
  Int n;
  if (__builtin_mul_overflow(w, scale, &n)) throw std::overflow_error("decimal literal out of range");
  n = neg ? n - f : n + f;
  return from_int128(n, scale);
}

}  // namespace steep
