#include "steep/formal.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "json.hpp"
#include "steep/indices.hpp"
#include "steep/rng.hpp"

namespace steep::formal {

Symbol Symbol::form(int k, std::vector<int> idx) {
  Symbol s;
  s.kind = Kind::JetForm;
  s.k = k;
  std::sort(idx.begin(), idx.end());
  s.idx = std::move(idx);
  if (static_cast<int>(s.idx.size()) != k) throw std::invalid_argument("form arity mismatch");
  return s;
}

std::string Symbol::to_string() const {
  if (kind == Kind::CurveCoeff) return "b" + std::to_string(i) + std::to_string(j);
  std::string s = "h" + std::to_string(k) + "[";
  for (size_t t = 0; t < idx.size(); ++t) {
    if (t) s += ",";
    s += std::to_string(idx[t]);
  }
  return s + "]";
}

void FormalPolynomial::add(const Rational& c, Monomial m) {
  if (c.is_zero()) return;
  std::sort(m.begin(), m.end());
  auto it = terms_.find(m);
  if (it == terms_.end()) {
    terms_.emplace(std::move(m), c);
  } else {
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
  }
}

FormalPolynomial FormalPolynomial::operator+(const FormalPolynomial& o) const {
  FormalPolynomial r = *this;
  for (const auto& [m, c] : o.terms_) r.add(c, m);
  return r;
}

FormalPolynomial FormalPolynomial::operator*(const FormalPolynomial& o) const {
  FormalPolynomial r;
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : o.terms_) {
      Monomial m = ma;
      m.insert(m.end(), mb.begin(), mb.end());
      r.add(ca * cb, std::move(m));
    }
  }
  return r;
}

FormalPolynomial FormalPolynomial::scaled(const Rational& c) const {
  FormalPolynomial r;
  if (c.is_zero()) return r;
  for (const auto& [m, k] : terms_) r.terms_.emplace(m, k * c);
  return r;
}

FormalPolynomial FormalPolynomial::constant(const Rational& c) {
  FormalPolynomial r;
  r.add(c, {});
  return r;
}

FormalPolynomial FormalPolynomial::symbol(Symbol s) {
  FormalPolynomial r;
  r.add(Rational(1), {std::move(s)});
  return r;
}

FormalPolynomial FormalPolynomial::normalized() const {
  if (terms_.empty()) return *this;
  Rational lead = terms_.begin()->second;
  return scaled(Rational(1) / lead);
}

std::string FormalPolynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : terms_) {
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
    std::string factors;
    for (const auto& s : m) {
      if (!factors.empty()) factors += "*";
      factors += s.to_string();
    }
    bool unit = (a == Rational(1));
    if (factors.empty()) {
      out += a.to_string();
    } else if (unit) {
      out += factors;
    } else {
      out += a.to_string() + "*" + factors;
    }
  }
  return out;
}

bool equal_up_to_scale(const FormalPolynomial& a, const FormalPolynomial& b) {
  if (a.is_zero() || b.is_zero()) return a.is_zero() == b.is_zero();
  return a.normalized().terms() == b.normalized().terms();
}

// ---------------------------------------------------------------------------
// Mechanical construction

FormalSystem build_xi(int n, int r, int m) {
  if (n < 2 || m < 1 || m > n - 1 || r < 2) throw std::invalid_argument("invalid (n, r, m)");
  const int beta = static_cast<int>(beta_m(n, r, m));

  // Taylor polynomial of the restriction in subspace coordinates x_1..x_m:
  // coefficient of x^mu is (1/mu!) h^{|mu|}[basis multiset of mu].
  std::map<MultiIndex, FormalPolynomial> taylor;
  for (int k = 1; k <= beta; ++k) {
    for (const auto& mu : MultiIndex::all_of_degree(m, k)) {
      std::vector<int> idx;
      for (int i = 0; i < m; ++i)
        for (int c = 0; c < mu[i]; ++c) idx.push_back(i + 1);
      taylor.emplace(mu, FormalPolynomial::symbol(Symbol::form(k, idx))
                             .scaled(Rational(1, mu.factorial_product())));
    }
  }

  // Expansion of (sum_q b_{iq} t^q)^e as t-power -> polynomial in b, truncated.
  auto power_expansion = [&](int i, int e) {
    std::map<int, FormalPolynomial> acc;
    acc.emplace(0, FormalPolynomial::constant(Rational(1)));
    for (int rep = 0; rep < e; ++rep) {
      std::map<int, FormalPolynomial> next;
      for (const auto& [tp, poly] : acc) {
        for (int q = 1; q <= beta - 1; ++q) {
          int ntp = tp + q;
          if (ntp > beta - 1) continue;
          FormalPolynomial contrib = poly * FormalPolynomial::symbol(Symbol::curve(i, q));
          auto it = next.find(ntp);
          if (it == next.end())
            next.emplace(ntp, contrib);
          else
            it->second = it->second + contrib;
        }
      }
      acc = std::move(next);
    }
    return acc;
  };

  FormalSystem sys;
  sys.n = n;
  sys.r = r;
  sys.m = m;
  sys.beta = beta;

  std::map<std::pair<int, int>, FormalPolynomial> collected;  // (tpower, component)
  for (int j = 1; j <= m; ++j) {
    for (const auto& [mu, coeff] : taylor) {
      if (mu[j - 1] == 0) continue;
      FormalPolynomial c = coeff.scaled(Rational(mu[j - 1]));
      MultiIndex nu = mu.minus(j - 1);
      // Substitute x_1 = t and x_i = sum b_{iq} t^q into x^nu.
      std::map<int, FormalPolynomial> acc;
      acc.emplace(nu[0], FormalPolynomial::constant(Rational(1)));
      for (int i = 2; i <= m; ++i) {
        if (nu[i - 1] == 0) continue;
        auto pe = power_expansion(i, nu[i - 1]);
        std::map<int, FormalPolynomial> next;
        for (const auto& [tp, poly] : acc) {
          for (const auto& [tq, bpoly] : pe) {
            int ntp = tp + tq;
            if (ntp > beta - 1) continue;
            FormalPolynomial contrib = poly * bpoly;
            auto it = next.find(ntp);
            if (it == next.end())
              next.emplace(ntp, contrib);
            else
              it->second = it->second + contrib;
          }
        }
        acc = std::move(next);
      }
      for (const auto& [tp, bpoly] : acc) {
        if (tp < 1 || tp > beta - 1) continue;
        FormalPolynomial contrib = c * bpoly;
        auto key = std::make_pair(tp, j);
        auto it = collected.find(key);
        if (it == collected.end())
          collected.emplace(key, contrib);
        else
          it->second = it->second + contrib;
      }
    }
  }

  for (const auto& [key, poly] : collected) {
    FormalEquation eq;
    eq.tpower = key.first;
    eq.component = key.second;
    eq.poly = poly;
    sys.equations.push_back(std::move(eq));
  }
  if (static_cast<int>(sys.equations.size()) != m * (beta - 1))
    throw std::logic_error("unexpected tangency equation count");
  return sys;
}

// ---------------------------------------------------------------------------
// Hand-transcribed systems

namespace {

// A formal linear combination of basis vectors, for transcribing printed
// expressions like h^3[A1 + b21 A2, A1 + b21 A2, .].
using LinComb = std::vector<std::pair<FormalPolynomial, int>>;

LinComb basis_vec(int i) { return {{FormalPolynomial::constant(Rational(1)), i}}; }

LinComb comb(std::vector<std::pair<Symbol, int>> parts) {
  LinComb lc;
  for (auto& [sym, idx] : parts) lc.push_back({FormalPolynomial::symbol(sym), idx});
  return lc;
}

// h^k[args..., A^j] expanded multilinearly; args has k-1 entries.
FormalPolynomial form_on(int k, const std::vector<LinComb>& args, int j) {
  FormalPolynomial out;
  std::function<void(size_t, FormalPolynomial, std::vector<int>)> rec =
      [&](size_t pos, FormalPolynomial coeff, std::vector<int> idx) {
        if (pos == args.size()) {
          idx.push_back(j);
          out = out + coeff * FormalPolynomial::symbol(Symbol::form(k, idx));
          return;
        }
        for (const auto& [c, i] : args[pos]) {
          std::vector<int> nidx = idx;
          nidx.push_back(i);
          rec(pos + 1, coeff * c, std::move(nidx));
        }
      };
  rec(0, FormalPolynomial::constant(Rational(1)), {});
  return out;
}

FormalPolynomial scale(long long c, const FormalPolynomial& p) { return p.scaled(Rational(c)); }

FormalPolynomial term(long long c, std::vector<Symbol> syms) {
  FormalPolynomial p;
  p.add(Rational(c), Monomial(syms.begin(), syms.end()));
  return p;
}

Symbol b(int i, int j) { return Symbol::curve(i, j); }
Symbol h(int k, std::vector<int> idx) { return Symbol::form(k, std::move(idx)); }

void push(FormalSystem& sys, int component, int tpower, FormalPolynomial p) {
  FormalEquation eq;
  eq.component = component;
  eq.tpower = tpower;
  eq.poly = std::move(p);
  sys.equations.push_back(std::move(eq));
}

}  // namespace

FormalSystem golden_xi(int n, int m) {
  FormalSystem sys;
  sys.n = n;
  sys.r = 5;
  sys.m = m;
  sys.beta = static_cast<int>(beta_m(n, 5, m));

  const LinComb u = basis_vec(2);
  if (m == 1) {
    // One-dimensional subspaces: plain chain of diagonal forms.
    for (int p = 1; p <= sys.beta - 1; ++p)
      push(sys, 1, p, form_on(p + 1, std::vector<LinComb>(p, basis_vec(1)), 1));
    return sys;
  }

  if (m == 2 && (n == 3 || n == 4 || n == 5)) {
    LinComb c1 = basis_vec(1);
    c1.push_back({FormalPolynomial::symbol(b(2, 1)), 2});
    for (int j = 1; j <= 2; ++j) push(sys, j, 1, form_on(2, {c1}, j));
    for (int j = 1; j <= 2; ++j)
      push(sys, j, 2, term(2, {b(2, 2), h(2, {2, j})}) + form_on(3, {c1, c1}, j));
    for (int j = 1; j <= 2; ++j)
      push(sys, j, 3,
           term(6, {b(2, 3), h(2, {2, j})}) + scale(6, term(1, {b(2, 2)}) * form_on(3, {c1, u}, j)) +
               form_on(4, {c1, c1, c1}, j));
    if (sys.beta == 5) {
      for (int j = 1; j <= 2; ++j)
        push(sys, j, 4,
             term(24, {b(2, 4), h(2, {2, j})}) +
                 scale(24, term(1, {b(2, 3)}) * form_on(3, {c1, u}, j)) +
                 term(12, {b(2, 2), b(2, 2), h(3, {2, 2, j})}) +
                 scale(12, term(1, {b(2, 2)}) * form_on(4, {c1, c1, u}, j)) +
                 form_on(5, {c1, c1, c1, c1}, j));
    }
    return sys;
  }

  if (m == 3 && (n == 4 || n == 5)) {
    LinComb c1 = basis_vec(1);
    c1.push_back({FormalPolynomial::symbol(b(2, 1)), 2});
    c1.push_back({FormalPolynomial::symbol(b(3, 1)), 3});
    LinComb c2 = comb({{b(2, 2), 2}, {b(3, 2), 3}});
    for (int j = 1; j <= 3; ++j) push(sys, j, 1, form_on(2, {c1}, j));
    for (int j = 1; j <= 3; ++j)
      push(sys, j, 2, scale(2, form_on(2, {c2}, j)) + form_on(3, {c1, c1}, j));
    if (sys.beta == 4) {  // n = 5 continues to cubic order
      LinComb c3 = comb({{b(2, 3), 2}, {b(3, 3), 3}});
      for (int j = 1; j <= 3; ++j)
        push(sys, j, 3,
             scale(6, form_on(2, {c3}, j)) + scale(6, form_on(3, {c2, c1}, j)) +
                 form_on(4, {c1, c1, c1}, j));
    }
    return sys;
  }

  if (m == 4 && n == 5) {
    LinComb c1 = basis_vec(1);
    c1.push_back({FormalPolynomial::symbol(b(2, 1)), 2});
    c1.push_back({FormalPolynomial::symbol(b(3, 1)), 3});
    c1.push_back({FormalPolynomial::symbol(b(4, 1)), 4});
    for (int j = 1; j <= 4; ++j) push(sys, j, 1, form_on(2, {c1}, j));
    return sys;
  }

  throw std::invalid_argument("no golden system for this pair");
}

FormalSystem psi_system(int n, int m) {
  FormalSystem sys;
  sys.n = n;
  sys.r = 5;
  sys.m = m;
  sys.beta = static_cast<int>(beta_m(n, 5, m));

  auto h1 = [&](int i) { return term(1, {h(1, {i})}); };

  if (m == 2 && (n == 3 || n == 4 || n == 5)) {
    push(sys, 1, 0, h1(1));
    push(sys, 2, 0, h1(2));
    push(sys, 1, 1, term(1, {h(2, {1, 1})}));
    push(sys, 2, 1, term(1, {h(2, {1, 2})}));
    push(sys, 1, 2, term(1, {h(3, {1, 1, 1})}));
    push(sys, 2, 2, term(2, {b(2, 2), h(2, {2, 2})}) + term(1, {h(3, {1, 1, 2})}));
    push(sys, 1, 3, term(6, {b(2, 2), h(3, {1, 1, 2})}) + term(1, {h(4, {1, 1, 1, 1})}));
    push(sys, 2, 3,
         term(6, {b(2, 3), h(2, {2, 2})}) + term(6, {b(2, 2), h(3, {1, 2, 2})}) +
             term(1, {h(4, {1, 1, 1, 2})}));
    if (n >= 4) {
      push(sys, 1, 4,
           term(24, {b(2, 3), h(3, {1, 1, 2})}) + term(12, {b(2, 2), b(2, 2), h(3, {1, 2, 2})}) +
               term(12, {b(2, 2), h(4, {1, 1, 1, 2})}) + term(1, {h(5, {1, 1, 1, 1, 1})}));
      push(sys, 2, 4,
           term(24, {b(2, 4), h(2, {2, 2})}) + term(24, {b(2, 3), h(3, {1, 2, 2})}) +
               term(12, {b(2, 2), b(2, 2), h(3, {2, 2, 2})}) +
               term(12, {b(2, 2), h(4, {1, 1, 2, 2})}) + term(1, {h(5, {1, 1, 1, 1, 2})}));
    }
    return sys;
  }

  if (m == 3 && n == 4) {
    for (int i = 1; i <= 3; ++i) push(sys, i, 0, h1(i));
    for (int j = 1; j <= 3; ++j) push(sys, j, 1, term(1, {h(2, {1, j})}));
    for (int j = 1; j <= 3; ++j)
      push(sys, j, 2,
           term(2, {b(2, 2), h(2, {2, j})}) + term(2, {b(3, 2), h(2, {3, j})}) +
               term(1, {h(3, {1, 1, j})}));
    return sys;
  }

  if (m == 3 && n == 5) {
    // As printed for five variables: the quadratic line carries unit weight
    // on the h^2 part (its parameters differ from the n=4 normalization).
    for (int i = 1; i <= 3; ++i) push(sys, i, 0, h1(i));
    for (int j = 1; j <= 3; ++j) push(sys, j, 1, term(1, {h(2, {1, j})}));
    for (int j = 1; j <= 3; ++j)
      push(sys, j, 2,
           term(1, {b(2, 2), h(2, {2, j})}) + term(1, {b(3, 2), h(2, {3, j})}) +
               term(1, {h(3, {1, 1, j})}));
    for (int j = 1; j <= 3; ++j)
      push(sys, j, 3,
           term(6, {b(2, 3), h(2, {2, j})}) + term(6, {b(3, 3), h(2, {3, j})}) +
               term(6, {b(2, 2), h(3, {1, 2, j})}) + term(6, {b(3, 2), h(3, {1, 3, j})}) +
               term(1, {h(4, {1, 1, 1, j})}));
    return sys;
  }

  if (m == 4 && n == 5) {
    for (int i = 1; i <= 4; ++i) push(sys, i, 0, h1(i));
    for (int j = 1; j <= 4; ++j) push(sys, j, 1, term(1, {h(2, {1, j})}));
    return sys;
  }

  throw std::invalid_argument("no parametrized system for this pair");
}

FormalSystem psi_star_system(int n, int m) {
  FormalSystem sys;
  sys.n = n;
  sys.r = 5;
  sys.m = m;
  sys.beta = static_cast<int>(beta_m(n, 5, m));

  auto h1 = [&](int i) { return term(1, {h(1, {i})}); };

  if (m == 2 && (n == 3 || n == 4 || n == 5)) {
    push(sys, 1, 0, h1(1));
    push(sys, 2, 0, h1(2));
    push(sys, 1, 1, term(1, {h(2, {1, 1})}));
    push(sys, 2, 1, term(1, {h(2, {1, 2})}));
    push(sys, 1, 2, term(1, {h(3, {1, 1, 1})}));
    // h2[u,u] h4[v,v,v,v] - 3 (h3[v,v,u])^2
    push(sys, 2, 2,
         term(1, {h(2, {2, 2}), h(4, {1, 1, 1, 1})}) +
             term(-3, {h(3, {1, 1, 2}), h(3, {1, 1, 2})}));
    if (n >= 4) {
      // 15 (h3[v,v,u])^2 h3[u,u,v] + h5[v^5] (h2[u,u])^2
      //   - 10 h4[v,v,v,u] h3[u,v,v] h2[u,u]
      push(sys, 2, 3,
           term(15, {h(3, {1, 1, 2}), h(3, {1, 1, 2}), h(3, {1, 2, 2})}) +
               term(1, {h(5, {1, 1, 1, 1, 1}), h(2, {2, 2}), h(2, {2, 2})}) +
               term(-10, {h(4, {1, 1, 1, 2}), h(3, {1, 1, 2}), h(2, {2, 2})}));
    }
    return sys;
  }

  if (m == 3 && n == 4) {
    for (int i = 1; i <= 3; ++i) push(sys, i, 0, h1(i));
    for (int j = 1; j <= 3; ++j) push(sys, j, 1, term(1, {h(2, {1, j})}));
    push(sys, 1, 2, term(1, {h(3, {1, 1, 1})}));
    return sys;
  }

  if (m == 3 && n == 5) {
    for (int i = 1; i <= 3; ++i) push(sys, i, 0, h1(i));
    for (int j = 1; j <= 3; ++j) push(sys, j, 1, term(1, {h(2, {1, j})}));
    push(sys, 1, 2, term(1, {h(3, {1, 1, 1})}));
    // {h4[v^4] h2[u,u] - 6 (h3[u,v,v])^2} {h2[w,w] h2[u,u] - (h2[u,w])^2}
    //  + 12 h3[u,v,v] h3[v,v,w] h2[u,u] h2[u,w]
    //  - 6 (h3[u,v,v])^2 (h2[u,w])^2 - 6 (h3[v,v,w])^2 (h2[u,u])^2
    FormalPolynomial a =
        term(1, {h(4, {1, 1, 1, 1}), h(2, {2, 2})}) + term(-6, {h(3, {1, 1, 2}), h(3, {1, 1, 2})});
    FormalPolynomial bb =
        term(1, {h(2, {3, 3}), h(2, {2, 2})}) + term(-1, {h(2, {2, 3}), h(2, {2, 3})});
    FormalPolynomial rest =
        term(12, {h(3, {1, 1, 2}), h(3, {1, 1, 3}), h(2, {2, 2}), h(2, {2, 3})}) +
        term(-6, {h(3, {1, 1, 2}), h(3, {1, 1, 2}), h(2, {2, 3}), h(2, {2, 3})}) +
        term(-6, {h(3, {1, 1, 3}), h(3, {1, 1, 3}), h(2, {2, 2}), h(2, {2, 2})});
    push(sys, 2, 3, a * bb + rest);
    return sys;
  }

  if (m == 4 && n == 5) {
    for (int i = 1; i <= 4; ++i) push(sys, i, 0, h1(i));
    for (int j = 1; j <= 4; ++j) push(sys, j, 1, term(1, {h(2, {1, j})}));
    return sys;
  }

  throw std::invalid_argument("no eliminated system for this pair");
}

// ---------------------------------------------------------------------------
// Instantiation and export

std::vector<double> instantiate(const FormalSystem& sys, const Jet& jet,
                                const std::vector<std::vector<double>>& basis, const BValues& b) {
  std::vector<double> out;
  out.reserve(sys.equations.size());
  for (const auto& eq : sys.equations) {
    double acc = 0;
    for (const auto& [mono, coeff] : eq.poly.terms()) {
      double t = coeff.to_double();
      for (const auto& sym : mono) {
        if (sym.kind == Symbol::Kind::CurveCoeff) {
          auto it = b.find({sym.i, sym.j});
          if (it == b.end())
            throw std::invalid_argument("missing curve coefficient b" + std::to_string(sym.i) +
                                        std::to_string(sym.j));
          t *= it->second;
        } else {
          if (sym.k > jet.r()) throw std::invalid_argument("jet order too low for system");
          std::vector<std::vector<double>> vs;
          for (int ix : sym.idx) {
            if (ix < 1 || ix > static_cast<int>(basis.size()))
              throw std::invalid_argument("basis vector missing for index " + std::to_string(ix));
            vs.push_back(basis[ix - 1]);
          }
          t *= multilinear(jet, sym.k, vs);
        }
      }
      acc += t;
    }
    out.push_back(acc);
  }
  return out;
}

std::string system_to_text(const FormalSystem& sys) {
  std::ostringstream os;
  os << "# tangency system n=" << sys.n << " m=" << sys.m << " r=" << sys.r
     << " beta=" << sys.beta << " (" << sys.equations.size() << " equations)\n";
  for (const auto& eq : sys.equations) {
    os << "[component " << eq.component << ", t^" << eq.tpower << "] " << eq.poly.to_string()
       << " = 0\n";
  }
  return os.str();
}

std::string system_to_json(const FormalSystem& sys) {
  nlohmann::json out;
  out["n"] = sys.n;
  out["m"] = sys.m;
  out["r"] = sys.r;
  out["beta"] = sys.beta;
  nlohmann::json eqs = nlohmann::json::array();
  for (const auto& eq : sys.equations) {
    nlohmann::json je;
    je["component"] = eq.component;
    je["tpower"] = eq.tpower;
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [mono, coeff] : eq.poly.terms()) {
      nlohmann::json jt;
      jt["coeff"] = coeff.to_string();
      nlohmann::json syms = nlohmann::json::array();
      for (const auto& s : mono) {
        if (s.kind == Symbol::Kind::CurveCoeff) {
          syms.push_back(nlohmann::json::array({"b", s.i, s.j}));
        } else {
          syms.push_back(nlohmann::json::array({"h", s.k, s.idx}));
        }
      }
      jt["symbols"] = syms;
      terms.push_back(jt);
    }
    je["terms"] = terms;
    eqs.push_back(je);
  }
  out["equations"] = eqs;
  return out.dump(2);
}

// ---------------------------------------------------------------------------
// Numeric validation of the parameter eliminations

namespace {

// Number of distinct vector slots a system references.
int max_basis_index(const FormalSystem& sys) {
  int mx = 0;
  for (const auto& eq : sys.equations)
    for (const auto& [mono, c] : eq.poly.terms())
      for (const auto& s : mono)
        if (s.kind == Symbol::Kind::JetForm)
          for (int ix : s.idx) mx = std::max(mx, ix);
  return mx;
}

struct FrameSample {
  std::map<MultiIndex, double> entries;  // adapted-frame jet entries
  BValues b;
};

// The defining equations are linear in the jet entries once the curve
// parameters are fixed: walk the equations in order and solve each for its
// unique bare-form pivot, drawing every other entry at random.
FrameSample solve_psi_sample(const FormalSystem& psi, int n, Rng& rng) {
  FrameSample s;
  for (const auto& eq : psi.equations)
    for (const auto& [mono, c] : eq.poly.terms())
      for (const auto& sym : mono)
        if (sym.kind == Symbol::Kind::CurveCoeff && !s.b.count({sym.i, sym.j}))
          s.b[{sym.i, sym.j}] = rng.uniform(-1.2, 1.2);

  auto sym_to_mu = [&](const Symbol& sym) {
    std::vector<int> mu(n, 0);
    for (int ix : sym.idx) mu[ix - 1] += 1;
    return MultiIndex(mu);
  };
  auto value_of = [&](const Symbol& sym) -> double& {
    MultiIndex mu = sym_to_mu(sym);
    auto it = s.entries.find(mu);
    if (it == s.entries.end()) it = s.entries.emplace(mu, rng.uniform(-1.0, 1.0)).first;
    return it->second;
  };

  for (const auto& eq : psi.equations) {
    // Pivot: the largest symbol appearing as a bare monomial.
    const Symbol* pivot = nullptr;
    Rational pivot_coeff(1);
    for (const auto& [mono, c] : eq.poly.terms()) {
      if (mono.size() == 1 && mono[0].kind == Symbol::Kind::JetForm) {
        if (!pivot || *pivot < mono[0]) {
          pivot = &mono[0];
          pivot_coeff = c;
        }
      }
    }
    if (!pivot) throw std::logic_error("no pivot in defining equation");
    double rest = 0;
    for (const auto& [mono, c] : eq.poly.terms()) {
      if (mono.size() == 1 && mono[0] == *pivot) continue;
      double t = c.to_double();
      for (const auto& sym : mono)
        t *= (sym.kind == Symbol::Kind::CurveCoeff) ? s.b.at({sym.i, sym.j}) : value_of(sym);
      rest += t;
    }
    MultiIndex mu = sym_to_mu(*pivot);
    s.entries[mu] = -rest / pivot_coeff.to_double();
  }
  return s;
}

}  // namespace

EliminationReport validate_elimination(int n, int m, int samples, unsigned long long seed) {
  FormalSystem psi = psi_system(n, m);
  FormalSystem star = psi_star_system(n, m);
  const int nvec = std::max(max_basis_index(psi), max_basis_index(star));
  EliminationReport rep;
  rep.requested = samples;
  Rng rng(seed * 0x9e3779b97f4a7c15ULL + 0x7b1);

  for (int sample = 0; sample < samples; ++sample) {
    bool decoy = (sample % 16 == 15);

    // Random orthogonal frame: columns 0..nvec-1 host the slot vectors,
    // the last column hosts the gradient direction.
    std::vector<std::vector<double>> q(n, std::vector<double>(n));
    for (int c = 0; c < n; ++c) {
      for (int i = 0; i < n; ++i) q[c][i] = rng.gaussian();
      for (int p = 0; p < c; ++p) {
        double d = 0;
        for (int i = 0; i < n; ++i) d += q[c][i] * q[p][i];
        for (int i = 0; i < n; ++i) q[c][i] -= d * q[p][i];
      }
      double nn = 0;
      for (int i = 0; i < n; ++i) nn += q[c][i] * q[c][i];
      nn = std::sqrt(nn);
      for (int i = 0; i < n; ++i) q[c][i] /= nn;
    }

    FrameSample fs;
    if (decoy) {
      for (int k = 1; k <= 5; ++k)
        for (const auto& mu : MultiIndex::all_of_degree(n, k))
          fs.entries[mu] = rng.uniform(-1.0, 1.0);
      for (const auto& eq : psi.equations)
        for (const auto& [mono, c] : eq.poly.terms())
          for (const auto& sym : mono)
            if (sym.kind == Symbol::Kind::CurveCoeff && !fs.b.count({sym.i, sym.j}))
              fs.b[{sym.i, sym.j}] = rng.uniform(-1.2, 1.2);
    } else {
      fs = solve_psi_sample(psi, n, rng);
      // Fill the untouched entries and pin a nonzero gradient component
      // along the last frame direction.
      for (int k = 1; k <= 5; ++k)
        for (const auto& mu : MultiIndex::all_of_degree(n, k))
          if (!fs.entries.count(mu)) fs.entries[mu] = rng.uniform(-1.0, 1.0);
      std::vector<int> gmu(n, 0);
      gmu[n - 1] = 1;
      fs.entries[MultiIndex(gmu)] = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.6, 1.4);
    }

    // Rotate the adapted-frame jet into ambient coordinates.
    std::vector<std::pair<MultiIndex, double>> frame_entries(fs.entries.begin(), fs.entries.end());
    Jet frame_jet = jet_from_coeffs(n, 5, std::vector<double>(n, 0.0), frame_entries);
    std::map<MultiIndex, double> ambient;
    for (int k = 1; k <= 5; ++k) {
      // T_amb[e_a,...] = S[row_a(Q),...] makes T_amb[f_c,...] = S[e_c,...].
      std::vector<std::vector<double>> rows(n, std::vector<double>(n));
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i) rows[a][i] = q[i][a];
      std::vector<double> amb = pullback_tensor(frame_jet.pack().tensor(k), k, n, rows);
      for (const auto& mu : MultiIndex::all_of_degree(n, k)) {
        long long flat = 0;
        for (int i = 0; i < n; ++i)
          for (int c2 = 0; c2 < mu[i]; ++c2) flat = flat * n + i;
        if (amb[flat] != 0.0) ambient[mu] = amb[flat];
      }
    }
    std::vector<std::pair<MultiIndex, double>> amb_entries(ambient.begin(), ambient.end());
    Jet jet = jet_from_coeffs(n, 5, std::vector<double>(n, 0.0), amb_entries);
    std::vector<std::vector<double>> basis;
    for (int c = 0; c < nvec; ++c) basis.push_back(q[c]);

    std::vector<double> psi_res = instantiate(psi, jet, basis, fs.b);
    double worst_psi = 0;
    for (double v : psi_res) worst_psi = std::max(worst_psi, std::abs(v));
    if (worst_psi > 1e-7) {
      rep.filtered += 1;  // not a solution of the defining system
      continue;
    }
    std::vector<double> star_res = instantiate(star, jet, basis, {});
    double worst = 0;
    for (double v : star_res) worst = std::max(worst, std::abs(v));
    rep.max_star_residual = std::max(rep.max_star_residual, worst);
    if (worst < 1e-8)
      rep.passes += 1;
    else
      rep.failures += 1;
  }
  return rep;
}

}  // namespace steep::formal
