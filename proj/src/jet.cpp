#include "steep/jet.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "json.hpp"

namespace steep {

void TensorPack::compute_norms() {
  frob_.assign(data.size(), 0.0);
  for (size_t k = 0; k < data.size(); ++k) {
    double s = 0;
    for (double v : data[k]) s += v * v;
    frob_[k] = std::sqrt(s);
  }
}

void contract_last(const double* T, int k, int d, const double* v, double* out) {
  long long rows = ipow(d, k - 1);
  for (long long r = 0; r < rows; ++r) {
    const double* row = T + r * d;
    double acc = 0;
    for (int j = 0; j < d; ++j) acc += row[j] * v[j];
    out[r] = acc;
  }
}

double contract_value(const double* T, int k, int d, const double* const* vecs) {
  // scratch sized for d<=5, k<=5
  double buf_a[625], buf_b[625];
  const double* cur = T;
  double* dst = buf_a;
  double* other = buf_b;
  for (int step = k; step >= 2; --step) {
    contract_last(cur, step, d, vecs[step - 1], dst);
    cur = dst;
    std::swap(dst, other);
  }
  double acc = 0;
  for (int j = 0; j < d; ++j) acc += cur[j] * vecs[0][j];
  return acc;
}

void contract_leave_one(const double* T, int k, int d, const double* const* vecs, double* out) {
  double buf_a[625], buf_b[625];
  const double* cur = T;
  double* dst = buf_a;
  double* other = buf_b;
  for (int step = k; step >= 2; --step) {
    contract_last(cur, step, d, vecs[step - 2], dst);
    cur = dst;
    std::swap(dst, other);
  }
  std::memcpy(out, cur, sizeof(double) * d);
}

std::vector<double> pullback_tensor(const double* T, int k, int n,
                                    const std::vector<std::vector<double>>& B_cols) {
  int d = static_cast<int>(B_cols.size());
  // Transform one index per pass; untransformed block shrinks from the left.
  std::vector<double> cur(T, T + ipow(n, k));
  for (int step = 0; step < k; ++step) {
    long long rest_o = ipow(n, k - step - 1);
    long long rest_t = ipow(d, step);
    std::vector<double> next(rest_o * rest_t * d, 0.0);
    for (long long i1 = 0; i1 < n; ++i1) {
      for (long long o = 0; o < rest_o; ++o) {
        const double* src = cur.data() + (i1 * rest_o + o) * rest_t;
        for (long long t = 0; t < rest_t; ++t) {
          double val = src[t];
          if (val == 0.0) continue;
          double* dst = next.data() + (o * rest_t + t) * d;
          for (int b = 0; b < d; ++b) dst[b] += val * B_cols[b][i1];
        }
      }
    }
    cur = std::move(next);
  }
  return cur;
}

namespace {

// Fill the dense symmetric tensors from the multi-index map.
TensorPack build_pack(int n, int r, const std::map<MultiIndex, double>& derivs) {
  TensorPack pack;
  pack.d = n;
  pack.r = r;
  pack.data.resize(r);
  std::vector<int> idx(r, 0);
  for (int k = 1; k <= r; ++k) {
    auto& T = pack.data[k - 1];
    T.assign(ipow(n, k), 0.0);
    long long total = ipow(n, k);
    std::vector<int> counts(n);
    for (long long flat = 0; flat < total; ++flat) {
      long long f = flat;
      std::fill(counts.begin(), counts.end(), 0);
      for (int p = 0; p < k; ++p) {
        counts[f % n] += 1;
        f /= n;
      }
      auto it = derivs.find(MultiIndex(counts));
      if (it != derivs.end()) T[flat] = it->second;
    }
  }
  pack.compute_norms();
  return pack;
}

}  // namespace

Jet::Jet(int n, int r, std::vector<double> point, std::map<MultiIndex, double> derivs)
    : n_(n), r_(r), point_(std::move(point)), derivs_(std::move(derivs)) {
  if (n_ < 1) throw std::invalid_argument("jet dimension must be positive");
  if (r_ < 1) throw std::invalid_argument("jet order must be at least 1");
  if (static_cast<int>(point_.size()) != n_) throw std::invalid_argument("point dimension mismatch");
  for (const auto& [mu, v] : derivs_) {
    if (mu.size() != n_) throw std::invalid_argument("multi-index size mismatch");
    int deg = mu.degree();
    if (deg < 1 || deg > r_) throw std::invalid_argument("multi-index degree out of range");
    (void)v;
  }
  pack_ = build_pack(n_, r_, derivs_);
}

double Jet::deriv(const MultiIndex& mu) const {
  auto it = derivs_.find(mu);
  return it == derivs_.end() ? 0.0 : it->second;
}

Jet Jet::scaled(double lambda) const {
  std::map<MultiIndex, double> d;
  for (const auto& [mu, v] : derivs_) d.emplace(mu, lambda * v);
  return Jet(n_, r_, point_, std::move(d));
}

ExactJet exact_jet_at(const Polynomial& p, const std::vector<Rational>& point, int r) {
  if (r < 1) throw std::invalid_argument("jet order must be at least 1");
  if (static_cast<int>(point.size()) != p.n())
    throw std::invalid_argument("point dimension mismatch");
  ExactJet j;
  j.n = p.n();
  j.r = r;
  j.point = point;
  // D_mu by repeated exact differentiation, reusing lower-order results.
  std::map<MultiIndex, Polynomial> cache;
  cache.emplace(MultiIndex::zeros(p.n()), p);
  for (int k = 1; k <= r; ++k) {
    for (const auto& mu : MultiIndex::all_of_degree(p.n(), k)) {
      int i = 0;
      while (mu[i] == 0) ++i;
      const Polynomial& parent = cache.at(mu.minus(i));
      Polynomial dp = parent.differentiate(i + 1);
      Rational val = dp.eval(point);
      if (!val.is_zero()) j.derivs.emplace(mu, val);
      if (k < r) cache.emplace(mu, std::move(dp));
    }
  }
  return j;
}

Rational exact_multilinear(const ExactJet& j, int k,
                           const std::vector<std::vector<Rational>>& vs) {
  if (k < 1 || k > j.r) throw std::out_of_range("form order out of range");
  if (static_cast<int>(vs.size()) != k) throw std::invalid_argument("need k vectors");
  for (const auto& v : vs)
    if (static_cast<int>(v.size()) != j.n) throw std::invalid_argument("vector dimension mismatch");
  Rational acc(0);
  long long total = ipow(j.n, k);
  std::vector<int> counts(j.n);
  for (long long flat = 0; flat < total; ++flat) {
    long long f = flat;
    std::fill(counts.begin(), counts.end(), 0);
    Rational prod(1);
    for (int p = 0; p < k; ++p) {
      int i = static_cast<int>(f % j.n);
      f /= j.n;
      counts[i] += 1;
      prod *= vs[p][i];
    }
    if (prod.is_zero()) continue;
    Rational dv = j.deriv(MultiIndex(counts));
    if (!dv.is_zero()) acc += dv * prod;
  }
  return acc;
}

Jet jet_at(const Polynomial& p, const std::vector<Rational>& point, int r) {
  ExactJet e = exact_jet_at(p, point, r);
  std::map<MultiIndex, double> d;
  for (const auto& [mu, v] : e.derivs) d.emplace(mu, v.to_double());
  std::vector<double> pt(point.size());
  for (size_t i = 0; i < point.size(); ++i) pt[i] = point[i].to_double();
  return Jet(p.n(), r, std::move(pt), std::move(d));
}

Jet jet_at(const Polynomial& p, const std::vector<double>& point, int r) {
  if (r < 1) throw std::invalid_argument("jet order must be at least 1");
  if (static_cast<int>(point.size()) != p.n())
    throw std::invalid_argument("point dimension mismatch");
  std::map<MultiIndex, double> derivs;
  std::map<MultiIndex, Polynomial> cache;
  cache.emplace(MultiIndex::zeros(p.n()), p);
  for (int k = 1; k <= r; ++k) {
    for (const auto& mu : MultiIndex::all_of_degree(p.n(), k)) {
      int i = 0;
      while (mu[i] == 0) ++i;
      const Polynomial& parent = cache.at(mu.minus(i));
      Polynomial dp = parent.differentiate(i + 1);
      double val = dp.eval(point);
      if (val != 0.0) derivs.emplace(mu, val);
      if (k < r) cache.emplace(mu, std::move(dp));
    }
  }
  return Jet(p.n(), r, point, std::move(derivs));
}

Jet jet_from_coeffs(int n, int r, std::vector<double> point,
                    const std::vector<std::pair<MultiIndex, double>>& entries) {
  std::map<MultiIndex, double> derivs;
  for (const auto& [mu, v] : entries) {
    if (mu.size() != n) throw std::invalid_argument("multi-index size mismatch");
    int deg = mu.degree();
    if (deg < 1 || deg > r)
      throw std::invalid_argument("multi-index degree out of range: " + mu.to_string());
    if (derivs.count(mu))
      throw std::invalid_argument("duplicate multi-index: " + mu.to_string());
    derivs.emplace(mu, v);
  }
  return Jet(n, r, std::move(point), std::move(derivs));
}

std::vector<double> gradient(const Jet& j) {
  const double* t = j.pack().tensor(1);
  return std::vector<double>(t, t + j.n());
}

double multilinear(const Jet& j, int k, const std::vector<std::vector<double>>& vs) {
  if (k < 1 || k > j.r()) throw std::out_of_range("form order out of range");
  if (static_cast<int>(vs.size()) != k) throw std::invalid_argument("need k vectors");
  std::vector<const double*> ptrs(k);
  for (int i = 0; i < k; ++i) {
    if (static_cast<int>(vs[i].size()) != j.n())
      throw std::invalid_argument("vector dimension mismatch");
    ptrs[i] = vs[i].data();
  }
  return contract_value(j.pack().tensor(k), k, j.n(), ptrs.data());
}

std::string jet_to_json(const Jet& j) {
  nlohmann::json out;
  out["n"] = j.n();
  out["order"] = j.r();
  out["point"] = j.point();
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [mu, v] : j.derivs()) {
    nlohmann::json t;
    t["mu"] = mu.entries();
    t["value"] = v;
    terms.push_back(t);
  }
  out["terms"] = terms;
  return out.dump(2);
}

Jet jet_from_json(const std::string& text) {
  nlohmann::json in = nlohmann::json::parse(text);
  int n = in.at("n").get<int>();
  int r = in.at("order").get<int>();
  std::vector<double> point = in.at("point").get<std::vector<double>>();
  std::vector<std::pair<MultiIndex, double>> entries;
  if (in.contains("terms")) {
    for (const auto& t : in.at("terms")) {
      entries.emplace_back(MultiIndex(t.at("mu").get<std::vector<int>>()),
                           t.at("value").get<double>());
    }
  }
  return jet_from_coeffs(n, r, std::move(point), entries);
}

}  // namespace steep
