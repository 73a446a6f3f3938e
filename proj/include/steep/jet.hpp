#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "steep/polynomial.hpp"

namespace steep {

inline long long ipow(long long b, int e) {
  long long r = 1;
  while (e-- > 0) r *= b;
  return r;
}

/// Dense symmetric tensors of a jet, orders 1..r over dimension d.
/// tensor(k) is a flat row-major array of size d^k; frob(k) is its
/// Frobenius norm, which bounds |T[x1..xk]| and the norm of any partial
/// contraction against unit vectors.
struct TensorPack {
  int d = 0;
  int r = 0;
  std::vector<std::vector<double>> data;  // data[k-1], size d^k
  std::vector<double> frob_;

  const double* tensor(int k) const { return data[k - 1].data(); }
  double frob(int k) const { return frob_[k - 1]; }
  void compute_norms();
};

/// Contract the last index of an order-k tensor with v (dim d).
void contract_last(const double* T, int k, int d, const double* v, double* out);
/// Value of the full contraction T[v1,...,vk].
double contract_value(const double* T, int k, int d, const double* const* vecs);
/// g = T[args(0..k-2), .]: contract k-1 given vectors, leave one slot free.
void contract_leave_one(const double* T, int k, int d, const double* const* vecs, double* out);

/// Transform an order-k symmetric tensor T (dim n) by the basis B
/// (n x d, columns orthonormal in the use sites): out[a1..ak] = T[B a1,...].
std::vector<double> pullback_tensor(const double* T, int k, int n,
                                    const std::vector<std::vector<double>>& B_cols);

/// All partial derivatives D_mu = d^mu h(I), 1 <= |mu| <= r, at a point.
/// Stored by multi-index (the canonical form); dense symmetric tensors are
/// kept alongside for fast multilinear evaluation. Immutable once built.
class Jet {
 public:
  Jet(int n, int r, std::vector<double> point, std::map<MultiIndex, double> derivs);

  int n() const { return n_; }
  int r() const { return r_; }
  const std::vector<double>& point() const { return point_; }
  const std::map<MultiIndex, double>& derivs() const { return derivs_; }

  /// Total lookup: entries not stored are zero.
  double deriv(const MultiIndex& mu) const;

  const TensorPack& pack() const { return pack_; }

  Jet scaled(double lambda) const;

 private:
  int n_;
  int r_;
  std::vector<double> point_;
  std::map<MultiIndex, double> derivs_;
  TensorPack pack_;
};

/// Exact-arithmetic twin of Jet, used where tests need identities to hold
/// to the last bit (Taylor re-expansion, golden derivative values).
struct ExactJet {
  int n = 0;
  int r = 0;
  std::vector<Rational> point;
  std::map<MultiIndex, Rational> derivs;

  Rational deriv(const MultiIndex& mu) const {
    auto it = derivs.find(mu);
    return it == derivs.end() ? Rational(0) : it->second;
  }
};

ExactJet exact_jet_at(const Polynomial& p, const std::vector<Rational>& point, int r);
Rational exact_multilinear(const ExactJet& j, int k,
                           const std::vector<std::vector<Rational>>& vs);

Jet jet_at(const Polynomial& p, const std::vector<Rational>& point, int r);
Jet jet_at(const Polynomial& p, const std::vector<double>& point, int r);

/// Raw-jet input path for non-polynomial sources. Rejects duplicate
/// multi-indices and |mu| outside [1, r]; missing entries default to zero.
Jet jet_from_coeffs(int n, int r, std::vector<double> point,
                    const std::vector<std::pair<MultiIndex, double>>& entries);

std::vector<double> gradient(const Jet& j);

/// Fully symmetric k-linear form h^k[v1,...,vk].
double multilinear(const Jet& j, int k, const std::vector<std::vector<double>>& vs);

/// JSON serialization per the published jet schema.
std::string jet_to_json(const Jet& j);
Jet jet_from_json(const std::string& text);

}  // namespace steep
