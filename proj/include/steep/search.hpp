#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "steep/jet.hpp"

namespace steep::search {

constexpr int kMaxVecs = 4;
constexpr int kMaxDim = 5;

/// A tuple of k unit vectors in R^d (the constraint-manifold point).
struct TuplePoint {
  int d = 0;
  int k = 0;
  std::array<std::array<double, kMaxDim>, kMaxVecs> v{};

  double* vec(int i) { return v[i].data(); }
  const double* vec(int i) const { return v[i].data(); }
  std::vector<std::vector<double>> to_vectors() const {
    std::vector<std::vector<double>> out(k);
    for (int i = 0; i < k; ++i) out[i] = std::vector<double>(v[i].begin(), v[i].begin() + d);
    return out;
  }
};

struct Interval {
  double lo = 0;
  double hi = 0;
  bool excludes_zero() const { return lo > 0.0 || hi < 0.0; }
  double slack() const { return lo > 0.0 ? lo : (hi < 0.0 ? -hi : 0.0); }
};

/// Forward-mode scalar: value plus gradient w.r.t. every tuple vector.
struct GradScalar {
  double v = 0;
  std::array<std::array<double, kMaxDim>, kMaxVecs> g{};

  static GradScalar constant(double c) {
    GradScalar s;
    s.v = c;
    return s;
  }
  friend GradScalar operator+(const GradScalar& a, const GradScalar& b) {
    GradScalar r;
    r.v = a.v + b.v;
    for (int i = 0; i < kMaxVecs; ++i)
      for (int j = 0; j < kMaxDim; ++j) r.g[i][j] = a.g[i][j] + b.g[i][j];
    return r;
  }
  friend GradScalar operator-(const GradScalar& a, const GradScalar& b) {
    GradScalar r;
    r.v = a.v - b.v;
    for (int i = 0; i < kMaxVecs; ++i)
      for (int j = 0; j < kMaxDim; ++j) r.g[i][j] = a.g[i][j] - b.g[i][j];
    return r;
  }
  friend GradScalar operator*(const GradScalar& a, const GradScalar& b) {
    GradScalar r;
    r.v = a.v * b.v;
    for (int i = 0; i < kMaxVecs; ++i)
      for (int j = 0; j < kMaxDim; ++j) r.g[i][j] = a.v * b.g[i][j] + b.v * a.g[i][j];
    return r;
  }
};

/// Sound first-order enclosure of a scalar over a cell: a value interval
/// plus, per tuple vector, a bound on the gradient norm anywhere in the cell.
struct CellScalar {
  double lo = 0;
  double hi = 0;
  std::array<double, kMaxVecs> L{};

  static CellScalar constant(double c) {
    CellScalar s;
    s.lo = s.hi = c;
    return s;
  }
  double amax() const { return std::max(std::abs(lo), std::abs(hi)); }
  friend CellScalar operator+(const CellScalar& a, const CellScalar& b) {
    CellScalar r;
    r.lo = a.lo + b.lo;
    r.hi = a.hi + b.hi;
    for (int i = 0; i < kMaxVecs; ++i) r.L[i] = a.L[i] + b.L[i];
    return r;
  }
  friend CellScalar operator-(const CellScalar& a, const CellScalar& b) {
    CellScalar r;
    r.lo = a.lo - b.hi;
    r.hi = a.hi - b.lo;
    for (int i = 0; i < kMaxVecs; ++i) r.L[i] = a.L[i] + b.L[i];
    return r;
  }
  friend CellScalar operator*(const CellScalar& a, const CellScalar& b) {
    CellScalar r;
    double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
    r.lo = std::min(std::min(p1, p2), std::min(p3, p4));
    r.hi = std::max(std::max(p1, p2), std::max(p3, p4));
    double am = a.amax(), bm = b.amax();
    for (int i = 0; i < kMaxVecs; ++i) r.L[i] = am * b.L[i] + bm * a.L[i];
    return r;
  }
};

template <class S>
S sq(const S& x) {
  return x * x;
}

/// One defining equation of a system, over a tuple of unit vectors.
class Equation {
 public:
  virtual ~Equation() = default;
  virtual double eval(const TuplePoint& p) const = 0;
  virtual GradScalar geval(const TuplePoint& p) const = 0;
  /// Enclosure of the equation over the cell {x : ||x_i - center_i|| <= rho[i]}.
  /// When contrib is non-null it receives each vector's share of the
  /// enclosure width (used to pick refinement directions).
  virtual Interval enclose(const TuplePoint& center, const double* rho,
                           double* contrib = nullptr) const = 0;
  virtual const std::string& name() const = 0;
};

/// A multilinear-form factor h^k[v_{s1},...,v_{sk}] (slots index tuple vectors).
struct AtomRef {
  int k = 0;
  std::vector<int> slots;
};

/// Polynomial combination of form atoms: sum of coeff * prod atoms^pow.
struct CombTerm {
  double coeff = 1.0;
  std::vector<std::pair<int, int>> powers;  // (atom index, exponent)
};

std::unique_ptr<Equation> make_form_eq(const TensorPack* pack, int k, std::vector<int> slots,
                                       std::string name);
std::unique_ptr<Equation> make_poly_eq(const TensorPack* pack, std::vector<AtomRef> atoms,
                                       std::vector<CombTerm> terms, std::string name);
std::unique_ptr<Equation> make_dot_eq(int i, int j, std::string name);
/// Row i of the order-2 tensor applied to vector 0: linear in v.
std::unique_ptr<Equation> make_h2row_eq(const TensorPack* pack, int row, std::string name);

/// k mutually orthonormal unit vectors in R^d.
struct Manifold {
  int d = 0;
  int k = 0;
  int intrinsic_dim() const { return k * d - k * (k + 1) / 2; }
};

/// Residual system over a constraint manifold. The residual is the sum of
/// squared equation values; orthonormality is handled by the engine
/// (retraction in descent, dot-product equations in certification).
struct Problem {
  Manifold mf;
  std::vector<std::unique_ptr<Equation>> eqs;
  std::string id;
};

struct SearchConfig {
  int starts = 160;
  int max_iters = 300;
  double witness_tol = 1e-9;       // residual below this counts as a witness
  double margin_tol = 1e-6;        // certified bound must exceed this
  double gradient_tol = 1e-10;
  double rank_tol = 1e-6;
  double cluster_tol = 1e-3;
  unsigned long long certify_budget = 10'000'000;
  double cell_floor = 2e-5;        // give up refining below this chart width
  double snap_tol = 0.1;           // witness components below this try to snap to zero
  int dim_ceiling = 8;
  unsigned long long seed = 42;
  enum class Mode { Heuristic, Certify } mode = Mode::Certify;
  int threads = 0;                 // 0: use STEEP_THREADS or hardware count
};

struct StartSummary {
  double value = 0;
  int iters = 0;
};

struct SearchOutcome {
  double best_value = 0;
  TuplePoint best;
  std::vector<StartSummary> start_summaries;
  std::vector<TuplePoint> final_points;  // one polished endpoint per start
  unsigned long long evals = 0;
};

struct CertifyResult {
  std::optional<double> lower_bound;  // for the residual; absent if not proven
  unsigned long long cells = 0;
  bool budget_exhausted = false;
  bool dimension_too_large = false;
};

double residual(const Problem& p, const TuplePoint& x);

/// Multistart projected gradient descent with QR retraction and a
/// Gauss-Newton polish. Deterministic for fixed (problem, config, seed).
SearchOutcome minimize(const Problem& p, const SearchConfig& cfg);

/// Adaptive covering of the manifold by chart cells; a cell is discarded
/// only when a sound enclosure of some equation excludes zero on it. If the
/// whole manifold is discarded the residual has a certified positive lower
/// bound (min slack^2 over cells).
CertifyResult certify_positive(const Problem& p, const SearchConfig& cfg);

/// Groups manifold points within an angular tolerance, identifying v and -v
/// per vector; returns one deterministic representative per group.
std::vector<TuplePoint> cluster_tuples(const std::vector<TuplePoint>& pts, double angular_tol);
std::vector<std::vector<double>> cluster_witnesses(const std::vector<std::vector<double>>& pts,
                                                   double angular_tol);

int resolve_threads(const SearchConfig& cfg);

}  // namespace steep::search
