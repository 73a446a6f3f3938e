#include "steep/search.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <limits>
#include <thread>

namespace steep::search {

namespace {

uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform01(uint64_t& state) {
  return (splitmix64(state) >> 11) * 0x1.0p-53;
}

double gaussian(uint64_t& state) {
  // Box-Muller; deterministic given the state sequence.
  double u1 = uniform01(state);
  double u2 = uniform01(state);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

double dot(const double* a, const double* b, int d) {
  double s = 0;
  for (int i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}

double norm(const double* a, int d) { return std::sqrt(dot(a, a, d)); }

// Modified Gram-Schmidt on the tuple, in vector order. Deterministic.
void retract(TuplePoint& x) {
  for (int i = 0; i < x.k; ++i) {
    for (int j = 0; j < i; ++j) {
      double c = dot(x.vec(i), x.vec(j), x.d);
      for (int t = 0; t < x.d; ++t) x.v[i][t] -= c * x.v[j][t];
    }
    double nn = norm(x.vec(i), x.d);
    if (nn < 1e-14) {
      // Degenerate direction; replace with a deterministic fallback axis.
      for (int t = 0; t < x.d; ++t) x.v[i][t] = 0;
      x.v[i][i % x.d] = 1.0;
      for (int j = 0; j < i; ++j) {
        double c = dot(x.vec(i), x.vec(j), x.d);
        for (int t = 0; t < x.d; ++t) x.v[i][t] -= c * x.v[j][t];
      }
      nn = norm(x.vec(i), x.d);
    }
    for (int t = 0; t < x.d; ++t) x.v[i][t] /= nn;
  }
}

// ---------------------------------------------------------------------------
// Atoms

struct AtomWork {
  double value = 0;
  int ndistinct = 0;
  int slot_id[kMaxVecs] = {};
  int mult[kMaxVecs] = {};
  double gvec[kMaxVecs][kMaxDim] = {};
  double gnorm[kMaxVecs] = {};
};

void atom_work(const TensorPack& pack, const AtomRef& ref, const TuplePoint& p, AtomWork& w) {
  const int k = ref.k;
  const int d = pack.d;
  w.ndistinct = 0;
  for (int s : ref.slots) {
    bool found = false;
    for (int i = 0; i < w.ndistinct; ++i) {
      if (w.slot_id[i] == s) {
        w.mult[i] += 1;
        found = true;
        break;
      }
    }
    if (!found) {
      w.slot_id[w.ndistinct] = s;
      w.mult[w.ndistinct] = 1;
      w.ndistinct += 1;
    }
  }
  const double* T = pack.tensor(k);
  for (int i = 0; i < w.ndistinct; ++i) {
    // Contract all slots except one instance of slot_id[i].
    const double* args[kMaxVecs + 1];
    int na = 0;
    bool skipped = false;
    for (int s : ref.slots) {
      if (s == w.slot_id[i] && !skipped) {
        skipped = true;
        continue;
      }
      args[na++] = p.vec(s);
    }
    contract_leave_one(T, k, d, args, w.gvec[i]);
    w.gnorm[i] = norm(w.gvec[i], d);
  }
  w.value = dot(w.gvec[0], p.vec(w.slot_id[0]), d);
}

double atom_as_double(const AtomWork& w) { return w.value; }

GradScalar atom_as_grad(const AtomWork& w, int d) {
  GradScalar s;
  s.v = w.value;
  for (int i = 0; i < w.ndistinct; ++i)
    for (int t = 0; t < d; ++t) s.g[w.slot_id[i]][t] = w.mult[i] * w.gvec[i][t];
  return s;
}

CellScalar atom_as_cell(const AtomWork& w, const AtomRef& ref, const TensorPack& pack,
                        const double* rho) {
  CellScalar s;
  double big_r = 0;  // sum of radii over all slot instances
  for (int i = 0; i < w.ndistinct; ++i) big_r += w.mult[i] * rho[w.slot_id[i]];
  double frob = pack.frob(ref.k);
  double hw = 0;
  for (int i = 0; i < w.ndistinct; ++i) {
    int slot = w.slot_id[i];
    double lip = w.mult[i] * (w.gnorm[i] + frob * std::max(0.0, big_r - rho[slot]));
    s.L[slot] += lip;
    hw += lip * rho[slot];
  }
  s.lo = w.value - hw;
  s.hi = w.value + hw;
  return s;
}

template <class S>
S make_constant(double c);
template <>
double make_constant<double>(double c) {
  return c;
}
template <>
GradScalar make_constant<GradScalar>(double c) {
  return GradScalar::constant(c);
}
template <>
CellScalar make_constant<CellScalar>(double c) {
  return CellScalar::constant(c);
}

// ---------------------------------------------------------------------------
// Equation implementations

class PolyEq final : public Equation {
 public:
  PolyEq(const TensorPack* pack, std::vector<AtomRef> atoms, std::vector<CombTerm> terms,
         std::string name)
      : pack_(pack), atoms_(std::move(atoms)), terms_(std::move(terms)), name_(std::move(name)) {}

  double eval(const TuplePoint& p) const override {
    thread_local std::vector<AtomWork> work;
    fill_work(p, work);
    return combine<double>([&](int i) { return atom_as_double(work[i]); });
  }

  GradScalar geval(const TuplePoint& p) const override {
    thread_local std::vector<AtomWork> work;
    fill_work(p, work);
    return combine<GradScalar>([&](int i) { return atom_as_grad(work[i], pack_->d); });
  }

  Interval enclose(const TuplePoint& center, const double* rho,
                   double* contrib) const override {
    thread_local std::vector<AtomWork> work;
    fill_work(center, work);
    CellScalar s =
        combine<CellScalar>([&](int i) { return atom_as_cell(work[i], atoms_[i], *pack_, rho); });
    if (contrib)
      for (int i = 0; i < kMaxVecs; ++i) contrib[i] = s.L[i] * rho[i];
    return {s.lo, s.hi};
  }

  const std::string& name() const override { return name_; }

 private:
  void fill_work(const TuplePoint& p, std::vector<AtomWork>& work) const {
    work.resize(atoms_.size());
    for (size_t i = 0; i < atoms_.size(); ++i) atom_work(*pack_, atoms_[i], p, work[i]);
  }

  template <class S, class AtomFn>
  S combine(AtomFn&& atom) const {
    S acc = make_constant<S>(0.0);
    std::vector<S> vals(atoms_.size(), make_constant<S>(0.0));
    for (size_t i = 0; i < atoms_.size(); ++i) vals[i] = atom(static_cast<int>(i));
    for (const auto& term : terms_) {
      S t = make_constant<S>(term.coeff);
      for (const auto& [ai, pw] : term.powers)
        for (int p = 0; p < pw; ++p) t = t * vals[ai];
      acc = acc + t;
    }
    return acc;
  }

  const TensorPack* pack_;
  std::vector<AtomRef> atoms_;
  std::vector<CombTerm> terms_;
  std::string name_;
};

class DotEq final : public Equation {
 public:
  DotEq(int i, int j, std::string name) : i_(i), j_(j), name_(std::move(name)) {}

  double eval(const TuplePoint& p) const override { return dot(p.vec(i_), p.vec(j_), p.d); }

  GradScalar geval(const TuplePoint& p) const override {
    GradScalar s;
    s.v = eval(p);
    for (int t = 0; t < p.d; ++t) {
      s.g[i_][t] = p.v[j_][t];
      s.g[j_][t] = p.v[i_][t];
    }
    return s;
  }

  Interval enclose(const TuplePoint& center, const double* rho,
                   double* contrib) const override {
    double v = eval(center);
    double hw = rho[i_] + rho[j_] + rho[i_] * rho[j_];
    if (contrib) {
      for (int t = 0; t < kMaxVecs; ++t) contrib[t] = 0;
      contrib[i_] += rho[i_] * (1 + rho[j_]);
      contrib[j_] += rho[j_] * (1 + rho[i_]);
    }
    return {v - hw, v + hw};
  }

  const std::string& name() const override { return name_; }

 private:
  int i_, j_;
  std::string name_;
};

class H2RowEq final : public Equation {
 public:
  H2RowEq(const TensorPack* pack, int row, std::string name)
      : pack_(pack), row_(row), name_(std::move(name)) {
    const double* H = pack_->tensor(2);
    rownorm_ = 0;
    for (int j = 0; j < pack_->d; ++j) rownorm_ += H[row_ * pack_->d + j] * H[row_ * pack_->d + j];
    rownorm_ = std::sqrt(rownorm_);
  }

  double eval(const TuplePoint& p) const override {
    const double* H = pack_->tensor(2);
    return dot(H + row_ * pack_->d, p.vec(0), pack_->d);
  }

  GradScalar geval(const TuplePoint& p) const override {
    (void)p;
    GradScalar s;
    const double* H = pack_->tensor(2);
    s.v = eval(p);
    for (int t = 0; t < pack_->d; ++t) s.g[0][t] = H[row_ * pack_->d + t];
    return s;
  }

  Interval enclose(const TuplePoint& center, const double* rho,
                   double* contrib) const override {
    double v = eval(center);
    double hw = rownorm_ * rho[0];
    if (contrib) {
      for (int t = 0; t < kMaxVecs; ++t) contrib[t] = 0;
      contrib[0] = hw;
    }
    return {v - hw, v + hw};
  }

  const std::string& name() const override { return name_; }

 private:
  const TensorPack* pack_;
  int row_;
  double rownorm_;
  std::string name_;
};

}  // namespace

std::unique_ptr<Equation> make_form_eq(const TensorPack* pack, int k, std::vector<int> slots,
                                       std::string name) {
  std::vector<AtomRef> atoms{{k, std::move(slots)}};
  std::vector<CombTerm> terms{{1.0, {{0, 1}}}};
  return std::make_unique<PolyEq>(pack, std::move(atoms), std::move(terms), std::move(name));
}

std::unique_ptr<Equation> make_poly_eq(const TensorPack* pack, std::vector<AtomRef> atoms,
                                       std::vector<CombTerm> terms, std::string name) {
  return std::make_unique<PolyEq>(pack, std::move(atoms), std::move(terms), std::move(name));
}

std::unique_ptr<Equation> make_dot_eq(int i, int j, std::string name) {
  return std::make_unique<DotEq>(i, j, std::move(name));
}

std::unique_ptr<Equation> make_h2row_eq(const TensorPack* pack, int row, std::string name) {
  return std::make_unique<H2RowEq>(pack, row, std::move(name));
}

double residual(const Problem& p, const TuplePoint& x) {
  double s = 0;
  for (const auto& e : p.eqs) {
    double v = e->eval(x);
    s += v * v;
  }
  return s;
}

int resolve_threads(const SearchConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  if (const char* env = std::getenv("STEEP_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

namespace {

// Residual and gradient of 0.5 * sum e^2, with the gradient projected onto
// the Stiefel tangent space at x.
double value_and_tangent_grad(const Problem& p, const TuplePoint& x, TuplePoint& grad) {
  const int d = x.d, k = x.k;
  grad = x;
  for (int i = 0; i < k; ++i)
    for (int t = 0; t < d; ++t) grad.v[i][t] = 0;
  double f = 0;
  for (const auto& e : p.eqs) {
    GradScalar g = e->geval(x);
    f += g.v * g.v;
    for (int i = 0; i < k; ++i)
      for (int t = 0; t < d; ++t) grad.v[i][t] += 2.0 * g.v * g.g[i][t];
  }
  // Project: G - X sym(X^T G)
  double s[kMaxVecs][kMaxVecs];
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) s[i][j] = dot(x.vec(i), grad.vec(j), d);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      double sym = 0.5 * (s[i][j] + s[j][i]);
      for (int t = 0; t < d; ++t) grad.v[j][t] -= sym * x.v[i][t];
    }
  return f;
}

double grad_norm(const TuplePoint& g) {
  double s = 0;
  for (int i = 0; i < g.k; ++i) s += dot(g.vec(i), g.vec(i), g.d);
  return std::sqrt(s);
}

// Orthonormal tangent basis at x: per-vector normal directions plus the
// in-frame rotation generators. Size k(d-k) + k(k-1)/2.
std::vector<TuplePoint> tangent_basis(const TuplePoint& x) {
  const int d = x.d, k = x.k;
  std::vector<TuplePoint> basis;
  // Complete the frame to an orthonormal basis of R^d.
  std::vector<std::array<double, kMaxDim>> comp;
  {
    std::vector<std::array<double, kMaxDim>> cols;
    for (int i = 0; i < k; ++i) cols.push_back(x.v[i]);
    for (int axis = 0; axis < d && static_cast<int>(cols.size()) < d; ++axis) {
      std::array<double, kMaxDim> c{};
      c[axis] = 1.0;
      for (const auto& prev : cols) {
        double pr = dot(c.data(), prev.data(), d);
        for (int t = 0; t < d; ++t) c[t] -= pr * prev[t];
      }
      double nn = norm(c.data(), d);
      if (nn > 1e-8) {
        for (int t = 0; t < d; ++t) c[t] /= nn;
        cols.push_back(c);
        comp.push_back(c);
      }
    }
  }
  for (int i = 0; i < k; ++i) {
    for (const auto& c : comp) {
      TuplePoint b = x;
      for (int v = 0; v < k; ++v)
        for (int t = 0; t < d; ++t) b.v[v][t] = 0;
      for (int t = 0; t < d; ++t) b.v[i][t] = c[t];
      basis.push_back(b);
    }
  }
  const double inv_sqrt2 = 0.7071067811865475;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      TuplePoint b = x;
      for (int v = 0; v < k; ++v)
        for (int t = 0; t < d; ++t) b.v[v][t] = 0;
      for (int t = 0; t < d; ++t) {
        b.v[i][t] = inv_sqrt2 * x.v[j][t];
        b.v[j][t] = -inv_sqrt2 * x.v[i][t];
      }
      basis.push_back(b);
    }
  return basis;
}

// Zero out tiny components and re-orthonormalize; keep the result only when
// it still solves the system. Flat valleys leave polished witnesses a few
// 1e-3 off the exact variety; when the variety point is sparse this
// recovers it exactly, and the residual check keeps the step sound.
void snap_witness(const Problem& p, TuplePoint& x, double snap_tol, double witness_tol) {
  TuplePoint cand = x;
  bool changed = false;
  for (int i = 0; i < x.k; ++i)
    for (int t = 0; t < x.d; ++t)
      if (cand.v[i][t] != 0.0 && std::abs(cand.v[i][t]) < snap_tol) {
        cand.v[i][t] = 0.0;
        changed = true;
      }
  if (!changed) return;
  retract(cand);
  if (residual(p, cand) < witness_tol) x = cand;
}

// Gauss-Newton refinement of a near-solution. On flat zero sets the rate
// degrades to linear, so allow plenty of passes; each one is tiny.
void polish(const Problem& p, TuplePoint& x) {
  const int ne = static_cast<int>(p.eqs.size());
  for (int pass = 0; pass < 80; ++pass) {
    std::vector<TuplePoint> basis = tangent_basis(x);
    const int nb = static_cast<int>(basis.size());
    Eigen::MatrixXd J(ne, nb);
    Eigen::VectorXd e(ne);
    for (int r = 0; r < ne; ++r) {
      GradScalar g = p.eqs[r]->geval(x);
      e(r) = g.v;
      for (int b = 0; b < nb; ++b) {
        double acc = 0;
        for (int i = 0; i < x.k; ++i) acc += dot(g.g[i].data(), basis[b].vec(i), x.d);
        J(r, b) = acc;
      }
    }
    double f0 = e.squaredNorm();
    if (f0 < 1e-32) return;
    Eigen::VectorXd step =
        (J.transpose() * J + 1e-14 * Eigen::MatrixXd::Identity(nb, nb)).ldlt().solve(-J.transpose() * e);
    double scale = 1.0;
    bool improved = false;
    for (int tries = 0; tries < 10; ++tries) {
      TuplePoint cand = x;
      for (int b = 0; b < nb; ++b)
        for (int i = 0; i < x.k; ++i)
          for (int t = 0; t < x.d; ++t) cand.v[i][t] += scale * step(b) * basis[b].v[i][t];
      retract(cand);
      if (residual(p, cand) < f0) {
        x = cand;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) return;
  }
}

TuplePoint random_start(const Manifold& mf, uint64_t seed) {
  TuplePoint x;
  x.d = mf.d;
  x.k = mf.k;
  uint64_t state = seed;
  for (int i = 0; i < mf.k; ++i)
    for (int t = 0; t < mf.d; ++t) x.v[i][t] = gaussian(state);
  retract(x);
  return x;
}

// Axis-aligned arrangements catch coordinate-plane witnesses exactly.
std::vector<TuplePoint> axis_starts(const Manifold& mf, int cap) {
  std::vector<TuplePoint> out;
  std::vector<int> axes(mf.d);
  for (int i = 0; i < mf.d; ++i) axes[i] = i;
  std::vector<int> pick;
  std::function<void(int)> rec = [&](int depth) {
    if (static_cast<int>(out.size()) >= cap) return;
    if (depth == mf.k) {
      TuplePoint x;
      x.d = mf.d;
      x.k = mf.k;
      for (int i = 0; i < mf.k; ++i) x.v[i][pick[i]] = 1.0;
      out.push_back(x);
      return;
    }
    for (int a = 0; a < mf.d; ++a) {
      if (std::find(pick.begin(), pick.end(), a) != pick.end()) continue;
      pick.push_back(a);
      rec(depth + 1);
      pick.pop_back();
    }
  };
  rec(0);
  return out;
}

}  // namespace

SearchOutcome minimize(const Problem& p, const SearchConfig& cfg) {
  SearchOutcome out;
  out.best_value = std::numeric_limits<double>::infinity();
  std::vector<TuplePoint> starts = axis_starts(p.mf, cfg.starts / 4 + 1);
  while (static_cast<int>(starts.size()) < cfg.starts) {
    uint64_t s = cfg.seed * 0x9e3779b97f4a7c15ULL + starts.size() * 0x100000001b3ULL + 7;
    starts.push_back(random_start(p.mf, s));
  }
  starts.resize(cfg.starts);
  std::vector<StartSummary> summaries(starts.size());
  std::vector<TuplePoint> finals(starts.size());

  auto run_one = [&](int idx) {
    TuplePoint x = starts[idx];
    TuplePoint grad;
    double f = value_and_tangent_grad(p, x, grad);
    double step = 0.5;
    int it = 0;
    for (; it < cfg.max_iters; ++it) {
      double gn = grad_norm(grad);
      if (gn < 1e-14 || f < 1e-30) break;
      bool moved = false;
      for (int tries = 0; tries < 40; ++tries) {
        TuplePoint cand = x;
        for (int i = 0; i < x.k; ++i)
          for (int t = 0; t < x.d; ++t) cand.v[i][t] -= step * grad.v[i][t];
        retract(cand);
        double fc = residual(p, cand);
        if (fc < f - 1e-4 * step * gn * gn) {
          x = cand;
          f = fc;
          moved = true;
          step = std::min(step * 2.0, 4.0);
          break;
        }
        step *= 0.5;
        if (step < 1e-18) break;
      }
      if (!moved) break;
      f = value_and_tangent_grad(p, x, grad);
    }
    polish(p, x);
    if (residual(p, x) < cfg.witness_tol) snap_witness(p, x, cfg.snap_tol, cfg.witness_tol);
    finals[idx] = x;
    summaries[idx] = {residual(p, x), it};
  };

  int nthreads = resolve_threads(cfg);
  if (nthreads <= 1 || starts.size() < 4) {
    for (size_t i = 0; i < starts.size(); ++i) run_one(static_cast<int>(i));
  } else {
    std::vector<std::thread> workers;
    std::atomic<size_t> next{0};
    for (int t = 0; t < nthreads; ++t)
      workers.emplace_back([&]() {
        for (;;) {
          size_t i = next.fetch_add(1);
          if (i >= starts.size()) return;
          run_one(static_cast<int>(i));
        }
      });
    for (auto& w : workers) w.join();
  }

  // Deterministic reduce: min by (value, start index).
  for (size_t i = 0; i < starts.size(); ++i) {
    if (summaries[i].value < out.best_value) {
      out.best_value = summaries[i].value;
      out.best = finals[i];
    }
  }
  out.start_summaries = std::move(summaries);
  out.final_points = std::move(finals);
  out.evals = static_cast<unsigned long long>(starts.size());
  return out;
}

namespace {

struct FactorBox {
  int8_t axis = 0;
  std::array<double, kMaxDim - 1> lo{};
  std::array<double, kMaxDim - 1> hi{};
  double descend_gate = 1e30;  // descend only once the widest axis is below
};

struct Cell {
  std::array<FactorBox, kMaxVecs> f;
};

// Chart: q in [-1,1]^(d-1) on the face {x_axis = 1}, mapped to S(q)/|S(q)|.
// For any q in the box, |phi(q) - phi(mid)| <= 2 |q - mid| / |S(mid)|.
void cell_geometry(const Cell& c, int d, int k, TuplePoint& center, double* rho) {
  center.d = d;
  center.k = k;
  for (int i = 0; i < k; ++i) {
    const FactorBox& fb = c.f[i];
    double s[kMaxDim];
    int qi = 0;
    double halfdiag2 = 0;
    for (int t = 0; t < d; ++t) {
      if (t == fb.axis) {
        s[t] = 1.0;
      } else {
        s[t] = 0.5 * (fb.lo[qi] + fb.hi[qi]);
        double hw = 0.5 * (fb.hi[qi] - fb.lo[qi]);
        halfdiag2 += hw * hw;
        ++qi;
      }
    }
    double nn = norm(s, d);
    for (int t = 0; t < d; ++t) center.v[i][t] = s[t] / nn;
    rho[i] = 2.0 * std::sqrt(halfdiag2) / nn;
  }
}

}  // namespace

CertifyResult certify_positive(const Problem& p, const SearchConfig& cfg) {
  CertifyResult res;
  const int d = p.mf.d, k = p.mf.k;
  if (p.mf.intrinsic_dim() > cfg.dim_ceiling) {
    res.dimension_too_large = true;
    return res;
  }

  // Hierarchical covering, one level per tuple vector: a level refines its
  // own factor against the equations whose deepest slot is that factor, and
  // descends to the next level only for cells its own equations cannot
  // discard. This keeps the refinement of different factors from
  // multiplying against each other.
  struct Engine {
    const SearchConfig& cfg;
    int d = 0, k = 0;
    std::vector<std::vector<const Equation*>> level_eqs;
    double s_req = 0;
    unsigned long long cells = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    TuplePoint center;
    double rho[kMaxVecs] = {};
    bool debug = false;
    unsigned long long n_prune[kMaxVecs] = {}, n_split[kMaxVecs] = {}, n_descend[kMaxVecs] = {},
                       n_fail[kMaxVecs] = {}, n_weak[kMaxVecs] = {};
    unsigned long long descend_rho_hist[kMaxVecs][16] = {};
    unsigned long long inner_cost[kMaxVecs] = {};
    unsigned long long prune_rho_hist[kMaxVecs][16] = {};

    enum class R { Pruned, Fail, Budget };
    struct FailInfo {
      int level = 0;      // which level must shrink
      double factor = 4;  // by how much
    };
    struct Outcome {
      R r;
      FailInfo fail;
    };

    explicit Engine(const SearchConfig& c) : cfg(c) {}

    static void factor_geometry(const FactorBox& fb, int d, double* vec, double& rho_out) {
      double s[kMaxDim];
      int qi = 0;
      double halfdiag2 = 0;
      for (int t = 0; t < d; ++t) {
        if (t == fb.axis) {
          s[t] = 1.0;
        } else {
          s[t] = 0.5 * (fb.lo[qi] + fb.hi[qi]);
          double hw = 0.5 * (fb.hi[qi] - fb.lo[qi]);
          halfdiag2 += hw * hw;
          ++qi;
        }
      }
      double nn = norm(s, d);
      for (int t = 0; t < d; ++t) vec[t] = s[t] / nn;
      rho_out = 2.0 * std::sqrt(halfdiag2) / nn;
    }

    Outcome run_level(int lvl) {
      std::vector<FactorBox> stack;
      for (int face = 0; face < d; ++face) {
        FactorBox fb;
        fb.axis = static_cast<int8_t>(face);
        for (int q = 0; q < d - 1; ++q) {
          fb.lo[q] = -1.0;
          fb.hi[q] = 1.0;
        }
        stack.push_back(fb);
      }
      const bool deepest = (lvl + 1 == k);
      while (!stack.empty()) {
        if (cells >= cfg.certify_budget) return {R::Budget, {}};
        FactorBox fb = stack.back();
        stack.pop_back();
        cells += 1;
        factor_geometry(fb, d, center.vec(lvl), rho[lvl]);
        for (int deep = lvl + 1; deep < k; ++deep) rho[deep] = 0;

        bool pruned = false;
        double weak_slack = 0;
        double best_score = -1;
        double best_own = 0, best_need = 0;
        // Cheapest shrink request among equations blocked by outer radii.
        bool blocked = false;
        FailInfo blocked_req{0, 1e9};
        double contrib[kMaxVecs];
        for (const Equation* e : level_eqs[lvl]) {
          Interval iv = e->enclose(center, rho, contrib);
          if (iv.lo > s_req || iv.hi < -s_req) {
            min_slack = std::min(min_slack, iv.slack());
            pruned = true;
            n_prune[lvl] += 1;
            if (debug) {
              int b = std::min(15, std::max(0, (int)(-std::log2(rho[lvl] + 1e-12))));
              prune_rho_hist[lvl][b] += 1;
            }
            break;
          }
          weak_slack = std::max(weak_slack, iv.slack());
          double mid = std::abs(iv.lo + iv.hi) * 0.5;
          if (mid <= 1.25 * s_req) continue;
          double own = contrib[lvl];
          double shallow = 0;
          for (int i = 0; i < lvl; ++i) shallow += contrib[i];
          double room = mid - 1.25 * s_req;
          if (shallow >= room) {
            // Even a point cell here cannot prune: some outer factor must
            // shrink first. Ask the dominant contributor.
            int lstar = 0;
            double cmax = -1;
            for (int i = 0; i < lvl; ++i)
              if (contrib[i] > cmax) {
                cmax = contrib[i];
                lstar = i;
              }
            double target = room - (shallow - cmax);
            double factor = (target > 1e-12) ? cmax / target : 8.0;
            factor = std::min(std::max(factor, 2.0), 8.0);
            if (factor < blocked_req.factor || (lstar < blocked_req.level && blocked)) {
              blocked_req = {lstar, factor};
            }
            blocked = true;
            continue;
          }
          double score = mid / (iv.hi - iv.lo + 1e-300);
          if (score > best_score) {
            best_score = score;
            best_own = own;
            best_need = room - shallow;
          }
        }
        if (pruned) continue;

        int best_q = 0;
        double best_w = -1;
        for (int q = 0; q < d - 1; ++q) {
          double w = fb.hi[q] - fb.lo[q];
          if (w > best_w) {
            best_w = w;
            best_q = q;
          }
        }
        bool can_split = best_w >= cfg.cell_floor;

        auto split_cell = [&](double gate) {
          n_split[lvl] += 1;
          double mid = 0.5 * (fb.lo[best_q] + fb.hi[best_q]);
          FactorBox left = fb, right = fb;
          left.hi[best_q] = mid;
          right.lo[best_q] = mid;
          left.descend_gate = gate;
          right.descend_gate = gate;
          stack.push_back(left);
          stack.push_back(right);
        };

        (void)best_own;
        (void)best_need;
        if (!deepest && best_w > fb.descend_gate && can_split) {
          // A previous descent from this lineage failed; keep shrinking
          // (own-equation shells get pruned along the way).
          split_cell(fb.descend_gate);
          continue;
        }

        if (!deepest) {
          n_descend[lvl] += 1;
          if (debug) {
            int b = std::min(15, std::max(0, (int)(-std::log2(rho[lvl] + 1e-12))));
            descend_rho_hist[lvl][b] += 1;
          }
          unsigned long long pre = cells;
          Outcome r = run_level(lvl + 1);
          if (debug) inner_cost[lvl] += cells - pre;
          if (r.r == R::Budget) return r;
          if (r.r == R::Pruned) continue;
          if (r.fail.level < lvl) {
            n_fail[lvl] += 1;
            return r;  // a shallower factor must shrink; not our call
          }
          if (can_split) {
            // Shrink as requested before descending again.
            split_cell(best_w / r.fail.factor);
            continue;
          }
          n_fail[lvl] += 1;
          return {R::Fail, {std::max(lvl - 1, 0), 4.0}};
        }

        // Deepest level.
        if (weak_slack > 1e-9 && best_score < 0) {
          min_slack = std::min(min_slack, weak_slack);
          n_weak[lvl] += 1;
          continue;
        }
        if (blocked && best_score < 0) {
          n_fail[lvl] += 1;
          return {R::Fail, blocked_req};
        }
        if (!can_split) {
          n_fail[lvl] += 1;
          return {R::Fail, {std::max(lvl - 1, 0), 4.0}};
        }
        split_cell(fb.descend_gate);
      }
      return {R::Pruned, {}};
    }
  };

  Engine eng(cfg);
  eng.d = d;
  eng.k = k;
  eng.center.d = d;
  eng.center.k = k;
  eng.s_req = std::sqrt(std::max(cfg.margin_tol, 1e-300));
  eng.debug = std::getenv("STEEP_CERT_DEBUG") != nullptr;

  // Orthonormality constraints participate like any equation; an equation
  // lives at the level of its deepest slot.
  std::vector<std::unique_ptr<Equation>> owned;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      owned.push_back(make_dot_eq(i, j, "orth(" + std::to_string(i) + "," + std::to_string(j) + ")"));
  eng.level_eqs.assign(k, {});
  auto place = [&](const Equation* e, int max_slot) { eng.level_eqs[max_slot].push_back(e); };
  {
    int oi = 0;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) place(owned[oi++].get(), j);
  }
  for (const auto& e : p.eqs) {
    // Deepest slot from a probe: equations report their width contributions.
    TuplePoint probe;
    probe.d = d;
    probe.k = k;
    for (int i = 0; i < k; ++i) probe.v[i][i % d] = 1.0;
    double rr[kMaxVecs];
    for (int i = 0; i < k; ++i) rr[i] = 1.0;
    double contrib[kMaxVecs];
    e->enclose(probe, rr, contrib);
    int max_slot = 0;
    for (int i = 0; i < k; ++i)
      if (contrib[i] > 1e-12) max_slot = i;
    place(e.get(), max_slot);
  }

  Engine::Outcome r = eng.run_level(0);
  res.cells = eng.cells;
  if (eng.debug) {
    for (int l = 0; l < k; ++l) {
      std::fprintf(stderr, "level %d: prune=%llu split=%llu descend=%llu fail=%llu weak=%llu innercost=%llu\n",
                   l, eng.n_prune[l], eng.n_split[l], eng.n_descend[l], eng.n_fail[l],
                   eng.n_weak[l], eng.inner_cost[l]);
      std::fprintf(stderr, "  prune rho hist:");
      for (int b = 0; b < 12; ++b) std::fprintf(stderr, " %llu", eng.prune_rho_hist[l][b]);
      std::fprintf(stderr, "\n  descend rho hist:");
      for (int b = 0; b < 12; ++b) std::fprintf(stderr, " %llu", eng.descend_rho_hist[l][b]);
      std::fprintf(stderr, "\n");
    }
  }
  if (r.r == Engine::R::Budget) {
    res.budget_exhausted = true;
    return res;
  }
  if (r.r == Engine::R::Fail) return res;
  res.lower_bound = eng.min_slack * eng.min_slack;
  return res;
}

std::vector<TuplePoint> cluster_tuples(const std::vector<TuplePoint>& pts, double angular_tol) {
  std::vector<TuplePoint> reps;
  auto canonical = [](TuplePoint t) {
    for (int i = 0; i < t.k; ++i) {
      for (int j = 0; j < t.d; ++j) {
        if (std::abs(t.v[i][j]) > 1e-9) {
          if (t.v[i][j] < 0)
            for (int q = 0; q < t.d; ++q) t.v[i][q] = -t.v[i][q];
          break;
        }
      }
    }
    return t;
  };
  auto distance = [](const TuplePoint& a, const TuplePoint& b) {
    double worst = 0;
    for (int i = 0; i < a.k; ++i) {
      double dp = 0, dm = 0;
      for (int t = 0; t < a.d; ++t) {
        double x = a.v[i][t] - b.v[i][t], y = a.v[i][t] + b.v[i][t];
        dp += x * x;
        dm += y * y;
      }
      worst = std::max(worst, std::min(std::sqrt(dp), std::sqrt(dm)));
    }
    return worst;
  };
  for (const auto& p : pts) {
    TuplePoint cp = canonical(p);
    bool merged = false;
    for (const auto& r : reps) {
      if (distance(cp, r) <= angular_tol) {
        merged = true;
        break;
      }
    }
    if (!merged) reps.push_back(cp);
  }
  return reps;
}

std::vector<std::vector<double>> cluster_witnesses(const std::vector<std::vector<double>>& pts,
                                                   double angular_tol) {
  std::vector<TuplePoint> tuples;
  for (const auto& p : pts) {
    TuplePoint t;
    t.d = static_cast<int>(p.size());
    t.k = 1;
    for (int i = 0; i < t.d; ++i) t.v[0][i] = p[i];
    tuples.push_back(t);
  }
  std::vector<std::vector<double>> out;
  for (const auto& t : cluster_tuples(tuples, angular_tol))
    out.push_back(std::vector<double>(t.v[0].begin(), t.v[0].begin() + t.d));
  return out;
}

}  // namespace steep::search
