#include "steep/conditions.hpp"

#include <algorithm>
#include <cmath>

namespace steep::cond {

using search::AtomRef;
using search::CombTerm;
using search::Manifold;
using search::Problem;
using search::SearchOutcome;
using search::TuplePoint;

const char* status_name(Status s) {
  switch (s) {
    case Status::Holds:
      return "holds";
    case Status::Violated:
      return "violated";
    default:
      return "unknown";
  }
}

const char* verdict_name(VerdictKind v) {
  switch (v) {
    case VerdictKind::SteepCertified:
      return "steep_certified";
    case VerdictKind::NotCertified:
      return "not_certified";
    case VerdictKind::DegenerateGradient:
      return "degenerate_gradient";
    default:
      return "inconclusive";
  }
}

namespace {

double vec_norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Gradient direction and pulled-back tensors on its orthogonal hyperplane.
struct WorkFrame {
  std::vector<double> grad;
  double grad_norm = 0;
  std::vector<std::vector<double>> basis;  // n x (n-1), orthonormal columns
  TensorPack wpack;                        // orders 2..r pulled back (order 1 kept too)
};

WorkFrame make_work_frame(const Jet& j) {
  WorkFrame w;
  w.grad = gradient(j);
  w.grad_norm = vec_norm(w.grad);
  w.basis = orthonormal_complement(w.grad);
  w.wpack.d = j.n() - 1;
  w.wpack.r = j.r();
  w.wpack.data.resize(j.r());
  for (int k = 1; k <= j.r(); ++k)
    w.wpack.data[k - 1] = pullback_tensor(j.pack().tensor(k), k, j.n(), w.basis);
  w.wpack.compute_norms();
  return w;
}

std::vector<double> to_ambient(const WorkFrame& w, const double* wv) {
  int n = static_cast<int>(w.grad.size());
  std::vector<double> out(n, 0.0);
  for (size_t c = 0; c < w.basis.size(); ++c)
    for (int i = 0; i < n; ++i) out[i] += wv[c] * w.basis[c][i];
  return out;
}

// --- problem builders -------------------------------------------------------

Problem degeneracy_problem(const Jet& j, int r) {
  Problem p;
  p.mf = {j.n(), 1};
  p.id = "degeneracy_r" + std::to_string(r);
  for (int k = 1; k <= r; ++k) {
    p.eqs.push_back(search::make_form_eq(&j.pack(), k, std::vector<int>(k, 0),
                                         "h" + std::to_string(k) + "[v..v]"));
  }
  return p;
}

// Tuple slot order: 0 = v, 1 = u, 2 = w.
Problem m2_problem(const TensorPack* wp, int n) {
  Problem p;
  p.mf = {wp->d, 2};
  p.id = "m2";
  p.eqs.push_back(search::make_form_eq(wp, 2, {0, 0}, "h2[v,v]"));
  p.eqs.push_back(search::make_form_eq(wp, 3, {0, 0, 0}, "h3[v,v,v]"));
  p.eqs.push_back(search::make_form_eq(wp, 2, {0, 1}, "h2[u,v]"));
  {
    std::vector<AtomRef> atoms{{2, {1, 1}}, {4, {0, 0, 0, 0}}, {3, {0, 0, 1}}};
    std::vector<CombTerm> terms{{1.0, {{0, 1}, {1, 1}}}, {-3.0, {{2, 2}}}};
    p.eqs.push_back(search::make_poly_eq(wp, atoms, terms, "q1"));
  }
  if (n >= 4) {
    std::vector<AtomRef> atoms{
        {3, {0, 0, 1}},         // 0: h3[v,v,u]
        {3, {0, 1, 1}},         // 1: h3[u,u,v]
        {5, {0, 0, 0, 0, 0}},   // 2: h5[v^5]
        {2, {1, 1}},            // 3: h2[u,u]
        {4, {0, 0, 0, 1}},      // 4: h4[v,v,v,u]
    };
    std::vector<CombTerm> terms{
        {15.0, {{0, 2}, {1, 1}}}, {1.0, {{2, 1}, {3, 2}}}, {-10.0, {{4, 1}, {0, 1}, {3, 1}}}};
    p.eqs.push_back(search::make_poly_eq(wp, atoms, terms, "q2"));
  }
  return p;
}

Problem m3_n5_problem(const TensorPack* wp) {
  Problem p;
  p.mf = {wp->d, 3};
  p.id = "m3";
  p.eqs.push_back(search::make_form_eq(wp, 2, {0, 0}, "h2[v,v]"));
  p.eqs.push_back(search::make_form_eq(wp, 3, {0, 0, 0}, "h3[v,v,v]"));
  p.eqs.push_back(search::make_form_eq(wp, 2, {0, 1}, "h2[u,v]"));
  p.eqs.push_back(search::make_form_eq(wp, 2, {0, 2}, "h2[w,v]"));
  {
    std::vector<AtomRef> atoms{
        {4, {0, 0, 0, 0}},  // 0: F = h4[v^4]
        {2, {1, 1}},        // 1: auu
        {2, {1, 2}},        // 2: auw
        {2, {2, 2}},        // 3: aww
        {3, {0, 0, 1}},     // 4: P = h3[u,v,v]
        {3, {0, 0, 2}},     // 5: Q = h3[v,v,w]
    };
    // (F auu - 6 P^2)(aww auu - auw^2) + 12 P Q auu auw - 6 P^2 auw^2 - 6 Q^2 auu^2,
    // expanded (the P^2 auw^2 terms cancel).
    std::vector<CombTerm> terms{
        {1.0, {{0, 1}, {1, 2}, {3, 1}}},   // F auu^2 aww
        {-1.0, {{0, 1}, {1, 1}, {2, 2}}},  // -F auu auw^2
        {-6.0, {{4, 2}, {1, 1}, {3, 1}}},  // -6 P^2 auu aww
        {12.0, {{4, 1}, {5, 1}, {1, 1}, {2, 1}}},
        {-6.0, {{5, 2}, {1, 2}}},
    };
    p.eqs.push_back(search::make_poly_eq(wp, atoms, terms, "q3"));
  }
  return p;
}

// For the top-dimensional conditions the auxiliary vectors span the whole
// complement of v, so a full-rank solution exists exactly when the
// restricted Hessian kills v; the search runs over v alone.
Problem kernel_problem(const TensorPack* wp, bool with_cubic) {
  Problem p;
  p.mf = {wp->d, 1};
  p.id = with_cubic ? "kernel+cubic" : "kernel";
  for (int i = 0; i < wp->d; ++i)
    p.eqs.push_back(search::make_h2row_eq(wp, i, "h2row" + std::to_string(i)));
  if (with_cubic)
    p.eqs.push_back(search::make_form_eq(wp, 3, {0, 0, 0}, "h3[v,v,v]"));
  return p;
}

// Orthonormal completion of v inside the working space (columns count = want).
std::vector<std::vector<double>> complete_frame(const std::vector<double>& v, int want) {
  int d = static_cast<int>(v.size());
  std::vector<std::vector<double>> cols{v};
  for (int axis = 0; axis < d && static_cast<int>(cols.size()) < want + 1; ++axis) {
    std::vector<double> c(d, 0.0);
    c[axis] = 1.0;
    for (const auto& prev : cols) {
      double pr = 0;
      for (int i = 0; i < d; ++i) pr += c[i] * prev[i];
      for (int i = 0; i < d; ++i) c[i] -= pr * prev[i];
    }
    double nn = vec_norm(c);
    if (nn > 1e-6) {
      for (int i = 0; i < d; ++i) c[i] /= nn;
      cols.push_back(c);
    }
  }
  cols.erase(cols.begin());
  return cols;
}

struct SolveResult {
  Status status = Status::Unknown;
  double best = 0;
  std::optional<double> bound;
  std::vector<TuplePoint> witnesses;  // working-space tuples
  unsigned long long starts = 0;
  unsigned long long cells = 0;
};

SolveResult run_problem(const Problem& p, const SearchConfig& cfg) {
  SolveResult r;
  SearchOutcome out = search::minimize(p, cfg);
  r.best = out.best_value;
  r.starts = out.evals;
  if (out.best_value < cfg.witness_tol) {
    r.status = Status::Violated;
    std::vector<TuplePoint> hits;
    for (size_t i = 0; i < out.final_points.size(); ++i)
      if (out.start_summaries[i].value < cfg.witness_tol) hits.push_back(out.final_points[i]);
    r.witnesses = search::cluster_tuples(hits, cfg.cluster_tol);
    return r;
  }
  if (cfg.mode == SearchConfig::Mode::Certify) {
    search::CertifyResult cert = search::certify_positive(p, cfg);
    r.cells = cert.cells;
    if (cert.lower_bound && *cert.lower_bound >= cfg.margin_tol) {
      r.status = Status::Holds;
      r.bound = cert.lower_bound;
      return r;
    }
  }
  r.status = Status::Unknown;
  return r;
}

}  // namespace

DegeneracyResult r_jet_degeneracy(const Jet& j, int r, const SearchConfig& cfg) {
  if (r < 1 || r > j.r()) throw std::out_of_range("degeneracy order out of range");
  Problem p = degeneracy_problem(j, r);
  SolveResult s = run_problem(p, cfg);
  DegeneracyResult res;
  res.best_residual = s.best;
  res.starts = s.starts;
  res.cells = s.cells;
  res.certified_bound = s.bound;
  if (s.status == Status::Violated) {
    res.status = DegeneracyResult::Kind::Degenerate;
    for (const auto& t : s.witnesses)
      res.witnesses.push_back(std::vector<double>(t.v[0].begin(), t.v[0].begin() + t.d));
  } else if (s.status == Status::Holds) {
    res.status = DegeneracyResult::Kind::NonDegenerate;
  } else {
    res.status = DegeneracyResult::Kind::Unknown;
  }
  return res;
}

bool two_jet_oracle(const Jet& j, const SearchConfig& cfg) {
  if (j.r() < 2) throw OrderTooLow(j.r());
  std::vector<double> g = gradient(j);
  if (vec_norm(g) <= cfg.gradient_tol) throw DegenerateGradientError();
  WorkFrame w = make_work_frame(j);
  int d = j.n() - 1;
  std::vector<std::vector<double>> hw(d, std::vector<double>(d));
  const double* t2 = w.wpack.tensor(2);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) hw[a][b] = t2[a * d + b];
  std::vector<double> eig = symmetric_eigenvalues(hw);
  const double tol = 1e-9;
  bool all_pos = true, all_neg = true;
  for (double e : eig) {
    if (e <= tol) all_pos = false;
    if (e >= -tol) all_neg = false;
  }
  return all_pos || all_neg;
}

ConditionRecord psi_star_membership(const Jet& j, int m, const SearchConfig& cfg) {
  const int n = j.n();
  if (m < 2 || m > n - 1) throw std::invalid_argument("invalid subspace dimension m");
  if (j.r() < 5) throw OrderTooLow(j.r());
  WorkFrame w = make_work_frame(j);
  ConditionRecord rec;
  rec.id = "n" + std::to_string(n) + ".cond" + std::to_string(m);

  Problem p = [&]() {
    if (m == 2) return m2_problem(&w.wpack, n);
    if (m == 3 && n == 5) return m3_n5_problem(&w.wpack);
    if (m == 3 && n == 4) return kernel_problem(&w.wpack, true);
    return kernel_problem(&w.wpack, false);  // m == 4, n == 5
  }();

  SolveResult s = run_problem(p, cfg);
  rec.status = s.status;
  rec.best_residual = s.best;
  rec.certified_bound = s.bound;
  rec.starts = s.starts;
  rec.cells = s.cells;
  if (s.status == Status::Violated && !s.witnesses.empty()) {
    const TuplePoint& t = s.witnesses.front();
    std::vector<std::vector<double>> tuple_w;
    for (int i = 0; i < t.k; ++i)
      tuple_w.push_back(std::vector<double>(t.v[i].begin(), t.v[i].begin() + t.d));
    if (p.mf.k == 1) {
      // Kernel formulation: complete v with spanning partners of its
      // orthogonal complement inside the working space.
      auto completion = complete_frame(tuple_w[0], m - 1);
      for (auto& c : completion) tuple_w.push_back(std::move(c));
    }
    for (const auto& wv : tuple_w) rec.witness.push_back(to_ambient(w, wv.data()));
    // Safety: a reported violation must be a full-rank tuple.
    if (rank_deficient(rec.witness, cfg.rank_tol)) {
      rec.status = Status::Unknown;
      rec.witness.clear();
      rec.detail = "search hit a rank-deficient tuple; discarded";
    }
  }
  return rec;
}

std::vector<double> psi_residuals(const Jet& j, int m, bool starred,
                                  const std::vector<std::vector<double>>& vectors,
                                  const formal::BValues& params) {
  formal::FormalSystem sys =
      starred ? formal::psi_star_system(j.n(), m) : formal::psi_system(j.n(), m);
  return formal::instantiate(sys, j, vectors, params);
}

ConditionReport check_steepness(const Jet& j, const SearchConfig& cfg) {
  const int n = j.n();
  if (n >= 6) throw UnsupportedDimension(n);
  if (n < 2) throw std::invalid_argument("need at least two variables");
  if (j.r() < 5) throw OrderTooLow(j.r());

  ConditionReport rep;
  rep.n = n;
  rep.r = j.r();
  rep.point = j.point();
  rep.config = cfg;
  rep.note =
      "sufficient conditions only - NotCertified does not imply non-steep; "
      "it means no certificate was established at this jet order";

  std::vector<double> g = gradient(j);
  if (vec_norm(g) <= cfg.gradient_tol) {
    rep.verdict = VerdictKind::DegenerateGradient;
    return rep;
  }

  // Condition 1: diagonal-system nondegeneracy (order 4 when n = 5).
  {
    int order = (n == 5) ? 4 : 5;
    DegeneracyResult d = r_jet_degeneracy(j, order, cfg);
    ConditionRecord rec;
    rec.id = "n" + std::to_string(n) + ".cond1";
    rec.best_residual = d.best_residual;
    rec.certified_bound = d.certified_bound;
    rec.starts = d.starts;
    rec.cells = d.cells;
    switch (d.status) {
      case DegeneracyResult::Kind::NonDegenerate:
        rec.status = Status::Holds;
        break;
      case DegeneracyResult::Kind::Degenerate: {
        rec.status = Status::Violated;
        for (const auto& v : d.witnesses) rec.witness.push_back(v);
        rec.detail = "order-" + std::to_string(order) + " diagonal system has a unit solution";
        break;
      }
      default:
        rec.status = Status::Unknown;
    }
    rep.conditions.push_back(std::move(rec));
  }

  for (int m = 2; m <= n - 1; ++m) rep.conditions.push_back(psi_star_membership(j, m, cfg));

  bool any_violated = false, all_hold = true;
  for (const auto& c : rep.conditions) {
    if (c.status == Status::Violated) any_violated = true;
    if (c.status != Status::Holds) all_hold = false;
  }
  rep.verdict = any_violated ? VerdictKind::NotCertified
                             : (all_hold ? VerdictKind::SteepCertified : VerdictKind::Inconclusive);
  return rep;
}

}  // namespace steep::cond
