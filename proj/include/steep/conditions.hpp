#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "steep/formal.hpp"
#include "steep/indices.hpp"
#include "steep/jet.hpp"
#include "steep/linalg.hpp"
#include "steep/search.hpp"

namespace steep::cond {

using search::SearchConfig;

enum class Status { Holds, Violated, Unknown };
enum class VerdictKind { SteepCertified, NotCertified, DegenerateGradient, Inconclusive };

struct DegenerateGradientError : std::runtime_error {
  DegenerateGradientError() : std::runtime_error("gradient vanishes at the test point") {}
};
struct UnsupportedDimension : std::invalid_argument {
  explicit UnsupportedDimension(int n)
      : std::invalid_argument(
            "n = " + std::to_string(n) +
            " is not supported: for six or more variables the five-jet conditions carry no "
            "information (every three-jet-degenerate point satisfies them)") {}
};
struct OrderTooLow : std::invalid_argument {
  explicit OrderTooLow(int r)
      : std::invalid_argument("jet order " + std::to_string(r) + " too low; order 5 required") {}
};

const char* status_name(Status s);
const char* verdict_name(VerdictKind v);

/// Evidence for one theorem condition.
struct ConditionRecord {
  std::string id;
  Status status = Status::Unknown;
  double best_residual = 0;
  std::optional<double> certified_bound;
  /// Witness tuple in ambient coordinates (unit vectors), violation only.
  std::vector<std::vector<double>> witness;
  unsigned long long starts = 0;
  unsigned long long cells = 0;
  std::string detail;
};

struct DegeneracyResult {
  enum class Kind { NonDegenerate, Degenerate, Unknown };
  Kind status = Kind::Unknown;
  std::vector<std::vector<double>> witnesses;  // clustered unit representatives
  double best_residual = 0;
  std::optional<double> certified_bound;
  unsigned long long starts = 0;
  unsigned long long cells = 0;
};

struct ConditionReport {
  VerdictKind verdict = VerdictKind::Inconclusive;
  int n = 0;
  int r = 0;
  std::vector<double> point;
  std::vector<ConditionRecord> conditions;
  SearchConfig config;
  std::string note;  // semantics reminder, always set
};

/// Does the order-r diagonal system h^1[v] = ... = h^r[v,..,v] = 0 admit a
/// nontrivial solution? Searches the unit sphere; in certify mode a
/// NonDegenerate answer comes with a positive residual bound.
DegeneracyResult r_jet_degeneracy(const Jet& j, int r, const SearchConfig& cfg);

/// Independent linear-algebra oracle for order-2 nondegeneracy: the Hessian
/// restricted to the gradient-orthogonal hyperplane is definite.
/// Throws DegenerateGradientError when the gradient is below tolerance.
bool two_jet_oracle(const Jet& j, const SearchConfig& cfg);

/// Membership check for the closed witness set indexed by m (2 <= m <= n-1):
/// searches for a full-rank solution tuple of the defining system.
/// Violated = witness found (the jet lies in the set); Holds = certified
/// empty; Unknown otherwise.
ConditionRecord psi_star_membership(const Jet& j, int m, const SearchConfig& cfg);

/// Defining-system residuals by direct substitution (vectors in the order
/// v,u,w,x as applicable; params only for the non-starred variant).
std::vector<double> psi_residuals(const Jet& j, int m, bool starred,
                                  const std::vector<std::vector<double>>& vectors,
                                  const formal::BValues& params);

/// Full sufficient-condition check at the jet's base point (2 <= n <= 5,
/// jet order 5). Throws UnsupportedDimension / OrderTooLow.
ConditionReport check_steepness(const Jet& j, const SearchConfig& cfg);

using steep::rank_deficient;

}  // namespace steep::cond

namespace steep::report {

std::string to_json(const cond::ConditionReport& rep, unsigned long long seed);
/// Throws if the document is missing required schema fields.
void validate_json(const std::string& text);
std::string human_summary(const cond::ConditionReport& rep);

}  // namespace steep::report
