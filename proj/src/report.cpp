#include <sstream>

#include "json.hpp"
#include "steep/conditions.hpp"

namespace steep::report {

using cond::ConditionReport;
using cond::Status;

std::string to_json(const ConditionReport& rep, unsigned long long seed) {
  nlohmann::json out;
  out["verdict"] = cond::verdict_name(rep.verdict);
  out["n"] = rep.n;
  out["order"] = rep.r;
  out["point"] = rep.point;
  out["note"] = rep.note;
  out["seed"] = seed;
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : rep.conditions) {
    nlohmann::json jc;
    jc["id"] = c.id;
    jc["status"] = cond::status_name(c.status);
    jc["best_residual"] = c.best_residual;
    if (c.certified_bound)
      jc["certified_lower_bound"] = *c.certified_bound;
    else
      jc["certified_lower_bound"] = nullptr;
    if (c.witness.empty()) {
      jc["witness"] = nullptr;
    } else {
      nlohmann::json w = nlohmann::json::array();
      for (const auto& v : c.witness) w.push_back(v);
      jc["witness"] = w;
    }
    jc["starts"] = c.starts;
    jc["cells"] = c.cells;
    if (!c.detail.empty()) jc["detail"] = c.detail;
    conds.push_back(jc);
  }
  out["conditions"] = conds;
  nlohmann::json cfg;
  cfg["mode"] =
      rep.config.mode == search::SearchConfig::Mode::Certify ? "certify" : "heuristic";
  cfg["starts"] = rep.config.starts;
  cfg["witness_tol"] = rep.config.witness_tol;
  cfg["margin_tol"] = rep.config.margin_tol;
  cfg["gradient_tol"] = rep.config.gradient_tol;
  cfg["rank_tol"] = rep.config.rank_tol;
  cfg["cluster_tol"] = rep.config.cluster_tol;
  cfg["certify_budget"] = rep.config.certify_budget;
  out["config"] = cfg;
  return out.dump(2);
}

void validate_json(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text);
  for (const char* key : {"verdict", "n", "order", "point", "conditions", "config", "seed", "note"})
    if (!doc.contains(key)) throw std::runtime_error(std::string("report missing field ") + key);
  for (const auto& c : doc.at("conditions"))
    for (const char* key : {"id", "status", "best_residual", "witness", "starts"})
      if (!c.contains(key))
        throw std::runtime_error(std::string("condition entry missing field ") + key);
}

std::string human_summary(const ConditionReport& rep) {
  std::ostringstream os;
  os << "verdict: " << cond::verdict_name(rep.verdict) << " (n=" << rep.n << ", order=" << rep.r
     << ")\n";
  for (const auto& c : rep.conditions) {
    os << "  " << c.id << ": " << cond::status_name(c.status);
    os << "  residual=" << c.best_residual;
    if (c.certified_bound) os << "  certified_bound=" << *c.certified_bound;
    if (!c.witness.empty()) {
      os << "  witness=";
      for (size_t i = 0; i < c.witness.size(); ++i) {
        os << (i ? " | " : "(");
        for (size_t t = 0; t < c.witness[i].size(); ++t) {
          if (t) os << ",";
          os << c.witness[i][t];
        }
      }
      os << ")";
    }
    if (!c.detail.empty()) os << "  [" << c.detail << "]";
    os << "\n";
  }
  os << "note: " << rep.note << "\n";
  return os.str();
}

}  // namespace steep::report
