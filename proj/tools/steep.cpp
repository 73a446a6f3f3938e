#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "steep/conditions.hpp"
#include "steep/examples.hpp"
#include "steep/formal.hpp"

namespace {

constexpr int kUsageExit = 64;

using steep::Jet;
using steep::Polynomial;
using steep::Rational;
using steep::search::SearchConfig;

struct InputOpts {
  int n = 0;
  std::string point;
  std::string poly;
  std::string poly_file;
  std::string jet_file;
};

std::vector<Rational> parse_point(const std::string& text, int n) {
  std::vector<Rational> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    // trim
    size_t b = item.find_first_not_of(" \t");
    size_t e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw std::invalid_argument("empty coordinate in --point");
    out.push_back(Rational::parse(item.substr(b, e - b + 1)));
  }
  if (n > 0 && static_cast<int>(out.size()) != n)
    throw std::invalid_argument("--point has " + std::to_string(out.size()) +
                                " coordinates, expected " + std::to_string(n));
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Jet load_jet(const InputOpts& in, int order) {
  int sources = (!in.poly.empty()) + (!in.poly_file.empty()) + (!in.jet_file.empty());
  if (sources != 1)
    throw std::invalid_argument("provide exactly one of --poly, --poly-file, --jet-file");
  if (!in.jet_file.empty()) {
    Jet j = steep::jet_from_json(slurp(in.jet_file));
    if (in.n != 0 && in.n != j.n()) throw std::invalid_argument("--n disagrees with the jet file");
    if (j.r() < order) throw std::invalid_argument("jet file order lower than required");
    return j;
  }
  if (in.n < 1) throw std::invalid_argument("--n is required with polynomial input");
  std::string text = !in.poly.empty() ? in.poly : slurp(in.poly_file);
  Polynomial p = steep::parse_polynomial(text, in.n);
  std::vector<Rational> pt = in.point.empty() ? std::vector<Rational>(in.n, Rational(0))
                                              : parse_point(in.point, in.n);
  return steep::jet_at(p, pt, order);
}

void add_input_flags(CLI::App* cmd, InputOpts& in) {
  cmd->add_option("--n", in.n, "number of variables");
  cmd->add_option("--point", in.point, "evaluation point, comma separated (rationals accepted)");
  cmd->add_option("--poly", in.poly, "inline polynomial expression");
  cmd->add_option("--poly-file", in.poly_file, "file with a polynomial expression");
  cmd->add_option("--jet-file", in.jet_file, "JSON jet file");
}

void add_search_flags(CLI::App* cmd, SearchConfig& cfg, std::string& mode) {
  cmd->add_option("--seeds", cfg.starts, "number of multistart seeds");
  cmd->add_option("--seed", cfg.seed, "RNG seed");
  cmd->add_option("--tol", cfg.witness_tol, "witness residual tolerance");
  cmd->add_option("--margin", cfg.margin_tol, "required certified margin");
  cmd->add_option("--grad-tol", cfg.gradient_tol, "gradient gate tolerance");
  cmd->add_option("--budget", cfg.certify_budget, "certification cell budget");
  cmd->add_option("--mode", mode, "heuristic|certify")->check(CLI::IsMember({"heuristic", "certify"}));
}

bool config_is_default(const SearchConfig& cfg) {
  SearchConfig def;
  return cfg.witness_tol == def.witness_tol && cfg.margin_tol == def.margin_tol &&
         cfg.gradient_tol == def.gradient_tol && cfg.cluster_tol == def.cluster_tol;
}

int cmd_check(const InputOpts& in, SearchConfig cfg, const std::string& mode,
              const std::string& json_path) {
  cfg.mode = (mode == "heuristic") ? SearchConfig::Mode::Heuristic : SearchConfig::Mode::Certify;
  Jet j = load_jet(in, 5);
  steep::cond::ConditionReport rep = steep::cond::check_steepness(j, cfg);
  std::cout << steep::report::human_summary(rep);
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    out << steep::report::to_json(rep, cfg.seed) << "\n";
  }
  switch (rep.verdict) {
    case steep::cond::VerdictKind::SteepCertified:
      return 0;
    case steep::cond::VerdictKind::NotCertified:
      return 1;
    case steep::cond::VerdictKind::DegenerateGradient:
      return 2;
    default:
      return 3;
  }
}

int cmd_degeneracy(const InputOpts& in, SearchConfig cfg, const std::string& mode, int order) {
  cfg.mode = (mode == "heuristic") ? SearchConfig::Mode::Heuristic : SearchConfig::Mode::Certify;
  if (order < 1 || order > 5) throw std::invalid_argument("--order must be in 1..5");
  Jet j = load_jet(in, std::max(order, 5));
  steep::cond::DegeneracyResult res = steep::cond::r_jet_degeneracy(j, order, cfg);
  switch (res.status) {
    case steep::cond::DegeneracyResult::Kind::NonDegenerate:
      std::cout << "non-degenerate at order " << order;
      if (res.certified_bound) std::cout << " (certified residual bound " << *res.certified_bound << ")";
      std::cout << "\n";
      return 0;
    case steep::cond::DegeneracyResult::Kind::Degenerate: {
      std::cout << "degenerate at order " << order << "; unit witness directions (up to sign):\n";
      for (const auto& w : res.witnesses) {
        std::cout << "  (";
        for (size_t i = 0; i < w.size(); ++i) std::cout << (i ? "," : "") << w[i];
        std::cout << ")\n";
      }
      return 1;
    }
    default:
      std::cout << "inconclusive at order " << order << " (best residual " << res.best_residual
                << ")\n";
      return 3;
  }
}

int cmd_generate(int n, int m, int r, const std::string& format) {
  steep::formal::FormalSystem sys = steep::formal::build_xi(n, r, m);
  if (format == "json")
    std::cout << steep::formal::system_to_json(sys) << "\n";
  else
    std::cout << steep::formal::system_to_text(sys);
  return 0;
}

int cmd_table(int n, int r) {
  steep::IndexTable t = steep::index_table(n, r);
  std::cout << "n=" << n << " r=" << r << "  (codimension lower bound: " << t.codim << ")\n";
  std::cout << "  m   alpha_bar   beta\n";
  for (int m = 1; m <= n - 1; ++m) {
    std::cout << "  " << m << "   " << t.alpha[m - 1] << "   " << t.beta[m - 1];
    if (m == 1 && t.beta[m - 1] <= 3)
      std::cout << "   [conditions uninformative at this order: the one-dimensional system "
                   "requires no more than three-jet degeneracy]";
    std::cout << "\n";
  }
  return 0;
}

struct ExampleCase {
  std::string name;
  bool pass = false;
  std::string detail;
};

int cmd_examples(const std::string& only, SearchConfig cfg, int samples) {
  using steep::cond::Status;
  using steep::cond::VerdictKind;
  std::vector<ExampleCase> cases;
  auto want = [&](const std::string& name) {
    return only.empty() || name.find(only) != std::string::npos;
  };
  auto push = [&](const std::string& name, bool ok, const std::string& detail) {
    cases.push_back({name, ok, detail});
  };

  if (want("example1")) {
    Jet j = steep::jet_at(steep::examples::example1(), std::vector<Rational>(4, Rational(0)), 5);
    auto rep = steep::cond::check_steepness(j, cfg);
    push("example1.check", rep.verdict == VerdictKind::SteepCertified,
         steep::cond::verdict_name(rep.verdict));
    auto d3 = steep::cond::r_jet_degeneracy(j, 3, cfg);
    bool d3ok = d3.status == steep::cond::DegeneracyResult::Kind::Degenerate &&
                d3.witnesses.size() == 1 && std::abs(std::abs(d3.witnesses[0][1]) - 1.0) < 1e-6;
    push("example1.degeneracy.order3", d3ok, "expected the single direction family (0,1,0,0)");
    auto d5 = steep::cond::r_jet_degeneracy(j, 5, cfg);
    push("example1.degeneracy.order5",
         d5.status == steep::cond::DegeneracyResult::Kind::NonDegenerate, "expected non-degenerate");
  }

  if (want("example2")) {
    Jet j = steep::jet_at(steep::examples::example2(), std::vector<Rational>(5, Rational(0)), 5);
    auto rep = steep::cond::check_steepness(j, cfg);
    push("example2.check", rep.verdict == VerdictKind::SteepCertified,
         steep::cond::verdict_name(rep.verdict));
    auto d3 = steep::cond::r_jet_degeneracy(j, 3, cfg);
    bool d3ok = d3.status == steep::cond::DegeneracyResult::Kind::Degenerate &&
                d3.witnesses.size() == 1 && std::abs(std::abs(d3.witnesses[0][3]) - 1.0) < 1e-6;
    push("example2.degeneracy.order3", d3ok, "expected the single direction family (0,0,0,1,0)");
    auto d4 = steep::cond::r_jet_degeneracy(j, 4, cfg);
    push("example2.degeneracy.order4",
         d4.status == steep::cond::DegeneracyResult::Kind::NonDegenerate, "expected non-degenerate");
    auto d2 = steep::cond::r_jet_degeneracy(j, 2, cfg);
    bool d2ok = d2.status == steep::cond::DegeneracyResult::Kind::Degenerate;
    if (d2ok) {
      for (const auto& w : d2.witnesses) {
        double rel = w[0] * w[0] + w[2] * w[2] + w[4] * w[4] - 2.0 * w[2] * w[3];
        if (std::abs(w[1]) > 1e-7 || std::abs(rel) > 1e-7) d2ok = false;
      }
    }
    push("example2.degeneracy.order2", d2ok,
         "witnesses must satisfy the degenerate-cone relations");
  }

  if (want("tables")) {
    auto t4 = steep::index_table(4, 5);
    auto t5 = steep::index_table(5, 5);
    auto t3 = steep::index_table(3, 5);
    auto t2 = steep::index_table(2, 5);
    bool ok = t2.beta == std::vector<long long>{5} && t3.beta == std::vector<long long>{5, 4} &&
              t4.beta == std::vector<long long>{5, 5, 3} &&
              t5.beta == std::vector<long long>{4, 5, 4, 2} && t4.codim == 2;
    push("tables", ok, "index values for n=2..5 at order 5");
  }

  if (want("golden")) {
    bool all = true;
    std::string which;
    for (auto [n, m] : std::vector<std::pair<int, int>>{{2, 1}, {3, 2}, {4, 2}, {4, 3}, {5, 2},
                                                        {5, 3}, {5, 4}}) {
      auto got = steep::formal::build_xi(n, 5, m);
      auto expect = steep::formal::golden_xi(n, m);
      bool ok = got.equations.size() == expect.equations.size();
      if (ok) {
        for (const auto& ge : got.equations) {
          bool matched = false;
          for (const auto& ee : expect.equations)
            if (ee.component == ge.component && ee.tpower == ge.tpower)
              matched = steep::formal::equal_up_to_scale(ge.poly, ee.poly);
          ok = ok && matched;
        }
      }
      if (!ok) {
        all = false;
        which += " (" + std::to_string(n) + "," + std::to_string(m) + ")";
      }
    }
    push("golden-systems", all, all ? "all pairs match" : ("mismatch at" + which));
  }

  if (want("elimination")) {
    for (auto [n, m] : std::vector<std::pair<int, int>>{{3, 2}, {4, 2}, {4, 3}, {5, 2}, {5, 3},
                                                        {5, 4}}) {
      auto rep = steep::formal::validate_elimination(n, m, samples, cfg.seed);
      bool ok = rep.failures == 0 && rep.passes >= samples * 9 / 10;
      push("elimination.n" + std::to_string(n) + "m" + std::to_string(m), ok,
           std::to_string(rep.passes) + " pass, " + std::to_string(rep.failures) + " fail, " +
               std::to_string(rep.filtered) + " filtered");
    }
  }

  if (want("example3")) {
    bool ok = true;
    for (long long k : {1LL, 10LL, 100LL}) {
      Jet j = steep::jet_at(steep::examples::example3_member(k),
                            std::vector<Rational>(3, Rational(0)), 5);
      std::vector<std::vector<double>> basis{{1, 0, 0}, {0, 1, 0}};
      steep::formal::BValues b{{{2, 2}, k / 2.0}, {{2, 3}, k * k / 2.0}};
      for (double rres : steep::cond::psi_residuals(j, 2, false, basis, b))
        if (std::abs(rres) > 1e-10 * std::max(1.0, k * 1.0)) ok = false;
    }
    push("example3.membership", ok, "family jets solve the m=2 defining system");
    Jet lim = steep::jet_at(steep::examples::example3_limit(),
                            std::vector<Rational>(3, Rational(0)), 5);
    auto rep = steep::cond::check_steepness(lim, cfg);
    bool limok = rep.verdict == VerdictKind::NotCertified;
    if (limok) {
      bool c2v = false;
      for (const auto& c : rep.conditions)
        if (c.id == "n3.cond2" && c.status == Status::Violated && !c.witness.empty() &&
            !steep::rank_deficient(c.witness, cfg.rank_tol))
          c2v = true;
      limok = c2v;
    }
    push("example3.limit", limok, "limit function must fail condition 2 with a full-rank witness");
  }

  if (!config_is_default(cfg))
    std::cout << "config: NON-DEFAULT tolerances in effect; results are not comparable to the "
                 "reference run\n";
  bool all = true;
  for (const auto& c : cases) {
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name;
    if (!c.detail.empty()) std::cout << " - " << c.detail;
    std::cout << "\n";
    all = all && c.pass;
  }
  if (cases.empty()) {
    std::cout << "no example case matches --only filter\n";
    return kUsageExit;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"steep: sufficient steepness conditions on five-jets (2 <= n <= 5)"};
  app.require_subcommand(1);

  InputOpts in;
  SearchConfig cfg;
  std::string mode = "certify";
  std::string json_path;
  int order = 5;
  int gen_n = 0, gen_m = 0, gen_r = 5;
  std::string format = "text";
  int tab_n = 0, tab_r = 5;
  std::string only;
  int samples = 1000;

  CLI::App* check = app.add_subcommand("check", "run the full sufficient-condition check");
  add_input_flags(check, in);
  add_search_flags(check, cfg, mode);
  check->add_option("--json", json_path, "write the JSON report to this path");

  CLI::App* degen = app.add_subcommand("degeneracy", "diagonal-system degeneracy scan");
  add_input_flags(degen, in);
  add_search_flags(degen, cfg, mode);
  degen->add_option("--order", order, "jet order to test (1..5)");

  CLI::App* gen = app.add_subcommand("generate", "emit the tangency system for (n, m, r)");
  gen->add_option("--n", gen_n, "number of variables")->required();
  gen->add_option("--m", gen_m, "subspace dimension")->required();
  gen->add_option("--r", gen_r, "jet order");
  gen->add_option("--format", format, "text|json")->check(CLI::IsMember({"text", "json"}));

  CLI::App* tab = app.add_subcommand("table", "index table for (n, r)");
  tab->add_option("--n", tab_n, "number of variables")->required();
  tab->add_option("--r", tab_r, "jet order");

  CLI::App* ex = app.add_subcommand("examples", "run the bundled regression examples");
  ex->add_option("--only", only, "substring filter on case names");
  add_search_flags(ex, cfg, mode);
  ex->add_option("--samples", samples, "samples per elimination validation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsageExit;
  }

  try {
    if (check->parsed()) return cmd_check(in, cfg, mode, json_path);
    if (degen->parsed()) return cmd_degeneracy(in, cfg, mode, order);
    if (gen->parsed()) return cmd_generate(gen_n, gen_m, gen_r, format);
    if (tab->parsed()) return cmd_table(tab_n, tab_r);
    if (ex->parsed()) {
      cfg.mode = (mode == "heuristic") ? SearchConfig::Mode::Heuristic : SearchConfig::Mode::Certify;
      return cmd_examples(only, cfg, samples);
    }
  } catch (const steep::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const steep::cond::UnsupportedDimension& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageExit;
  }
  return kUsageExit;
}
