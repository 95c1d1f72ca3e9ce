// contractlab command-line driver.
//
// Exit codes: 0 success, 1 infeasible problem / unmet hypothesis / failed
// verification, 2 I/O or validation error.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "contractlab/experiments.hpp"

namespace cl = contractlab;

namespace {

constexpr int kOk = 0;
constexpr int kInfeasible = 1;
constexpr int kInputError = 2;

struct Common {
  std::string scenario;
  std::string out;
  std::string format = "csv";
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

cl::Scenario load_checked(const std::string& path) {
  if (path.empty()) throw InputError("a scenario file is required (--scenario <path>)");
  auto s = cl::load_scenario(path);
  const auto v = cl::validate_scenario(s);
  if (!v.ok()) {
    std::string msg = path + ": invalid scenario";
    for (const auto& e : v.violations) msg += "\n  " + e;
    throw InputError(msg);
  }
  for (const auto& n : v.notes) std::cerr << "note: " << n << '\n';
  return s;
}

// Writes to --out, or to stdout when no path was given.
void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw InputError("cannot open " + path + " for writing");
  f << text;
  if (!f) throw InputError("write failed for " + path);
}

void emit_rows(const std::vector<cl::SweepResult>& rows, const Common& c) {
  if (!c.out.empty()) {
    cl::emit_report(rows, c.out, c.format == "json" ? cl::ReportFormat::Json : cl::ReportFormat::Csv);
    return;
  }
  if (c.format == "json") {
    std::cout << cl::sweep_to_json(rows).dump(2) << '\n';
  } else {
    cl::write_sweep_csv(std::cout, rows);
  }
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("not a number list: " + text);
    }
  }
  return out;
}

cl::FamilyKind parse_family(const std::string& name) {
  if (name == "debt") return cl::FamilyKind::Debt;
  if (name == "bonus") return cl::FamilyKind::Bonus;
  if (name == "gdebt") return cl::FamilyKind::GeneralizedDebt;
  if (name == "grid") return cl::FamilyKind::FreeGrid;
  throw InputError("unknown family " + name);
}

// ---------------------------------------------------------------------------

int cmd_check_orders(const Common& c) {
  const auto s = load_checked(c.scenario);
  const std::size_t k = s.effort.size();
  nlohmann::json arr = nlohmann::json::array();
  std::ostringstream table;
  table << "pair      FOSD   MLRP   witness\n";
  auto witness_text = [](const cl::OrderReport& r) {
    if (!r.witness) return std::string("-");
    const auto& w = *r.witness;
    return cl::detail::concat("(", w.a, ",", w.b, ") ", cl::format_number(w.lhs), " vs ", cl::format_number(w.rhs),
                              w.note.empty() ? "" : " " + w.note);
  };
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b) {
      const auto f = cl::check_fosd(s.dist, a, b);
      const auto m = cl::check_mlrp(s.dist, a, b);
      const std::string pair = cl::detail::concat("(", a, ",", b, ")");
      table << std::left << std::setw(10) << pair << std::setw(7) << (f.holds ? "true" : "false") << std::setw(7)
            << (m.holds ? "true" : "false");
      std::string w = !f.holds ? witness_text(f) : !m.holds ? witness_text(m) : "-";
      table << w << '\n';
      nlohmann::json j{{"pair", {a, b}}, {"fosd", f.holds}, {"mlrp", m.holds}};
      if (!f.holds && f.witness) j["fosdWitness"] = witness_text(f);
      if (!m.holds && m.witness) j["mlrpWitness"] = witness_text(m);
      arr.push_back(j);
    }
  write_text(c.out, c.format == "json" ? arr.dump(2) + "\n" : table.str());
  return kOk;
}

int cmd_solve_manipulation(const Common& c, const std::string& contract_text) {
  const auto s = load_checked(c.scenario);
  if (contract_text.empty()) throw InputError("--contract y0,y1,... is required");
  const cl::Contract y{parse_list(contract_text)};
  if (y.size() != s.grid.size())
    throw InputError(cl::detail::concat("contract has ", y.size(), " entries, grid has ", s.grid.size()));
  const auto sol = cl::solve_manipulation(y, s.tech, s.grid);
  if (c.format == "json") {
    nlohmann::json j{{"x", s.grid.points}, {"y", y.y}, {"z", sol.plan.z}, {"v", sol.value.v},
                     {"target", sol.plan.target}, {"manipulationProof", sol.is_zero_plan()}};
    write_text(c.out, j.dump(2) + "\n");
  } else {
    std::ostringstream os;
    cl::write_manipulation_csv(os, s.grid, y, sol);
    write_text(c.out, os.str());
  }
  return kOk;
}

int cmd_optimize(const Common& c, const std::string& family, int resolution, const std::string& surface_path) {
  const auto s = load_checked(c.scenario);
  const cl::ContractFamily fam{parse_family(family), resolution};
  const auto res = s.objective == cl::Objective::Financier ? cl::optimize_financier(s, fam)
                                                            : cl::optimize_entrepreneur(s, fam);
  nlohmann::json j{{"family", cl::family_name(res.family)}, {"feasible", res.feasible}, {"message", res.message}};
  if (res.feasible) {
    nlohmann::json params;
    for (std::size_t i = 0; i < res.params.size() && i < res.param_names.size(); ++i)
      params[res.param_names[i]] = res.params[i];
    const auto& o = res.outcome;
    j["params"] = params;
    j["contract"] = res.contract.y;
    j["outcome"] = {{"effortIndex", o.effort_index},     {"effort", o.effort},
                    {"agentUtility", o.agent_utility},   {"financierRevenue", o.financier_revenue},
                    {"principalPayoff", o.principal_payoff}, {"financierNet", o.financier_net},
                    {"expectedWaste", o.expected_waste}, {"irAgent", o.ir_agent},
                    {"irFinancier", o.ir_financier},     {"manipulationTargets", o.plan.target}};
  }
  write_text(c.out, j.dump(2) + "\n");
  if (!surface_path.empty()) {
    std::ostringstream os;
    for (const auto& name : res.param_names) os << name << ',';
    os << "agent_utility,principal_payoff,expected_waste,effort,feasible\n";
    for (const auto& p : res.surface) {
      for (double v : p.params) os << cl::format_number(v) << ',';
      os << cl::format_number(p.agent_utility) << ',' << cl::format_number(p.principal_payoff) << ','
         << cl::format_number(p.expected_waste) << ',' << cl::format_number(p.effort) << ',' << (p.feasible ? 1 : 0)
         << '\n';
    }
    write_text(surface_path, os.str());
  }
  if (!res.feasible) std::cerr << "infeasible: " << res.message << '\n';
  return res.feasible ? kOk : kInfeasible;
}

int cmd_sweep_q(const Common& c, const std::string& qs_text) {
  const auto s = load_checked(c.scenario);
  const auto qs = qs_text.empty() ? cl::default_q_grid() : parse_list(qs_text);
  const auto rep = cl::run_crossover_sweep(s, qs);
  emit_rows(rep.rows, c);
  std::size_t complete = 0;
  for (const auto& r : rep.rows) complete += std::isfinite(r.gap) ? 1 : 0;
  if (rep.q_star)
    std::cerr << "q* = " << cl::format_number(*rep.q_star) << " dominates_below=" << rep.dominates_below
              << " fails_above=" << rep.fails_above << '\n';
  else
    std::cerr << "no q with gap > " << cl::kDominationMargin << '\n';
  if (complete == 0) {
    std::cerr << "infeasible: no q admits both calibrated contracts\n";
    return kInfeasible;
  }
  return kOk;
}

int cmd_sweep_gamma(const Common& c, const std::string& gammas_text, int resolution) {
  const auto s = load_checked(c.scenario);
  const auto gammas = gammas_text.empty() ? cl::default_gamma_grid() : parse_list(gammas_text);
  try {
    const auto rep = cl::run_steepness_sweep(s, gammas, cl::ContractFamily{cl::FamilyKind::Bonus, resolution});
    emit_rows(rep.rows, c);
    std::cerr << "e_mp=" << rep.e_mp << " e_2nd=" << rep.e_2nd << " d'=" << cl::format_number(rep.d_prime)
              << " beta=" << cl::format_number(rep.beta) << " mass_non_increasing=" << rep.mass_non_increasing
              << " waste_non_increasing=" << rep.waste_non_increasing << " final_waste_small=" << rep.final_waste_small
              << " top_gap_positive=" << rep.top_gap_positive << '\n';
  } catch (const cl::HypothesisFailure& e) {
    std::cerr << "hypothesis not met: " << e.what() << '\n';
    return kInfeasible;
  }
  return kOk;
}

int cmd_verify(const Common& c, const std::string& checks_text, int trials, std::uint64_t seed) {
  const auto s = load_checked(c.scenario);
  std::vector<cl::Check> which;
  std::stringstream ss(checks_text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto ch = cl::parse_check(item);
    if (!ch) throw InputError("unknown check " + item);
    which.push_back(*ch);
  }
  const auto rep = cl::verify_theorems(s, which, trials, seed);
  write_text(c.out, rep.to_json().dump(2) + "\n");
  for (const auto& r : rep.results)
    std::cerr << r.name << ": " << r.passed << "/" << r.trials << " passed, " << r.vacuous << " vacuous"
              << (r.note.empty() ? "" : " (" + r.note + ")") << '\n';
  return rep.ok() ? kOk : kInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage moral hazard contract toolkit"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", common.scenario, "Scenario JSON file");
    sub->add_option("--out", common.out, "Output file (stdout if omitted)");
    sub->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  };

  auto* orders = app.add_subcommand("check-orders", "FOSD / MLRP table for every effort pair");
  add_common(orders);
  orders->add_option("scenario_file", common.scenario, "Scenario JSON file");

  std::string contract_text;
  auto* manip = app.add_subcommand("solve-manipulation", "Stage-2 manipulation plan for a contract");
  add_common(manip);
  manip->add_option("--contract", contract_text, "Comma-separated payoffs y_0,...,y_{n-1}");

  std::string family = "debt", surface;
  int resolution = 21;
  auto* opt = app.add_subcommand("optimize", "Optimal member of a contract family");
  add_common(opt);
  opt->add_option("--family", family, "Contract family")->check(CLI::IsMember({"debt", "bonus", "gdebt", "grid"}));
  opt->add_option("--resolution", resolution, "Points per parameter axis")->check(CLI::Range(2, 100000));
  opt->add_option("--surface", surface, "CSV file for the evaluated parameter surface");

  std::string qs_text;
  auto* sq = app.add_subcommand("sweep-q", "Crossover sweep over q on a three-state template");
  add_common(sq);
  sq->add_option("--q", qs_text, "Comma-separated q values (default: 40 log-spaced points)");

  std::string gammas_text;
  int bonus_resolution = 21;
  auto* sg = app.add_subcommand("sweep-gamma", "Steepness sweep over convex-power gamma");
  add_common(sg);
  sg->add_option("--gamma", gammas_text, "Comma-separated gammas (default 2^0..2^20)");
  sg->add_option("--resolution", bonus_resolution, "Bonus family resolution")->check(CLI::Range(2, 100000));

  std::string checks_text = "Lemma1,Lemma2,Lemma3,Lemma5,Thm4,Thm6,Cor7,Thm8";
  int trials = 100;
  std::uint64_t seed = 1;
  auto* ver = app.add_subcommand("verify", "Randomized property checks");
  add_common(ver);
  ver->add_option("--checks", checks_text, "Comma-separated subset of Thm4,Thm6,Cor7,Thm8,Lemma1,Lemma2,Lemma3,Lemma5");
  ver->add_option("--trials", trials, "Trials per check")->check(CLI::Range(1, 100000000));
  ver->add_option("--seed", seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*orders) return cmd_check_orders(common);
    if (*manip) return cmd_solve_manipulation(common, contract_text);
    if (*opt) return cmd_optimize(common, family, resolution, surface);
    if (*sq) return cmd_sweep_q(common, qs_text);
    if (*sg) return cmd_sweep_gamma(common, gammas_text, bonus_resolution);
    if (*ver) return cmd_verify(common, checks_text, trials, seed);
  } catch (const cl::HypothesisFailure& e) {
    std::cerr << "hypothesis not met: " << e.what() << '\n';
    return kInfeasible;
  } catch (const cl::ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}
