#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "contractlab/manipulation.hpp"
#include "contractlab/model.hpp"
#include "contractlab/optimizer.hpp"
#include "contractlab/orders.hpp"
#include "contractlab/parallel.hpp"
#include "contractlab/scenario_io.hpp"

namespace contractlab {

class HypothesisFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepResult {
  double sweep_param = 0.0;
  double mp_utility = std::numeric_limits<double>::quiet_NaN();
  double manip_utility = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::quiet_NaN();  // manip_utility - mp_utility
  double waste = std::numeric_limits<double>::quiet_NaN();
  double middle_mass = std::numeric_limits<double>::quiet_NaN();
  double effort_mp = std::numeric_limits<double>::quiet_NaN();
  double effort_manip = std::numeric_limits<double>::quiet_NaN();
  std::string note;  // empty when the row is complete
};

// ---------------------------------------------------------------------------
// Report output

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline const char* kSweepCsvHeader = "sweep_param,mp_utility,manip_utility,gap,waste,middle_mass,effort_mp,effort_manip";

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepResult>& rows) {
  os << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    os << format_number(r.sweep_param) << ',' << format_number(r.mp_utility) << ',' << format_number(r.manip_utility)
       << ',' << format_number(r.gap) << ',' << format_number(r.waste) << ',' << format_number(r.middle_mass) << ','
       << format_number(r.effort_mp) << ',' << format_number(r.effort_manip) << '\n';
  }
}

namespace detail {

// Numbers are rounded to 12 significant digits so that CSV and JSON agree.
inline nlohmann::json rounded(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(format_number(v));
}

}  // namespace detail

inline nlohmann::json sweep_to_json(const std::vector<SweepResult>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json o;
    o["sweep_param"] = detail::rounded(r.sweep_param);
    o["mp_utility"] = detail::rounded(r.mp_utility);
    o["manip_utility"] = detail::rounded(r.manip_utility);
    o["gap"] = detail::rounded(r.gap);
    o["waste"] = detail::rounded(r.waste);
    o["middle_mass"] = detail::rounded(r.middle_mass);
    o["effort_mp"] = detail::rounded(r.effort_mp);
    o["effort_manip"] = detail::rounded(r.effort_manip);
    if (!r.note.empty()) o["note"] = r.note;
    arr.push_back(std::move(o));
  }
  return arr;
}

inline std::vector<SweepResult> sweep_from_json(const nlohmann::json& arr) {
  auto num = [](const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  std::vector<SweepResult> out;
  for (const auto& o : arr) {
    SweepResult r;
    r.sweep_param = num(o.at("sweep_param"));
    r.mp_utility = num(o.at("mp_utility"));
    r.manip_utility = num(o.at("manip_utility"));
    r.gap = num(o.at("gap"));
    r.waste = num(o.at("waste"));
    r.middle_mass = num(o.at("middle_mass"));
    r.effort_mp = num(o.at("effort_mp"));
    r.effort_manip = num(o.at("effort_manip"));
    r.note = o.value("note", "");
    out.push_back(r);
  }
  return out;
}

enum class ReportFormat { Csv, Json };

inline void emit_report(const std::vector<SweepResult>& rows, const std::string& path, ReportFormat fmt) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open report file " + path);
  if (fmt == ReportFormat::Csv) write_sweep_csv(out, rows);
  else out << sweep_to_json(rows).dump(2) << '\n';
  out.flush();
  if (!out) throw std::runtime_error("write failed for report file " + path);
}

// ---------------------------------------------------------------------------
// Three-state crossover sweep
//
// The template is a scenario with a 3-point grid and two efforts; its
// distribution is replaced, for each q, by rows (0.1, 0.9 - q, q) and
// (0.1, q, 0.9 - q). Two contract shapes are calibrated:
//   no-manipulation:  y_l + (0, g(x_m - x_l), g(x_m - x_l) + g(x_h - x_m))
//   manipulation:     y_l + (0, 0, g(x_h - x_l))
// and y_l is set so the financier earns exactly (1 + r) Q at the effort the
// contract is meant to implement.

inline ConditionalDistribution three_state_distribution(double q) {
  if (!(q > 0.0 && q < 0.45)) throw std::invalid_argument("q must lie in (0, 0.45)");
  ConditionalDistribution d;
  d.rows = {{0.1, 0.9 - q, q}, {0.1, q, 0.9 - q}};
  return d;
}

struct CalibratedContract {
  bool feasible = false;
  Contract contract;
  EquilibriumOutcome outcome;
  double base = 0.0;  // y_l
  std::string note;
};

// Shifts `spread` by the constant that makes the financier's participation
// bind at each target effort (highest first), keeps the candidates whose
// equilibrium effort is the target, and returns the one the agent prefers.
// A constant shift moves every stage-2 payoff equally, so the plan and the
// financier's revenue at a fixed effort are affine in y_l with slope -1; the
// binding y_l is therefore exact.
inline CalibratedContract calibrate_shift(const Scenario& s, const std::vector<double>& spread) {
  const std::size_t n = s.grid.size();
  double ub = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) ub = std::min(ub, payoff_cap(s, j) - spread[j]);
  CalibratedContract best;
  best.note = "no effort level can be implemented with financier participation";
  if (ub < -kPayoffTolerance) {
    best.note = "contract shape exceeds the payoff caps";
    return best;
  }
  const auto plan = solve_manipulation(Contract{spread}, s.tech, s.grid).plan;
  for (std::size_t t = s.effort.size(); t-- > 0;) {
    double rev0 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = plan.target[j];
      rev0 += s.dist(t, j) * (s.grid[k] - spread[k]);
    }
    double yl = rev0 - s.required_return();
    if (yl < -kPayoffTolerance) continue;
    yl = std::clamp(yl, 0.0, std::max(0.0, ub));
    Contract c;
    for (double v : spread) c.y.push_back(v + yl);
    auto o = evaluate_contract(c, s);
    if (o.effort_index != t || !o.ir_financier || !o.ir_agent) continue;
    if (!best.feasible || o.agent_utility > best.outcome.agent_utility + kPayoffTolerance) {
      best.feasible = true;
      best.contract = std::move(c);
      best.outcome = std::move(o);
      best.base = yl;
      best.note.clear();
    }
  }
  return best;
}

struct CrossoverPoint {
  SweepResult row;
  CalibratedContract mp;
  CalibratedContract manip;
};

inline CrossoverPoint crossover_point(const Scenario& base, double q) {
  if (base.grid.size() != 3 || base.effort.size() != 2)
    throw std::invalid_argument("crossover template needs a 3-point grid and two efforts");
  Scenario s = base;
  s.dist = three_state_distribution(q);
  const double xl = s.grid[0], xm = s.grid[1], xh = s.grid[2];
  const double A = eval_cost(s.tech, xm - xl), B = eval_cost(s.tech, xh - xm), G = eval_cost(s.tech, xh - xl);

  CrossoverPoint pt;
  pt.mp = calibrate_shift(s, {0.0, A, A + B});
  pt.manip = calibrate_shift(s, {0.0, 0.0, G});
  auto& r = pt.row;
  r.sweep_param = q;
  if (pt.mp.feasible) {
    r.mp_utility = pt.mp.outcome.agent_utility;
    r.effort_mp = pt.mp.outcome.effort;
  }
  if (pt.manip.feasible) {
    r.manip_utility = pt.manip.outcome.agent_utility;
    r.effort_manip = pt.manip.outcome.effort;
    r.waste = pt.manip.outcome.expected_waste;
    r.middle_mass = s.dist(pt.manip.outcome.effort_index, 1);
  }
  if (pt.mp.feasible && pt.manip.feasible) r.gap = r.manip_utility - r.mp_utility;
  if (!pt.mp.feasible) r.note = "no-manipulation calibration infeasible: " + pt.mp.note;
  else if (!pt.manip.feasible) r.note = "manipulation calibration infeasible: " + pt.manip.note;
  return pt;
}

inline std::vector<double> default_q_grid() {
  std::vector<double> q;
  const double hi = 0.44, lo = 0.0025;
  for (int k = 0; k < 40; ++k) q.push_back(hi * std::pow(lo / hi, k / 39.0));
  q.back() = lo;
  return q;
}

inline constexpr double kDominationMargin = 1e-6;

struct CrossoverReport {
  std::vector<SweepResult> rows;  // in the order of the q values given
  std::optional<double> q_star;   // largest q whose gap exceeds the margin
  bool dominates_below = false;   // every swept q < q_star (and q_star itself) has gap > margin
  bool fails_above = false;       // some swept q > q_star has gap <= margin or no manipulation contract
};

inline CrossoverReport run_crossover_sweep(const Scenario& base, const std::vector<double>& qs) {
  CrossoverReport rep;
  rep.rows.resize(qs.size());
  detail::parallel_for(qs.size(), [&](std::size_t i) { rep.rows[i] = crossover_point(base, qs[i]).row; }, 1);
  for (const auto& r : rep.rows)
    if (r.gap > kDominationMargin && (!rep.q_star || r.sweep_param > *rep.q_star)) rep.q_star = r.sweep_param;
  if (rep.q_star) {
    rep.dominates_below = true;
    for (const auto& r : rep.rows) {
      if (r.sweep_param <= *rep.q_star && !(r.gap > kDominationMargin)) rep.dominates_below = false;
      if (r.sweep_param > *rep.q_star && !(r.gap > kDominationMargin)) rep.fails_above = true;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Steepness sweep: ConvexPower(gamma) along an increasing gamma sequence,
// comparing a fixed bonus contract with the best debt contract.

// Upward shifts cost about 1e12 per unit of profit, so none is ever worth it;
// burning stays free.
inline ManipulationTech prohibitive_tech(const ProfitGrid& grid) {
  return TabulatedTech{{{grid.max(), 1e12 * std::max(1.0, grid.max())}}};
}

// Replaces the points of `grid` in [threshold - span, threshold) by the
// geometric sequence threshold - span * ratio^k, k = 0, 1, ..., down to a
// distance of min_gap. A fine mesh just below the bonus threshold lets the
// manipulation interval shrink smoothly as gamma grows instead of dropping
// whole coarse cells at once.
inline ProfitGrid refine_below(const ProfitGrid& grid, double threshold, double span, double ratio, double min_gap) {
  if (!(ratio > 0.0 && ratio < 1.0) || !(span > 0.0) || !(min_gap > 0.0))
    throw std::invalid_argument("refinement needs 0 < ratio < 1 and positive span and gap");
  ProfitGrid out;
  for (double x : grid.points)
    if (x < threshold - span - 1e-12 || x >= threshold - 1e-12) out.points.push_back(x);
  for (double dist = span; dist >= min_gap; dist *= ratio) out.points.push_back(threshold - dist);
  std::sort(out.points.begin(), out.points.end());
  return out;
}

// Weight of each point proportional to the width of its Voronoi cell, so a
// non-uniform grid approximates a smooth density.
inline std::vector<double> cell_width_weights(const ProfitGrid& grid) {
  const auto& p = grid.points;
  const std::size_t n = p.size();
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double left = j > 0 ? (p[j] - p[j - 1]) / 2 : (n > 1 ? (p[1] - p[0]) / 2 : 1.0);
    const double right = j + 1 < n ? (p[j + 1] - p[j]) / 2 : (n > 1 ? (p[n - 1] - p[n - 2]) / 2 : 1.0);
    w[j] = left + right;
  }
  return w;
}

inline std::vector<double> default_gamma_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 20; ++k) g.push_back(std::ldexp(1.0, k));
  return g;
}

struct SteepnessReport {
  std::vector<SweepResult> rows;
  double debt_d = 0.0;
  double debt_utility = 0.0;
  std::size_t e_mp = 0;     // effort index under the best debt contract
  std::size_t e_2nd = 0;    // effort index of the best contract without ex-post moral hazard
  double d_prime = 0.0;
  double beta = 0.0;
  double jump = 0.0;        // d_prime - beta
  bool mass_non_increasing = false;
  bool waste_non_increasing = false;
  bool final_waste_small = false;  // last waste < 1e-3
  bool top_gap_positive = false;
};

inline double middle_interval_mass(const Scenario& s, std::size_t effort, double d_prime, double reach) {
  double m = 0.0;
  for (std::size_t j = 0; j < s.grid.size(); ++j)
    if (s.grid[j] >= d_prime - reach - 1e-12 && s.grid[j] < d_prime - 1e-12) m += s.dist(effort, j);
  return m;
}

inline SteepnessReport run_steepness_sweep(const Scenario& base, const std::vector<double>& gammas,
                                           const ContractFamily& bonus_family) {
  if (gammas.empty()) throw std::invalid_argument("empty gamma sequence");
  for (std::size_t i = 1; i < gammas.size(); ++i)
    if (!(gammas[i] > gammas[i - 1])) throw std::invalid_argument("gamma sequence must be increasing");
  for (std::size_t i = 0; i + 1 < base.effort.size(); ++i) {
    const auto rep = check_mlrp(base.dist, i, i + 1);
    if (!rep.holds)
      throw HypothesisFailure(detail::concat("distribution is not likelihood-ratio ordered between efforts ", i,
                                             " and ", i + 1));
  }
  Scenario s = base;
  s.mode = FeasibilityMode::PayBoundX;
  s.objective = Objective::Entrepreneur;
  const int res = bonus_family.resolution;

  // Debt contracts are manipulation-proof for every gamma, so one solve suffices.
  s.tech = ConvexPowerTech{gammas.front()};
  const auto debt = optimize_entrepreneur(s, ContractFamily{FamilyKind::Debt, res});
  if (!debt.feasible) throw HypothesisFailure("no debt contract satisfies the financier participation constraint");

  Scenario limit = s;
  limit.tech = prohibitive_tech(s.grid);
  const auto bonus = optimize_entrepreneur(limit, ContractFamily{FamilyKind::Bonus, res});
  const auto debt_limit = evaluate_contract(debt.contract, limit);
  std::size_t e_2nd = debt_limit.effort_index;
  if (bonus.feasible && bonus.outcome.agent_utility > debt_limit.agent_utility + kPayoffTolerance)
    e_2nd = bonus.outcome.effort_index;

  SteepnessReport rep;
  rep.debt_d = debt.params.at(0);
  rep.debt_utility = debt.outcome.agent_utility;
  rep.e_mp = debt.outcome.effort_index;
  rep.e_2nd = e_2nd;
  if (!(rep.e_mp < rep.e_2nd))
    throw HypothesisFailure(detail::concat("effort under the best debt contract (index ", rep.e_mp,
                                           ") is not below the effort without ex-post moral hazard (index ",
                                           rep.e_2nd, ")"));
  rep.d_prime = bonus.params.at(0);
  rep.beta = bonus.params.at(1);
  rep.jump = rep.d_prime - rep.beta;
  const std::size_t e_limit = bonus.outcome.effort_index;

  rep.rows.resize(gammas.size());
  detail::parallel_for(gammas.size(), [&](std::size_t i) {
    Scenario sg = s;
    const ConvexPowerTech tech{gammas[i]};
    sg.tech = tech;
    const auto o = evaluate_contract(bonus.contract, sg);
    auto& r = rep.rows[i];
    r.sweep_param = gammas[i];
    r.mp_utility = debt.outcome.agent_utility;
    r.manip_utility = o.agent_utility;
    r.gap = o.agent_utility - debt.outcome.agent_utility;
    r.waste = o.expected_waste;
    r.middle_mass = middle_interval_mass(sg, e_limit, rep.d_prime, inverse_cost(tech, rep.jump));
    r.effort_mp = debt.outcome.effort;
    r.effort_manip = o.effort;
    if (!o.ir_financier) r.note = "bonus contract misses financier participation at this gamma";
  }, 1);

  rep.mass_non_increasing = rep.waste_non_increasing = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    if (rep.rows[i].middle_mass > rep.rows[i - 1].middle_mass + 1e-12) rep.mass_non_increasing = false;
    if (rep.rows[i].waste > rep.rows[i - 1].waste + 1e-12) rep.waste_non_increasing = false;
  }
  rep.final_waste_small = rep.rows.back().waste < 1e-3;
  rep.top_gap_positive = rep.rows.back().gap > 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Generalized-debt representation max{0, alpha(x) x - d} + w of a
// non-decreasing contract.

struct GeneralizedDebtFit {
  double w = 0.0;
  double d = 0.0;
  std::vector<double> alpha;
  double residual = 0.0;
  double min_slope = 0.0;  // adjacent slopes of alpha(x) x
  double max_slope = 0.0;
  bool ok = false;
};

// Constructive fit: w is the payoff at the lowest point, d the last grid value
// before the payoff first rises above w, and alpha(x) x - d tracks y - w above
// that point. ok requires residual < 1e-9, alpha >= 0 and all adjacent slopes
// of alpha(x) x within [0, max_slope_allowed].
inline GeneralizedDebtFit fit_generalized_debt(const Contract& c, const ProfitGrid& grid, double max_slope_allowed) {
  const std::size_t n = grid.size();
  if (c.size() != n || n < 2) throw std::invalid_argument("fit needs an aligned contract on >= 2 points");
  GeneralizedDebtFit f;
  f.w = c[0];
  std::size_t first = n;
  for (std::size_t j = 0; j < n; ++j)
    if (c[j] > f.w + kPayoffTolerance) {
      first = j;
      break;
    }
  f.d = (first == n || first == 0) ? 0.0 : grid[first - 1];
  f.alpha.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (grid[j] <= 0.0) continue;
    f.alpha[j] = j < first ? f.d / grid[j] : (c[j] - f.w + f.d) / grid[j];
  }
  if (grid[0] <= 0.0) f.alpha[0] = f.alpha[1];

  f.min_slope = std::numeric_limits<double>::infinity();
  f.max_slope = -std::numeric_limits<double>::infinity();
  bool alpha_ok = true;
  for (std::size_t j = 0; j < n; ++j) {
    const double fit = std::max(0.0, f.alpha[j] * grid[j] - f.d) + f.w;
    f.residual = std::max(f.residual, std::abs(fit - c[j]));
    alpha_ok = alpha_ok && f.alpha[j] >= 0.0;
    if (j + 1 < n) {
      const double s = (f.alpha[j + 1] * grid[j + 1] - f.alpha[j] * grid[j]) / (grid[j + 1] - grid[j]);
      f.min_slope = std::min(f.min_slope, s);
      f.max_slope = std::max(f.max_slope, s);
    }
  }
  f.ok = alpha_ok && f.residual < 1e-9 && f.min_slope >= -1e-9 && f.max_slope <= max_slope_allowed + 1e-9;
  return f;
}

// ---------------------------------------------------------------------------
// Property verification

enum class Check { Thm4, Thm6, Cor7, Thm8, Lemma1, Lemma2, Lemma3, Lemma5 };

inline std::string check_name(Check c) {
  switch (c) {
    case Check::Thm4: return "Thm4";
    case Check::Thm6: return "Thm6";
    case Check::Cor7: return "Cor7";
    case Check::Thm8: return "Thm8";
    case Check::Lemma1: return "Lemma1";
    case Check::Lemma2: return "Lemma2";
    case Check::Lemma3: return "Lemma3";
    case Check::Lemma5: return "Lemma5";
  }
  return "?";
}

inline std::optional<Check> parse_check(const std::string& s) {
  for (Check c : {Check::Thm4, Check::Thm6, Check::Cor7, Check::Thm8, Check::Lemma1, Check::Lemma2, Check::Lemma3,
                  Check::Lemma5})
    if (check_name(c) == s) return c;
  return std::nullopt;
}

struct CheckResult {
  std::string name;
  int trials = 0;
  int passed = 0;
  int vacuous = 0;  // trials with nothing to check (for example an infeasible instance)
  std::vector<nlohmann::json> counterexamples;
  std::string note;

  bool ok() const { return passed + vacuous == trials; }
};

struct VerificationReport {
  std::uint64_t seed = 0;
  std::vector<CheckResult> results;

  bool ok() const {
    for (const auto& r : results)
      if (!r.ok()) return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["ok"] = ok();
    j["checks"] = nlohmann::json::array();
    for (const auto& r : results) {
      nlohmann::json o{{"name", r.name}, {"trials", r.trials}, {"passed", r.passed}, {"vacuous", r.vacuous},
                       {"ok", r.ok()}, {"counterexamples", r.counterexamples}};
      if (!r.note.empty()) o["note"] = r.note;
      j["checks"].push_back(std::move(o));
    }
    return j;
  }
};

namespace detail {

inline constexpr std::size_t kMaxCounterexamples = 5;

inline void record_failure(CheckResult& r, const Scenario& s, const Contract* c, const std::string& why) {
  if (r.counterexamples.size() >= kMaxCounterexamples) return;
  nlohmann::json j{{"reason", why}, {"scenario", scenario_to_json(s)}};
  if (c) j["contract"] = c->y;
  r.counterexamples.push_back(std::move(j));
}

inline Contract random_contract_for(const Scenario& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution jumpy(0.3);
  Contract c;
  for (std::size_t j = 0; j < s.grid.size(); ++j) {
    const double cap = payoff_cap(s, j);
    // occasional zero or full payoffs make discontinuous contracts common
    c.y.push_back(jumpy(rng) ? (u(rng) < 0.5 ? 0.0 : cap) : cap * u(rng));
  }
  return c;
}

// Largest chord slope of g over the non-negative shifts realizable on the grid;
// a Lipschitz bound for the value function.
inline double grid_lipschitz_bound(const ManipulationTech& tech, const ProfitGrid& grid) {
  std::vector<double> shifts{0.0};
  for (std::size_t a = 0; a < grid.size(); ++a)
    for (std::size_t b = a + 1; b < grid.size(); ++b) shifts.push_back(grid[b] - grid[a]);
  std::sort(shifts.begin(), shifts.end());
  double L = 0.0;
  for (std::size_t i = 0; i < shifts.size(); ++i)
    for (std::size_t k = i + 1; k < shifts.size(); ++k)
      if (shifts[k] > shifts[i] + 1e-12)
        L = std::max(L, (eval_cost(tech, shifts[k]) - eval_cost(tech, shifts[i])) / (shifts[k] - shifts[i]));
  return L;
}

// Three-point linear-tech instance whose stage-2 values land on the payoff
// lattice: grid {0, M/2, M}, payoffs bounded by M, 21 levels (41 for r = 0.05).
struct LinearInstance {
  Scenario s;
  int levels = 21;
  double rate = 0.0;
};

inline LinearInstance random_linear_instance(std::mt19937_64& rng, double M) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  static constexpr double kRates[] = {0.0, 0.05, 0.2};
  LinearInstance inst;
  inst.rate = kRates[rng() % 3];
  inst.levels = inst.rate == 0.05 ? 41 : 21;
  auto& s = inst.s;
  s.grid = ProfitGrid{{0.0, M / 2, M}};
  const double c1 = 0.3 * M * u(rng);
  s.effort = EffortGrid{{0.0, 1.0, 2.0}, {0.0, c1, 2.0 * c1 + 0.3 * M * u(rng)}};
  s.dist = make_mlrp_family(s.grid, s.effort, 0.3 + 2.5 * u(rng));
  s.tech = LinearTech{inst.rate};
  s.capital = M * u(rng) * 0.3;
  s.market_rate = 0.05;
  s.outside_utility = 0.25 * M * u(rng);
  s.mode = FeasibilityMode::PayBoundM;
  s.objective = Objective::Financier;
  return inst;
}

inline bool non_decreasing(const std::vector<double>& v) {
  for (std::size_t j = 1; j < v.size(); ++j)
    if (v[j] < v[j - 1] - kPayoffTolerance) return false;
  return true;
}

inline double min_adjacent_slope(const Contract& c, const ProfitGrid& g) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j + 1 < g.size(); ++j) m = std::min(m, (c[j + 1] - c[j]) / (g[j + 1] - g[j]));
  return m;
}

}  // namespace detail

inline VerificationReport verify_theorems(const Scenario& s, const std::vector<Check>& which, int trials,
                                          std::uint64_t seed) {
  VerificationReport rep;
  rep.seed = seed;
  for (Check check : which) {
    CheckResult r;
    r.name = check_name(check);
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(check) + 1)));

    switch (check) {
      case Check::Lemma1:
      case Check::Lemma2:
      case Check::Lemma3: {
        if (!has_free_burning(s.tech)) r.note = "technology charges for burning; monotonicity is not implied";
        const double L = detail::grid_lipschitz_bound(s.tech, s.grid);
        for (int t = 0; t < trials; ++t) {
          ++r.trials;
          const auto c = detail::random_contract_for(s, rng);
          const auto sol = solve_manipulation(c, s.tech, s.grid);
          std::string why;
          if (check == Check::Lemma1) {
            if (!detail::non_decreasing(sol.value.v)) why = "value function decreases";
            for (std::size_t j = 0; j < c.size() && why.empty(); ++j)
              if (sol.value[j] < c[j] - kPayoffTolerance) why = "value below contract payoff";
          } else if (check == Check::Lemma2) {
            if (slope_diagnostic(sol.value, s.grid) > L + 1e-9) why = "value slope exceeds cost Lipschitz bound";
          } else {
            const auto env = solve_manipulation(monotone_envelope(c), s.tech, s.grid);
            for (std::size_t j = 0; j < c.size() && why.empty(); ++j)
              if (std::abs(env.value[j] - sol.value[j]) > kPayoffTolerance) why = "envelope changes value function";
          }
          if (why.empty()) ++r.passed;
          else detail::record_failure(r, s, &c, why);
        }
        break;
      }
      case Check::Lemma5: {
        Scenario sl = s;
        const auto* lin = std::get_if<LinearTech>(&s.tech);
        if (!lin) r.note = "scenario technology is not linear; rates 0, 0.05, 0.2 are cycled";
        for (int t = 0; t < trials; ++t) {
          ++r.trials;
          const double rate = lin ? lin->rate : std::array{0.0, 0.05, 0.2}[t % 3];
          sl.tech = LinearTech{rate};
          const auto c = detail::random_contract_for(sl, rng);
          const auto v = solve_manipulation(c, sl.tech, sl.grid).value;
          if (slope_diagnostic(v, sl.grid) <= 1.0 + rate + 1e-9) ++r.passed;
          else detail::record_failure(r, sl, &c, "value slope exceeds 1 + r");
        }
        break;
      }
      case Check::Thm4: {
        for (int t = 0; t < trials; ++t) {
          ++r.trials;
          const auto c = detail::random_contract_for(s, rng);
          const auto a = evaluate_contract(c, s);
          const auto b = evaluate_contract(monotone_envelope(c), s);
          bool burns = false;
          for (double z : a.plan.z) burns = burns || z < 0.0;
          std::string why;
          if (a.effort_index != b.effort_index) why = "envelope changes effort";
          else if (std::abs(a.agent_utility - b.agent_utility) > kPayoffTolerance) why = "envelope changes agent utility";
          else if (b.principal_payoff < a.principal_payoff - kPayoffTolerance) why = "envelope lowers principal payoff";
          else if (burns && !(b.principal_payoff > a.principal_payoff)) why = "burning plan but no strict gain";
          if (why.empty()) ++r.passed;
          else detail::record_failure(r, s, &c, why);
        }
        break;
      }
      case Check::Thm6:
      case Check::Cor7: {
        const double M = s.grid.max();
        for (int t = 0; t < trials; ++t) {
          ++r.trials;
          const auto inst = detail::random_linear_instance(rng, M);
          const auto opt = brute_force_oracle(inst.s, inst.levels);
          if (!opt.feasible) {
            ++r.vacuous;
            continue;
          }
          std::string why;
          if (check == Check::Thm6) {
            if (!is_manipulation_proof(opt.contract, inst.s.tech, inst.s.grid).manipulation_proof)
              why = "optimum is not manipulation-proof";
            else if (!detail::non_decreasing(opt.contract.y)) why = "optimum decreases";
            else if (detail::min_adjacent_slope(opt.contract, inst.s.grid) < -1e-9 ||
                     slope_diagnostic(opt.contract, inst.s.grid) > 1.0 + inst.rate + 1e-9)
              why = "optimum slope outside [0, 1 + r]";
          } else {
            const auto fit = fit_generalized_debt(opt.contract, inst.s.grid, 1.0 + inst.rate);
            if (!fit.ok) why = detail::concat("generalized-debt fit failed (residual ", fit.residual, ")");
          }
          if (why.empty()) ++r.passed;
          else detail::record_failure(r, inst.s, &opt.contract, why);
        }
        break;
      }
      case Check::Thm8: {
        ++r.trials;
        try {
          const auto sw = run_steepness_sweep(s, default_gamma_grid(), ContractFamily{FamilyKind::Bonus, 21});
          std::string why;
          if (!sw.mass_non_increasing) why = "middle-interval mass increases along gamma";
          else if (!sw.waste_non_increasing) why = "expected waste increases along gamma";
          else if (!sw.final_waste_small) why = "expected waste at top gamma not below 1e-3";
          else if (!sw.top_gap_positive) why = "bonus does not dominate debt at top gamma";
          if (why.empty()) ++r.passed;
          else detail::record_failure(r, s, nullptr, why);
        } catch (const HypothesisFailure& e) {
          ++r.vacuous;
          r.note = std::string("hypothesis not met: ") + e.what();
        }
        break;
      }
    }
    rep.results.push_back(std::move(r));
  }
  return rep;
}

}  // namespace contractlab
