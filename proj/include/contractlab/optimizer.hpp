#pragma once

// Backward induction: stage-2 manipulation, stage-1 effort, and the outer
// contract search for either party. Infeasibility is reported through
// OptimizationResult::feasible, never thrown.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "contractlab/manipulation.hpp"
#include "contractlab/model.hpp"
#include "contractlab/parallel.hpp"

namespace contractlab {

struct EffortChoice {
  std::size_t index = 0;
  std::vector<double> utilities;  // E[u(V) | e] - c(e) for every effort
};

// The stage-2 value function depends only on the realized grid point, so it is
// shared by every effort. Ties within tolerance go to the highest effort.
inline EffortChoice best_effort(const ValueFunction& v, const Scenario& s) {
  EffortChoice out;
  const std::size_t ne = s.effort.size();
  out.utilities.resize(ne);
  std::vector<double> uv(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) uv[j] = utility(s.utility, v[j]);
  for (std::size_t i = 0; i < ne; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) acc += uv[j] * s.dist(i, j);
    out.utilities[i] = acc - s.effort.costs[i];
  }
  const double best = *std::max_element(out.utilities.begin(), out.utilities.end());
  for (std::size_t i = ne; i-- > 0;) {
    if (out.utilities[i] >= best - kPayoffTolerance) {
      out.index = i;
      break;
    }
  }
  return out;
}

inline EffortChoice best_effort(const Contract& c, const Scenario& s) {
  return best_effort(solve_manipulation(c, s.tech, s.grid).value, s);
}

struct EquilibriumOutcome {
  std::size_t effort_index = 0;
  double effort = 0.0;
  ManipulationPlan plan;
  ValueFunction value;
  std::vector<double> effort_utilities;
  double agent_utility = 0.0;     // E[u(V) | e] - c(e)
  double financier_revenue = 0.0; // E[x + z - Y(x + z) | e]
  double principal_payoff = 0.0;  // revenue - Q
  double financier_net = 0.0;     // revenue - (1 + r) Q
  double expected_waste = 0.0;    // E[g(z) | e]
  bool ir_agent = false;          // agent_utility >= outside utility
  bool ir_financier = false;      // revenue >= (1 + r) Q
};

inline EquilibriumOutcome evaluate_contract(const Contract& c, const Scenario& s) {
  auto sol = solve_manipulation(c, s.tech, s.grid);
  auto choice = best_effort(sol.value, s);
  EquilibriumOutcome out;
  out.effort_index = choice.index;
  out.effort = s.effort.levels[choice.index];
  const std::size_t i = choice.index;
  for (std::size_t j = 0; j < s.grid.size(); ++j) {
    const std::size_t k = sol.plan.target[j];
    const double p = s.dist(i, j);
    out.financier_revenue += p * (s.grid[k] - c[k]);
    out.expected_waste += p * eval_cost(s.tech, sol.plan.z[j], s.grid.max());
  }
  out.agent_utility = choice.utilities[i];
  out.principal_payoff = out.financier_revenue - s.capital;
  out.financier_net = out.financier_revenue - s.required_return();
  out.ir_agent = out.agent_utility >= s.outside_utility - kPayoffTolerance;
  out.ir_financier = out.financier_net >= -kPayoffTolerance;
  out.plan = std::move(sol.plan);
  out.value = std::move(sol.value);
  out.effort_utilities = std::move(choice.utilities);
  return out;
}

// ---------------------------------------------------------------------------
// Contract families

enum class FamilyKind { Debt, Bonus, GeneralizedDebt, FreeGrid };

inline std::string family_name(FamilyKind k) {
  switch (k) {
    case FamilyKind::Debt: return "debt";
    case FamilyKind::Bonus: return "bonus";
    case FamilyKind::GeneralizedDebt: return "gdebt";
    case FamilyKind::FreeGrid: return "grid";
  }
  return "?";
}

inline std::vector<std::string> family_param_names(FamilyKind k, std::size_t points) {
  switch (k) {
    case FamilyKind::Debt: return {"d"};
    case FamilyKind::Bonus: return {"d_prime", "beta"};
    case FamilyKind::GeneralizedDebt: return {"d", "w", "alpha"};
    case FamilyKind::FreeGrid: {
      std::vector<std::string> names;
      for (std::size_t j = 0; j < points; ++j) names.push_back("y" + std::to_string(j));
      return names;
    }
  }
  return {};
}

// resolution is the number of points per parameter axis (the payoff lattice
// size for FreeGrid).
struct ContractFamily {
  FamilyKind kind = FamilyKind::Debt;
  int resolution = 21;
  double alpha_max = 0.0;  // GeneralizedDebt slope cap; 0 picks 1 + r for linear tech, 1 otherwise
};

class SizeExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

inline Contract clip_to_caps(Contract c, const Scenario& s) {
  for (std::size_t j = 0; j < c.size(); ++j) c.y[j] = std::clamp(c.y[j], 0.0, payoff_cap(s, j));
  return c;
}

// max{0, x - d}
inline Contract debt_contract(const ProfitGrid& grid, double d) {
  Contract c;
  for (double x : grid.points) c.y.push_back(std::max(0.0, x - d));
  return c;
}

// 0 below d_prime, x - beta at or above it; jump b = d_prime - beta.
inline Contract bonus_contract(const ProfitGrid& grid, double d_prime, double beta) {
  if (!(beta > 0.0 && beta < d_prime)) throw std::invalid_argument("bonus needs 0 < beta < d_prime");
  Contract c;
  for (double x : grid.points) c.y.push_back(x >= d_prime - 1e-12 ? x - beta : 0.0);
  return c;
}

// max{0, alpha x - d} + w with constant alpha.
inline Contract generalized_debt_contract(const ProfitGrid& grid, double d, double w, double alpha) {
  Contract c;
  for (double x : grid.points) c.y.push_back(std::max(0.0, alpha * x - d) + w);
  return c;
}

inline double default_alpha_max(const Scenario& s, const ContractFamily& fam) {
  if (fam.alpha_max > 0.0) return fam.alpha_max;
  if (const auto* lin = std::get_if<LinearTech>(&s.tech)) return 1.0 + lin->rate;
  return 1.0;
}

inline Contract make_member(const Scenario& s, const ContractFamily& fam, const std::vector<double>& p) {
  switch (fam.kind) {
    case FamilyKind::Debt: return clip_to_caps(debt_contract(s.grid, p.at(0)), s);
    case FamilyKind::Bonus: return clip_to_caps(bonus_contract(s.grid, p.at(0), p.at(1)), s);
    case FamilyKind::GeneralizedDebt:
      return clip_to_caps(generalized_debt_contract(s.grid, p.at(0), p.at(1), p.at(2)), s);
    case FamilyKind::FreeGrid: return clip_to_caps(Contract{p}, s);
  }
  throw std::logic_error("unknown family");
}

// Lattice of `levels` payoffs over [0, cap_j] at grid point j.
inline std::vector<double> payoff_lattice(const Scenario& s, std::size_t j, int levels) {
  std::vector<double> out;
  if (levels == 1) return {0.0};
  for (int k = 0; k < levels; ++k) out.push_back(payoff_cap(s, j) * k / (levels - 1));
  return out;
}

inline std::vector<double> uniform_axis(double lo, double hi, int n) {
  std::vector<double> v;
  if (n <= 1) return {lo};
  for (int k = 0; k < n; ++k) v.push_back(lo + (hi - lo) * k / (n - 1));
  return v;
}

// ---------------------------------------------------------------------------
// Selection and results

struct SurfacePoint {
  std::vector<double> params;
  double agent_utility = 0.0;
  double principal_payoff = 0.0;
  double expected_waste = 0.0;
  double effort = 0.0;
  bool feasible = false;
};

struct OptimizationResult {
  bool feasible = false;
  std::string message;
  FamilyKind family = FamilyKind::Debt;
  std::vector<std::string> param_names;
  std::vector<double> params;
  Contract contract;
  EquilibriumOutcome outcome;
  std::vector<SurfacePoint> surface;
};

namespace detail {

inline double objective_of(const SurfacePoint& p, Objective obj) {
  return obj == Objective::Financier ? p.principal_payoff : p.agent_utility;
}

// Among feasible points: maximal objective (within tolerance), then lowest
// expected waste (within tolerance), then lexicographically smallest params.
// The two-stage comparison against set-wide extrema keeps it order-free.
inline std::optional<std::size_t> select_best(const std::vector<SurfacePoint>& pts, Objective obj) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts)
    if (p.feasible) best = std::max(best, objective_of(p, obj));
  if (!std::isfinite(best)) return std::nullopt;
  double min_waste = std::numeric_limits<double>::infinity();
  for (const auto& p : pts)
    if (p.feasible && objective_of(p, obj) >= best - kPayoffTolerance)
      min_waste = std::min(min_waste, p.expected_waste);
  std::optional<std::size_t> chosen;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    if (!p.feasible || objective_of(p, obj) < best - kPayoffTolerance) continue;
    if (p.expected_waste > min_waste + kPayoffTolerance) continue;
    if (!chosen || std::lexicographical_compare(p.params.begin(), p.params.end(),
                                                pts[*chosen].params.begin(), pts[*chosen].params.end()))
      chosen = i;
  }
  return chosen;
}

inline SurfacePoint summarize(const std::vector<double>& params, const EquilibriumOutcome& o, bool feasible) {
  return SurfacePoint{params, o.agent_utility, o.principal_payoff, o.expected_waste, o.effort, feasible};
}

inline bool member_feasible(const Contract& c, const EquilibriumOutcome& o, const Scenario& s, Objective obj) {
  if (!is_feasible(c, s)) return false;
  return obj == Objective::Financier ? o.ir_agent : o.ir_financier;
}

// All non-decreasing sequences with y_j drawn from the lattice at point j.
inline std::vector<std::vector<double>> monotone_lattice_members(const Scenario& s, int levels,
                                                                 std::size_t max_members) {
  const std::size_t n = s.grid.size();
  std::vector<std::vector<double>> lattices(n);
  for (std::size_t j = 0; j < n; ++j) lattices[j] = payoff_lattice(s, j, levels);
  std::vector<std::vector<double>> out;
  std::vector<double> cur(n);
  std::function<void(std::size_t)> rec = [&](std::size_t j) {
    if (j == n) {
      if (out.size() >= max_members) throw SizeExceeded("monotone lattice enumeration too large");
      out.push_back(cur);
      return;
    }
    for (double v : lattices[j]) {
      if (j > 0 && v < cur[j - 1] - kPayoffTolerance) continue;
      cur[j] = v;
      rec(j + 1);
    }
  };
  rec(0);
  return out;
}

inline OptimizationResult finish(const Scenario& s, const ContractFamily& fam, std::vector<SurfacePoint> surface,
                                 Objective obj) {
  OptimizationResult res;
  res.family = fam.kind;
  res.param_names = family_param_names(fam.kind, s.grid.size());
  auto best = select_best(surface, obj);
  if (!best) {
    res.feasible = false;
    res.message = obj == Objective::Financier
                      ? "infeasible: no family member satisfies the agent participation constraint"
                      : "infeasible: no family member satisfies the financier participation constraint";
  } else {
    res.feasible = true;
    res.params = surface[*best].params;
    res.contract = make_member(s, fam, res.params);
    res.outcome = evaluate_contract(res.contract, s);
    res.message = "ok";
  }
  res.surface = std::move(surface);
  return res;
}

inline std::vector<SurfacePoint> evaluate_all(const Scenario& s, const ContractFamily& fam,
                                              const std::vector<std::vector<double>>& members, Objective obj) {
  std::vector<SurfacePoint> pts(members.size());
  parallel_for(members.size(), [&](std::size_t i) {
    const Contract c = make_member(s, fam, members[i]);
    const auto o = evaluate_contract(c, s);
    pts[i] = summarize(members[i], o, member_feasible(c, o, s, obj));
  });
  return pts;
}

inline void check_resolution(const ContractFamily& fam) {
  if (fam.resolution < 2) throw std::invalid_argument("family resolution must be >= 2");
}

}  // namespace detail

// Maximizes the financier's payoff over the family subject to the agent's
// participation constraint and the payoff caps. The financier's own
// participation constraint is reported in outcome.ir_financier, not imposed.
// FreeGrid searches non-decreasing lattice contracts only: replacing a contract
// by its monotone envelope keeps the value function and effort and weakly
// raises the financier's payoff, so nothing is lost.
inline OptimizationResult optimize_financier(const Scenario& s, const ContractFamily& fam) {
  detail::check_resolution(fam);
  const int n = fam.resolution;
  const double M = s.grid.max();
  std::vector<std::vector<double>> members;
  switch (fam.kind) {
    case FamilyKind::Debt:
      for (double d : uniform_axis(0.0, M, n)) members.push_back({d});
      break;
    case FamilyKind::Bonus:
      for (int a = 1; a < n; ++a) {
        const double dp = M * a / (n - 1);
        for (int b = 1; b < n; ++b) members.push_back({dp, dp * b / n});
      }
      break;
    case FamilyKind::GeneralizedDebt: {
      const double amax = default_alpha_max(s, fam);
      for (double d : uniform_axis(0.0, amax * M, n))
        for (double w : uniform_axis(0.0, M, n))
          for (double a : uniform_axis(0.0, amax, n)) members.push_back({d, w, a});
      break;
    }
    case FamilyKind::FreeGrid:
      members = detail::monotone_lattice_members(s, n, 5'000'000);
      break;
  }
  auto pts = detail::evaluate_all(s, fam, members, Objective::Financier);
  return detail::finish(s, fam, std::move(pts), Objective::Financier);
}

namespace detail {

// Smallest parameter in [lo, hi] whose member satisfies the financier's
// participation constraint: scan `n` uniform points, then bisect the first
// infeasible-to-feasible bracket to 1e-9. With lo_is_member false, lo itself
// is only a bracket end.
inline std::optional<double> minimal_feasible(double lo, double hi, int n, bool lo_is_member,
                                              const std::function<bool(double)>& feasible) {
  const auto axis = uniform_axis(lo, hi, n);
  std::optional<std::size_t> first;
  for (std::size_t k = lo_is_member ? 0 : 1; k < axis.size(); ++k) {
    if (feasible(axis[k])) {
      first = k;
      break;
    }
  }
  if (!first) return std::nullopt;
  if (*first == 0) return axis[0];
  double a = axis[*first - 1], b = axis[*first];
  while (b - a > 1e-9) {
    const double mid = 0.5 * (a + b);
    if (feasible(mid)) b = mid;
    else a = mid;
  }
  return b;
}

}  // namespace detail

// Maximizes the agent's utility subject to the financier receiving (1 + r) Q,
// with payoffs bounded by realized profit. The one-dimensional parameter that
// moves value from agent to financier (d for debt forms, beta for bonus) is
// driven to the participation boundary by bisection.
inline OptimizationResult optimize_entrepreneur(const Scenario& s, const ContractFamily& fam) {
  if (s.mode != FeasibilityMode::PayBoundX)
    throw std::invalid_argument("entrepreneur problem requires the pay-bound-X feasibility mode");
  detail::check_resolution(fam);
  const int n = fam.resolution;
  const double M = s.grid.max();

  std::vector<SurfacePoint> pts;
  auto probe = [&](const std::vector<double>& params) {
    const Contract c = make_member(s, fam, params);
    const auto o = evaluate_contract(c, s);
    const bool ok = detail::member_feasible(c, o, s, Objective::Entrepreneur);
    return std::pair{detail::summarize(params, o, ok), ok};
  };

  // Each outer parameter tuple yields at most one candidate; tuples are
  // independent, so they are solved in parallel into fixed slots.
  std::vector<std::vector<double>> outer;
  std::function<std::vector<double>(const std::vector<double>&, double)> assemble;
  double lo = 0.0, hi = 0.0;
  bool lo_member = true;
  switch (fam.kind) {
    case FamilyKind::Debt:
      outer.push_back({});
      assemble = [](const std::vector<double>&, double d) { return std::vector<double>{d}; };
      hi = M;
      break;
    case FamilyKind::Bonus:
      for (int a = 1; a < n; ++a) outer.push_back({M * a / (n - 1)});
      assemble = [](const std::vector<double>& o, double beta) { return std::vector<double>{o[0], beta}; };
      lo_member = false;
      break;
    case FamilyKind::GeneralizedDebt: {
      const double amax = default_alpha_max(s, fam);
      for (double w : uniform_axis(0.0, M, n))
        for (double a : uniform_axis(0.0, amax, n)) outer.push_back({w, a});
      assemble = [](const std::vector<double>& o, double d) { return std::vector<double>{d, o[0], o[1]}; };
      hi = amax * M;
      break;
    }
    case FamilyKind::FreeGrid: {
      auto members = detail::monotone_lattice_members(s, n, 5'000'000);
      auto all = detail::evaluate_all(s, fam, members, Objective::Entrepreneur);
      return detail::finish(s, fam, std::move(all), Objective::Entrepreneur);
    }
  }

  std::vector<std::optional<SurfacePoint>> slots(outer.size());
  detail::parallel_for(
      outer.size(),
      [&](std::size_t t) {
        const auto& o = outer[t];
        double a = lo, b = hi;
        int steps = n;
        if (fam.kind == FamilyKind::Bonus) {
          a = 0.0;
          b = o[0] * (n - 1) / n;  // beta stays strictly inside (0, d_prime)
          steps = n;
        }
        auto feasible = [&](double p) { return probe(assemble(o, p)).second; };
        auto param = detail::minimal_feasible(a, b, steps, lo_member, feasible);
        if (param) slots[t] = probe(assemble(o, *param)).first;
      },
      1);
  for (auto& sl : slots)
    if (sl) pts.push_back(std::move(*sl));
  return detail::finish(s, fam, std::move(pts), Objective::Entrepreneur);
}

// Exhaustive search over every lattice contract (levels payoffs per grid
// point over [0, cap_j]). Independent of the family optimizers: it does not
// assume monotonicity or any contract shape. Objective follows s.objective.
inline OptimizationResult brute_force_oracle(const Scenario& s, int levels) {
  const std::size_t n = s.grid.size();
  if (n > 5) throw SizeExceeded("brute force oracle supports at most 5 grid points");
  if (levels < 1 || levels > 64) throw SizeExceeded("brute force oracle supports 1..64 payoff levels");
  const Objective obj = s.objective;

  std::vector<std::vector<double>> lattices(n);
  for (std::size_t j = 0; j < n; ++j) lattices[j] = payoff_lattice(s, j, levels);
  std::uint64_t total = 1;
  for (std::size_t j = 0; j < n; ++j) total *= static_cast<std::uint64_t>(levels);

  // index -> contract; y_0 is the most significant digit, so index order is
  // lexicographic order of the payoff vector.
  auto decode = [&](std::uint64_t idx) {
    Contract c;
    c.y.resize(n);
    for (std::size_t j = n; j-- > 0;) {
      c.y[j] = lattices[j][idx % levels];
      idx /= levels;
    }
    return c;
  };
  struct Eval {
    bool feasible;
    double objective;
    double waste;
  };
  auto eval = [&](std::uint64_t idx) {
    const Contract c = decode(idx);
    const auto o = evaluate_contract(c, s);
    const bool ok = detail::member_feasible(c, o, s, obj);
    return Eval{ok, obj == Objective::Financier ? o.principal_payoff : o.agent_utility, o.expected_waste};
  };

  const std::size_t chunks = std::min<std::uint64_t>(total, 256);
  auto chunk_lo = [&](std::size_t k) { return total * k / chunks; };

  std::vector<double> part(chunks, -std::numeric_limits<double>::infinity());
  detail::parallel_for(chunks, [&](std::size_t k) {
    for (std::uint64_t i = chunk_lo(k); i < chunk_lo(k + 1); ++i) {
      const auto e = eval(i);
      if (e.feasible) part[k] = std::max(part[k], e.objective);
    }
  }, 1);
  const double best = *std::max_element(part.begin(), part.end());

  OptimizationResult res;
  res.family = FamilyKind::FreeGrid;
  res.param_names = family_param_names(FamilyKind::FreeGrid, n);
  if (!std::isfinite(best)) {
    res.feasible = false;
    res.message = "infeasible: no lattice contract satisfies the participation constraint";
    return res;
  }

  std::fill(part.begin(), part.end(), std::numeric_limits<double>::infinity());
  detail::parallel_for(chunks, [&](std::size_t k) {
    for (std::uint64_t i = chunk_lo(k); i < chunk_lo(k + 1); ++i) {
      const auto e = eval(i);
      if (e.feasible && e.objective >= best - kPayoffTolerance) part[k] = std::min(part[k], e.waste);
    }
  }, 1);
  const double min_waste = *std::min_element(part.begin(), part.end());

  std::vector<std::uint64_t> first(chunks, total);
  detail::parallel_for(chunks, [&](std::size_t k) {
    for (std::uint64_t i = chunk_lo(k); i < chunk_lo(k + 1); ++i) {
      const auto e = eval(i);
      if (e.feasible && e.objective >= best - kPayoffTolerance && e.waste <= min_waste + kPayoffTolerance) {
        first[k] = i;
        break;
      }
    }
  }, 1);
  const std::uint64_t arg = *std::min_element(first.begin(), first.end());

  res.feasible = true;
  res.message = "ok";
  res.contract = decode(arg);
  res.params = res.contract.y;
  res.outcome = evaluate_contract(res.contract, s);
  return res;
}

}  // namespace contractlab
