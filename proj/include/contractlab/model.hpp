#pragma once

// Domain types for the two-stage contracting model: profit grid, effort grid,
// conditional distribution, manipulation technology, utility and scenario.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace contractlab {

inline constexpr double kProbabilityTolerance = 1e-12;
inline constexpr double kPayoffTolerance = 1e-9;

// Discretized support of the realized profit. points[0] >= 0, strictly increasing.
struct ProfitGrid {
  std::vector<double> points;

  std::size_t size() const { return points.size(); }
  double operator[](std::size_t j) const { return points[j]; }
  double max() const { return points.back(); }
  double min() const { return points.front(); }
};

struct EffortGrid {
  std::vector<double> levels;
  std::vector<double> costs;  // c(e), aligned with levels

  std::size_t size() const { return levels.size(); }
};

// rows[i][j] = P[x_j | e_i].
struct ConditionalDistribution {
  std::vector<std::vector<double>> rows;
  bool allow_zeros = false;

  std::size_t efforts() const { return rows.size(); }
  std::size_t outcomes() const { return rows.empty() ? 0 : rows.front().size(); }
  double operator()(std::size_t i, std::size_t j) const { return rows[i][j]; }

  double mean(std::size_t i, const ProfitGrid& grid) const {
    double m = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) m += rows[i][j] * grid[j];
    return m;
  }
};

// ---------------------------------------------------------------------------
// Manipulation technologies. Every kind except the two-sided quadratic makes
// burning (z <= 0) free.

struct LinearTech {
  double rate = 0.0;  // g(z) = (1 + rate) z for z > 0
};

// g(z) = z + gamma z^2 for z > 0. Marginal cost is 1 + 2 gamma z, so the
// infimum over z > 0 is exactly 1.
struct ConvexPowerTech {
  double gamma = 0.0;
};

// g(z) = z^2 for z > 0; the two-sided variant also charges z^2 for burning.
struct QuadraticTech {
  bool two_sided = false;
};

// Piecewise-linear interpolation through (z, cost) knots with z > 0. Below the
// first knot the segment from (0, 0) is used; beyond the last knot the final
// slope is extended.
struct TabulatedTech {
  std::vector<std::pair<double, double>> knots;
};

using ManipulationTech = std::variant<LinearTech, ConvexPowerTech, QuadraticTech, TabulatedTech>;

inline bool has_free_burning(const ManipulationTech& tech) {
  if (const auto* q = std::get_if<QuadraticTech>(&tech)) return !q->two_sided;
  return true;
}

inline std::string tech_name(const ManipulationTech& tech) {
  return std::visit(
      [](const auto& t) -> std::string {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, LinearTech>) return "linear";
        else if constexpr (std::is_same_v<T, ConvexPowerTech>) return "convex_power";
        else if constexpr (std::is_same_v<T, QuadraticTech>) return "quadratic";
        else return "tabulated";
      },
      tech);
}

namespace detail {

inline double tabulated_cost(const TabulatedTech& t, double z) {
  if (t.knots.empty()) return 0.0;
  double z0 = 0.0, c0 = 0.0;
  for (const auto& [zk, ck] : t.knots) {
    if (z <= zk) return c0 + (ck - c0) * (z - z0) / (zk - z0);
    z0 = zk;
    c0 = ck;
  }
  // extrapolate with the last segment's slope
  double zp = 0.0, cp = 0.0;
  if (t.knots.size() >= 2) {
    zp = t.knots[t.knots.size() - 2].first;
    cp = t.knots[t.knots.size() - 2].second;
  }
  return c0 + (c0 - cp) * (z - z0) / (z0 - zp);
}

}  // namespace detail

// Cost of shifting observed profit by z. Throws std::domain_error when z is
// not finite or |z| exceeds max_abs.
inline double eval_cost(const ManipulationTech& tech, double z,
                        double max_abs = std::numeric_limits<double>::infinity()) {
  if (!std::isfinite(z) || std::abs(z) > max_abs * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "manipulation z = " << z << " outside [-" << max_abs << ", " << max_abs << "]";
    throw std::domain_error(os.str());
  }
  return std::visit(
      [z](const auto& t) -> double {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, QuadraticTech>) {
          if (z <= 0.0) return t.two_sided ? z * z : 0.0;
          return z * z;
        } else {
          if (z <= 0.0) return 0.0;
          if constexpr (std::is_same_v<T, LinearTech>) return (1.0 + t.rate) * z;
          else if constexpr (std::is_same_v<T, ConvexPowerTech>) return z + t.gamma * z * z;
          else return detail::tabulated_cost(t, z);
        }
      },
      tech);
}

// Inverse of z + gamma z^2 on z >= 0: the largest shift whose cost is <= b.
inline double inverse_cost(const ConvexPowerTech& t, double b) {
  if (b <= 0.0) return 0.0;
  if (t.gamma == 0.0) return b;
  return (-1.0 + std::sqrt(1.0 + 4.0 * t.gamma * b)) / (2.0 * t.gamma);
}

// ---------------------------------------------------------------------------
// Utilities on net payoff.

struct RiskNeutral {};
struct Crra {
  double rho = 0.0;  // in [0, 1)
};
struct Cara {
  double alpha = 1.0;  // > 0
};

using Utility = std::variant<RiskNeutral, Crra, Cara>;

inline double utility(const Utility& u, double w) {
  return std::visit(
      [w](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, RiskNeutral>) {
          return w;
        } else if constexpr (std::is_same_v<T, Crra>) {
          if (w < 0.0) throw std::domain_error("CRRA utility of negative payoff");
          if (k.rho == 0.0) return w;
          return std::pow(w, 1.0 - k.rho) / (1.0 - k.rho);
        } else {
          return (1.0 - std::exp(-k.alpha * w)) / k.alpha;
        }
      },
      u);
}

inline bool is_risk_neutral(const Utility& u) { return std::holds_alternative<RiskNeutral>(u); }

// ---------------------------------------------------------------------------

enum class FeasibilityMode { PayBoundM, PayBoundX };
enum class Objective { Financier, Entrepreneur };

struct Scenario {
  ProfitGrid grid;
  EffortGrid effort;
  ConditionalDistribution dist;
  ManipulationTech tech = LinearTech{};
  Utility utility = RiskNeutral{};
  double capital = 0.0;        // Q
  double market_rate = 0.0;    // r, financier opportunity cost
  double outside_utility = 0.0;
  FeasibilityMode mode = FeasibilityMode::PayBoundM;
  Objective objective = Objective::Financier;

  double required_return() const { return (1.0 + market_rate) * capital; }
};

struct Contract {
  std::vector<double> y;

  std::size_t size() const { return y.size(); }
  double operator[](std::size_t j) const { return y[j]; }
  bool operator==(const Contract&) const = default;
};

// Upper payoff bound at grid point j under the scenario's feasibility mode.
inline double payoff_cap(const Scenario& s, std::size_t j) {
  return s.mode == FeasibilityMode::PayBoundM ? s.grid.max() : s.grid[j];
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> notes;  // non-fatal flags (relaxed support, skipped checks)

  bool ok() const { return violations.empty(); }
};

namespace detail {

template <typename... Args>
std::string concat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

inline bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace detail

inline void validate_grid(const ProfitGrid& grid, ValidationReport& rep) {
  const auto& p = grid.points;
  if (p.size() < 2) rep.violations.push_back("profit grid needs at least 2 points");
  if (!detail::all_finite(p)) rep.violations.push_back("profit grid has non-finite values");
  if (!p.empty() && p.front() < 0.0) rep.violations.push_back("profit grid starts below 0");
  for (std::size_t j = 1; j < p.size(); ++j) {
    if (!(p[j] > p[j - 1])) {
      rep.violations.push_back(detail::concat("profit grid not strictly increasing at ", j));
      break;
    }
  }
  if (!p.empty() && !(p.back() > 0.0)) rep.violations.push_back("profit grid maximum M must be > 0");
  if (!p.empty() && p.front() != 0.0)
    rep.notes.push_back("profit grid does not start at 0 (three-state form)");
}

inline void validate_effort(const EffortGrid& e, ValidationReport& rep) {
  const auto& lv = e.levels;
  const auto& c = e.costs;
  if (lv.empty()) rep.violations.push_back("effort grid is empty");
  if (lv.size() != c.size()) {
    rep.violations.push_back("effort levels and costs differ in length");
    return;
  }
  if (!detail::all_finite(lv) || !detail::all_finite(c))
    rep.violations.push_back("effort grid has non-finite values");
  for (std::size_t i = 1; i < lv.size(); ++i) {
    if (!(lv[i] > lv[i - 1])) {
      rep.violations.push_back(detail::concat("effort levels not strictly increasing at ", i));
      break;
    }
  }
  if (!lv.empty() && lv.front() < 0.0) rep.violations.push_back("effort levels below 0");
  bool cost_ok = std::all_of(c.begin(), c.end(), [](double x) { return x >= 0.0; });
  for (std::size_t i = 1; i < c.size() && cost_ok; ++i) cost_ok = c[i] >= c[i - 1];
  if (!cost_ok) rep.violations.push_back("cost not non-negative/non-decreasing");
  if (!lv.empty() && lv.front() == 0.0 && !c.empty() && c.front() != 0.0)
    rep.violations.push_back("cost of zero effort must be 0");

  if (lv.size() >= 3) {
    const double h = lv[1] - lv[0];
    bool uniform = true;
    for (std::size_t i = 2; i < lv.size(); ++i)
      uniform = uniform && std::abs((lv[i] - lv[i - 1]) - h) <= 1e-9 * std::max(1.0, std::abs(h));
    if (!uniform) {
      rep.notes.push_back("effort grid non-uniform: cost convexity check skipped");
    } else {
      for (std::size_t i = 1; i + 1 < c.size(); ++i) {
        if (c[i + 1] - 2.0 * c[i] + c[i - 1] < -kPayoffTolerance) {
          rep.violations.push_back(detail::concat("cost not convex at effort index ", i));
          break;
        }
      }
    }
  }
}

inline void validate_distribution(const ConditionalDistribution& d, const ProfitGrid& grid,
                                  ValidationReport& rep) {
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    const auto& row = d.rows[i];
    if (row.size() != grid.size()) {
      rep.violations.push_back(detail::concat("row ", i, " length differs from profit grid"));
      continue;
    }
    if (!detail::all_finite(row)) {
      rep.violations.push_back(detail::concat("row ", i, " has non-finite entries"));
      continue;
    }
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    if (std::abs(sum - 1.0) > kProbabilityTolerance)
      rep.violations.push_back(detail::concat("row ", i, " not normalized (sum ", sum, ")"));
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] < 0.0) {
        rep.violations.push_back(detail::concat("row ", i, " negative at ", j));
        break;
      }
      if (row[j] == 0.0) {
        if (d.allow_zeros) {
          rep.notes.push_back(detail::concat("row ", i, " has zero at ", j, " (relaxed support)"));
        } else {
          rep.violations.push_back(detail::concat("row ", i, " lacks full support at ", j));
        }
        break;
      }
    }
  }
  if (!rep.ok()) return;
  for (std::size_t i = 1; i < d.rows.size(); ++i) {
    if (!(d.mean(i, grid) > d.mean(i - 1, grid))) {
      rep.violations.push_back(
          detail::concat("expected profit not strictly increasing at effort ", i));
      break;
    }
  }
}

inline void validate_tech(const ManipulationTech& tech, ValidationReport& rep) {
  std::visit(
      [&rep](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, LinearTech>) {
          if (!(t.rate >= 0.0) || !std::isfinite(t.rate)) rep.violations.push_back("linear rate must be >= 0");
        } else if constexpr (std::is_same_v<T, ConvexPowerTech>) {
          if (!(t.gamma >= 0.0) || !std::isfinite(t.gamma))
            rep.violations.push_back("convex power gamma must be >= 0");
        } else if constexpr (std::is_same_v<T, TabulatedTech>) {
          double z0 = 0.0, c0 = 0.0;
          for (const auto& [z, c] : t.knots) {
            if (!(z > z0) || !(c >= c0) || !std::isfinite(z) || !std::isfinite(c)) {
              rep.violations.push_back("tabulated knots need increasing z > 0 and non-decreasing cost");
              return;
            }
            z0 = z;
            c0 = c;
          }
          if (t.knots.empty()) rep.violations.push_back("tabulated technology has no knots");
        }
      },
      tech);
}

inline void validate_utility(const Utility& u, ValidationReport& rep) {
  if (const auto* c = std::get_if<Crra>(&u)) {
    if (!(c->rho >= 0.0 && c->rho < 1.0)) rep.violations.push_back("CRRA rho must lie in [0, 1)");
  } else if (const auto* a = std::get_if<Cara>(&u)) {
    if (!(a->alpha > 0.0) || !std::isfinite(a->alpha)) rep.violations.push_back("CARA alpha must be > 0");
  }
}

inline ValidationReport validate_scenario(const Scenario& s) {
  ValidationReport rep;
  validate_grid(s.grid, rep);
  validate_effort(s.effort, rep);
  if (s.dist.efforts() != s.effort.size())
    rep.violations.push_back("distribution rows differ from effort grid size");
  validate_distribution(s.dist, s.grid, rep);
  validate_tech(s.tech, rep);
  validate_utility(s.utility, rep);
  if (!std::isfinite(s.capital) || s.capital < 0.0) rep.violations.push_back("Q must be finite and >= 0");
  if (!std::isfinite(s.market_rate) || s.market_rate < 0.0)
    rep.violations.push_back("market rate must be finite and >= 0");
  if (!std::isfinite(s.outside_utility) || s.outside_utility < 0.0)
    rep.violations.push_back("outside utility must be finite and >= 0");
  return rep;
}

// Limited liability and the payoff cap of the scenario's feasibility mode.
inline std::vector<std::string> contract_violations(const Contract& c, const Scenario& s) {
  std::vector<std::string> out;
  if (c.size() != s.grid.size()) {
    out.push_back("contract length differs from profit grid");
    return out;
  }
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (!std::isfinite(c[j])) out.push_back(detail::concat("y[", j, "] not finite"));
    else if (c[j] < -kPayoffTolerance) out.push_back(detail::concat("y[", j, "] below 0"));
    else if (c[j] > payoff_cap(s, j) + kPayoffTolerance)
      out.push_back(detail::concat("y[", j, "] above cap ", payoff_cap(s, j)));
  }
  return out;
}

inline bool is_feasible(const Contract& c, const Scenario& s) { return contract_violations(c, s).empty(); }

}  // namespace contractlab
