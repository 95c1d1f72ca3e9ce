#pragma once

// Stage-2 positioning choice: given a contract and a realized grid point, the
// agent picks the grid point to report. Everything here is exhaustive over
// grid-to-grid shifts.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include "contractlab/model.hpp"

namespace contractlab {

struct ManipulationPlan {
  std::vector<double> z;            // shift at each realization
  std::vector<std::size_t> target;  // reported grid index, x[target[j]] = x[j] + z[j]
};

struct ValueFunction {
  std::vector<double> v;

  std::size_t size() const { return v.size(); }
  double operator[](std::size_t j) const { return v[j]; }
};

struct ManipulationSolution {
  ManipulationPlan plan;
  ValueFunction value;

  bool is_zero_plan() const {
    for (std::size_t j = 0; j < plan.target.size(); ++j)
      if (plan.target[j] != j) return false;
    return true;
  }
};

namespace detail {

// Selection among payoff-equivalent reports: the financier's interim payoff
// x_k - y_k first, then |z|, then z. Comparisons are against set-wide extrema
// so the result does not depend on scan order.
inline std::size_t select_report(const std::vector<double>& value, const Contract& c,
                                 const ProfitGrid& grid, std::size_t j) {
  const std::size_t n = grid.size();
  const double best = *std::max_element(value.begin(), value.end());

  double best_fin = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k)
    if (value[k] >= best - kPayoffTolerance) best_fin = std::max(best_fin, grid[k] - c[k]);

  std::size_t chosen = n;
  for (std::size_t k = 0; k < n; ++k) {
    if (value[k] < best - kPayoffTolerance) continue;
    if (grid[k] - c[k] < best_fin - kPayoffTolerance) continue;
    if (chosen == n) {
      chosen = k;
      continue;
    }
    const double zk = grid[k] - grid[j];
    const double zc = grid[chosen] - grid[j];
    const double ak = std::abs(zk), ac = std::abs(zc);
    if (ak < ac - 1e-12 || (std::abs(ak - ac) <= 1e-12 && zk < zc)) chosen = k;
  }
  return chosen;
}

}  // namespace detail

inline ManipulationSolution solve_manipulation(const Contract& c, const ManipulationTech& tech,
                                               const ProfitGrid& grid) {
  const std::size_t n = grid.size();
  if (c.size() != n) throw std::invalid_argument("contract not aligned with profit grid");
  const double span = grid.max();

  ManipulationSolution out;
  out.plan.z.resize(n);
  out.plan.target.resize(n);
  out.value.v.resize(n);

  std::vector<double> value(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) value[k] = c[k] - eval_cost(tech, grid[k] - grid[j], span);
    const std::size_t k = detail::select_report(value, c, grid, j);
    out.plan.target[j] = k;
    out.plan.z[j] = grid[k] - grid[j];
    out.value.v[j] = value[k];
  }
  return out;
}

// Smallest non-decreasing contract dominating c (running maximum).
inline Contract monotone_envelope(const Contract& c) {
  Contract out = c;
  for (std::size_t j = 1; j < out.y.size(); ++j) out.y[j] = std::max(out.y[j], out.y[j - 1]);
  return out;
}

struct ManipulationWitness {
  std::size_t index;  // realization x_j
  double x;
  double z;           // strictly improving deviation
  double gain;
};

struct ManipulationProofReport {
  bool manipulation_proof = true;
  std::optional<ManipulationWitness> witness;
};

// True iff z = 0 attains the stage-2 maximum at every grid point. The witness
// is the lowest realization with a strict improvement and its best deviation.
inline ManipulationProofReport is_manipulation_proof(const Contract& c, const ManipulationTech& tech,
                                                     const ProfitGrid& grid) {
  const std::size_t n = grid.size();
  if (c.size() != n) throw std::invalid_argument("contract not aligned with profit grid");
  ManipulationProofReport rep;
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t arg = j;
    double best = c[j];
    for (std::size_t k = 0; k < n; ++k) {
      const double v = c[k] - eval_cost(tech, grid[k] - grid[j], grid.max());
      if (v > best) {
        best = v;
        arg = k;
      }
    }
    if (best > c[j] + kPayoffTolerance) {
      rep.manipulation_proof = false;
      rep.witness = ManipulationWitness{j, grid[j], grid[arg] - grid[j], best - c[j]};
      return rep;
    }
  }
  return rep;
}

inline double slope_diagnostic(const ValueFunction& v, const ProfitGrid& grid) {
  if (grid.size() < 2 || v.size() != grid.size())
    throw std::invalid_argument("slope diagnostic needs an aligned grid with >= 2 points");
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j + 1 < grid.size(); ++j)
    m = std::max(m, (v[j + 1] - v[j]) / (grid[j + 1] - grid[j]));
  return m;
}

inline double slope_diagnostic(const Contract& c, const ProfitGrid& grid) {
  return slope_diagnostic(ValueFunction{c.y}, grid);
}

// Rows x,y,z,v with a header line.
inline void write_manipulation_csv(std::ostream& os, const ProfitGrid& grid, const Contract& c,
                                   const ManipulationSolution& sol) {
  os << "x,y,z,v\n";
  const auto old = os.precision(12);
  for (std::size_t j = 0; j < grid.size(); ++j)
    os << grid[j] << ',' << c[j] << ',' << sol.plan.z[j] << ',' << sol.value[j] << '\n';
  os.precision(old);
}

}  // namespace contractlab
