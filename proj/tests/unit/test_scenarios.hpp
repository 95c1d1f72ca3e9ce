#pragma once

#include <random>
#include <vector>

#include "contractlab/model.hpp"
#include "contractlab/orders.hpp"

namespace contractlab::testing {

// Three-state, two-effort distribution ordered by FOSD but not MLRP.
inline Scenario fosd_not_mlrp_scenario() {
  Scenario s;
  s.grid = ProfitGrid{{1.0, 2.5, 4.0}};
  s.effort = EffortGrid{{0.0, 1.0}, {0.0, 0.5}};
  s.dist.rows = {{0.5, 0.49995, 0.00005}, {0.5, 0.00005, 0.49995}};
  s.tech = LinearTech{0.0};
  return s;
}

inline Scenario tilted_scenario(std::vector<double> points, std::vector<double> levels, std::vector<double> costs,
                                double tilt) {
  Scenario s;
  s.grid = ProfitGrid{std::move(points)};
  s.effort = EffortGrid{std::move(levels), std::move(costs)};
  s.dist = make_mlrp_family(s.grid, s.effort, tilt);
  return s;
}

inline Contract random_contract(std::mt19937_64& rng, std::size_t n, double hi) {
  std::uniform_real_distribution<double> u(0.0, hi);
  Contract c;
  for (std::size_t j = 0; j < n; ++j) c.y.push_back(u(rng));
  return c;
}

inline ProfitGrid random_grid(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> step(0.2, 2.0);
  ProfitGrid g;
  double x = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    g.points.push_back(x);
    x += step(rng);
  }
  return g;
}

}  // namespace contractlab::testing
