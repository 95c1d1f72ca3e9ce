#include <gtest/gtest.h>

#include <random>

#include "contractlab/optimizer.hpp"
#include "contractlab/orders.hpp"
#include "test_scenarios.hpp"

namespace cl = contractlab;

namespace {

cl::Scenario convex_mlrp_scenario(double gamma) {
  auto s = cl::testing::tilted_scenario({0, 1, 2, 3, 4, 5, 6, 7, 8}, {0, 1, 2}, {0, 0.4, 1.2}, 2.0);
  s.tech = cl::ConvexPowerTech{gamma};
  s.capital = 1.5;
  s.market_rate = 0.1;
  s.mode = cl::FeasibilityMode::PayBoundX;
  s.objective = cl::Objective::Entrepreneur;
  return s;
}

}  // namespace

TEST(BestEffort, FlatPayPicksLowestEffort) {
  auto s = cl::testing::fosd_not_mlrp_scenario();
  auto ch = cl::best_effort(cl::Contract{{1.0, 1.0, 1.0}}, s);
  EXPECT_EQ(ch.index, 0u);
}

TEST(BestEffort, CostlessEffortTiesGoHigh) {
  auto s = cl::testing::fosd_not_mlrp_scenario();
  s.effort.costs = {0.0, 0.0};
  EXPECT_EQ(cl::best_effort(cl::Contract{{1.0, 1.0, 1.0}}, s).index, 1u);
  EXPECT_EQ(cl::best_effort(cl::Contract{{0.0, 0.5, 2.0}}, s).index, 1u);
}

TEST(BestEffort, HandArithmetic) {
  auto s = cl::testing::fosd_not_mlrp_scenario();
  s.tech = cl::TabulatedTech{{{4.0, 1e12}}};  // inflating is prohibitive, so V = Y
  auto ch = cl::best_effort(cl::Contract{{0.0, 0.0, 4.0}}, s);
  EXPECT_EQ(ch.index, 1u);
  EXPECT_NEAR(ch.utilities[0], 0.00005 * 4, 1e-12);
  EXPECT_NEAR(ch.utilities[1], 0.49995 * 4 - 0.5, 1e-12);
}

TEST(Evaluate, ManipulationProofHasNoWaste) {
  auto s = convex_mlrp_scenario(1.0);
  auto o = cl::evaluate_contract(cl::debt_contract(s.grid, 2.0), s);
  EXPECT_EQ(o.expected_waste, 0.0);
  EXPECT_TRUE(std::all_of(o.plan.z.begin(), o.plan.z.end(), [](double z) { return z == 0.0; }));
}

TEST(Evaluate, BonusWasteMatchesMiddleIntervalSum) {
  for (double gamma : {0.5, 2.0, 8.0}) {
    auto s = convex_mlrp_scenario(gamma);
    const double dp = 5.0, beta = 2.5;
    const cl::ConvexPowerTech tech{gamma};
    auto o = cl::evaluate_contract(cl::bonus_contract(s.grid, dp, beta), s);
    const double reach = cl::inverse_cost(tech, dp - beta);
    double expect = 0.0;
    for (std::size_t j = 0; j < s.grid.size(); ++j) {
      const double x = s.grid[j];
      if (x >= dp - reach - 1e-12 && x < dp) expect += cl::eval_cost(tech, dp - x) * s.dist(o.effort_index, j);
    }
    EXPECT_NEAR(o.expected_waste, expect, 1e-12) << gamma;
    if (reach >= 1.0) {
      EXPECT_GT(o.expected_waste, 0.0);
    }
  }
}

TEST(Evaluate, UsesValueFunctionForAgentUtility) {
  auto s = cl::testing::fosd_not_mlrp_scenario();
  auto o = cl::evaluate_contract(cl::Contract{{0.7, 0.2, 1.5}}, s);
  EXPECT_EQ(o.value.v, (std::vector<double>{0.7, 0.7, 1.5}));
  const auto& row = s.dist.rows[o.effort_index];
  const double eu = 0.7 * row[0] + 0.7 * row[1] + 1.5 * row[2] - s.effort.costs[o.effort_index];
  EXPECT_NEAR(o.agent_utility, eu, 1e-12);
  // the burn at x_m hands the financier x_l - y_l
  const double rev = (1 - 0.7) * row[0] + (1 - 0.7) * row[1] + (4 - 1.5) * row[2];
  EXPECT_NEAR(o.financier_revenue, rev, 1e-12);
}

TEST(Evaluate, EnvelopeWeaklyRaisesPrincipal) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 1000; ++t) {
    auto s = cl::testing::tilted_scenario({0, 0.7, 1.5, 2.6, 3.0}, {0, 1, 2}, {0, 0.2, 0.6}, 1.5);
    s.tech = (t % 2) ? cl::ManipulationTech{cl::LinearTech{0.1}} : cl::ConvexPowerTech{0.5};
    const auto c = cl::testing::random_contract(rng, 5, 3.0);
    const auto a = cl::evaluate_contract(c, s);
    const auto b = cl::evaluate_contract(cl::monotone_envelope(c), s);
    ASSERT_EQ(a.effort_index, b.effort_index);
    ASSERT_NEAR(a.agent_utility, b.agent_utility, 1e-9);
    ASSERT_GE(b.principal_payoff, a.principal_payoff - 1e-9);
    bool burns = false;
    for (double z : a.plan.z) burns = burns || z < 0.0;
    if (burns) {
      EXPECT_GT(b.principal_payoff, a.principal_payoff + 1e-12);
    }
  }
}

TEST(Families, MembersAndInvariants) {
  cl::ProfitGrid g{{0, 1, 2, 3}};
  EXPECT_EQ(cl::debt_contract(g, 1.5).y, (std::vector<double>{0, 0, 0.5, 1.5}));
  EXPECT_EQ(cl::bonus_contract(g, 2.0, 0.5).y, (std::vector<double>{0, 0, 1.5, 2.5}));
  EXPECT_THROW(cl::bonus_contract(g, 2.0, 2.0), std::invalid_argument);
  EXPECT_EQ(cl::generalized_debt_contract(g, 1.0, 0.5, 0.5).y, (std::vector<double>{0.5, 0.5, 0.5, 1.0}));
}

TEST(OptimizeFinancier, FreeGridLinearIsManipulationProof) {
  auto s = cl::testing::tilted_scenario({0, 2, 4}, {0, 1, 2}, {0, 0.3, 0.9}, 2.0);
  for (double r : {0.0, 0.05, 0.2}) {
    s.tech = cl::LinearTech{r};
    s.outside_utility = 0.4;
    auto res = cl::optimize_financier(s, cl::ContractFamily{cl::FamilyKind::FreeGrid, 41});
    ASSERT_TRUE(res.feasible);
    EXPECT_TRUE(cl::is_manipulation_proof(res.contract, s.tech, s.grid).manipulation_proof);
    EXPECT_LE(cl::slope_diagnostic(res.contract, s.grid), 1 + r + 1e-9);
    EXPECT_TRUE(res.outcome.ir_agent);
  }
}

TEST(OptimizeFinancier, UnreachableOutsideUtilityIsInfeasible) {
  auto s = cl::testing::fosd_not_mlrp_scenario();
  s.outside_utility = 100.0;
  for (auto kind : {cl::FamilyKind::Debt, cl::FamilyKind::Bonus, cl::FamilyKind::FreeGrid}) {
    auto res = cl::optimize_financier(s, cl::ContractFamily{kind, 5});
    EXPECT_FALSE(res.feasible);
    EXPECT_NE(res.message.find("infeasible"), std::string::npos);
  }
}

TEST(OptimizeFinancier, FreeGridMatchesOracleOnThreeStateTable) {
  auto s = cl::testing::fosd_not_mlrp_scenario();
  s.outside_utility = 0.3;
  auto fam = cl::optimize_financier(s, cl::ContractFamily{cl::FamilyKind::FreeGrid, 21});
  auto orc = cl::brute_force_oracle(s, 21);
  ASSERT_TRUE(fam.feasible);
  ASSERT_TRUE(orc.feasible);
  EXPECT_NEAR(fam.outcome.principal_payoff, orc.outcome.principal_payoff, 1e-9);
}

TEST(OptimizeEntrepreneur, RequiresPayBoundX) {
  auto s = convex_mlrp_scenario(1.0);
  s.mode = cl::FeasibilityMode::PayBoundM;
  EXPECT_THROW(cl::optimize_entrepreneur(s, cl::ContractFamily{}), std::invalid_argument);
}

TEST(OptimizeEntrepreneur, DebtBindsFinancierParticipation) {
  auto s = convex_mlrp_scenario(1.0);
  auto res = cl::optimize_entrepreneur(s, cl::ContractFamily{cl::FamilyKind::Debt, 21});
  ASSERT_TRUE(res.feasible);
  EXPECT_NEAR(res.outcome.financier_net, 0.0, 1e-6);
  EXPECT_TRUE(cl::is_manipulation_proof(res.contract, s.tech, s.grid).manipulation_proof);
}

TEST(OptimizeEntrepreneur, FreeCapitalLeavesEverythingToAgent) {
  auto s = convex_mlrp_scenario(1.0);
  s.capital = 0.0;
  s.market_rate = 0.0;
  auto res = cl::optimize_entrepreneur(s, cl::ContractFamily{cl::FamilyKind::Debt, 21});
  ASSERT_TRUE(res.feasible);
  EXPECT_EQ(res.params.at(0), 0.0);
}

TEST(OptimizeEntrepreneur, InfeasibleWhenCapitalTooExpensive) {
  auto s = convex_mlrp_scenario(1.0);
  s.capital = 100.0;
  for (auto kind : {cl::FamilyKind::Debt, cl::FamilyKind::Bonus, cl::FamilyKind::GeneralizedDebt}) {
    auto res = cl::optimize_entrepreneur(s, cl::ContractFamily{kind, 9});
    EXPECT_FALSE(res.feasible);
  }
}

TEST(BruteForce, TwoPointHandEnumeration) {
  cl::Scenario s;
  s.grid = cl::ProfitGrid{{0.0, 2.0}};
  s.effort = cl::EffortGrid{{0.0, 1.0}, {0.0, 0.3}};
  s.dist.rows = {{0.7, 0.3}, {0.3, 0.7}};
  s.tech = cl::ConvexPowerTech{1e9};
  s.outside_utility = 0.2;

  // Hand model: upward shifts are prohibitive, burning from 2 to 0 happens iff
  // y0 > y1 (a tie keeps the report, which the financier prefers).
  double best = -1e300;
  for (int a = 0; a < 11; ++a)
    for (int b = 0; b < 11; ++b) {
      const double y0 = 0.2 * a, y1 = 0.2 * b;
      const bool burn = y0 > y1;
      const double v1 = burn ? y0 : y1;
      const double u0 = 0.7 * y0 + 0.3 * v1, u1 = 0.3 * y0 + 0.7 * v1 - 0.3;
      const int e = (u1 >= u0 - 1e-9) ? 1 : 0;
      const double ue = e ? u1 : u0;
      if (ue < 0.2 - 1e-9) continue;
      const double p1 = s.dist(e, 1);
      const double rev = (1 - p1) * (0.0 - y0) + p1 * (burn ? 0.0 - y0 : 2.0 - y1);
      best = std::max(best, rev);
    }
  auto res = cl::brute_force_oracle(s, 11);
  ASSERT_TRUE(res.feasible);
  EXPECT_NEAR(res.outcome.principal_payoff, best, 1e-12);
}

TEST(BruteForce, SingleLevelAndGuards) {
  auto s = cl::testing::fosd_not_mlrp_scenario();
  auto res = cl::brute_force_oracle(s, 1);
  ASSERT_TRUE(res.feasible);
  EXPECT_EQ(res.contract.y, (std::vector<double>{0, 0, 0}));
  s.outside_utility = 0.5;
  EXPECT_FALSE(cl::brute_force_oracle(s, 1).feasible);
  EXPECT_THROW(cl::brute_force_oracle(s, 65), cl::SizeExceeded);
  auto big = cl::testing::tilted_scenario({0, 1, 2, 3, 4, 5}, {0, 1}, {0, 0.1}, 1.0);
  EXPECT_THROW(cl::brute_force_oracle(big, 3), cl::SizeExceeded);
}

TEST(BruteForce, Deterministic) {
  auto s = cl::testing::tilted_scenario({0, 2, 4}, {0, 1, 2}, {0, 0.3, 0.9}, 2.0);
  s.tech = cl::LinearTech{0.05};
  s.outside_utility = 0.4;
  auto a = cl::brute_force_oracle(s, 41);
  auto b = cl::brute_force_oracle(s, 41);
  EXPECT_EQ(a.contract, b.contract);
  EXPECT_TRUE(cl::is_manipulation_proof(a.contract, s.tech, s.grid).manipulation_proof);
}
