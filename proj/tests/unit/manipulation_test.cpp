#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "contractlab/manipulation.hpp"
#include "test_scenarios.hpp"

namespace cl = contractlab;

namespace {

const cl::ProfitGrid kThree{{1.0, 2.5, 4.0}};

void expect_vec_near(const std::vector<double>& a, const std::vector<double>& b, double tol = 1e-12) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], tol) << "index " << j;
}

// Independent enumeration used as an oracle for the attained maximum.
double brute_max(const cl::Contract& c, const cl::ManipulationTech& t, const cl::ProfitGrid& g, std::size_t j) {
  double best = -1e300;
  for (std::size_t k = 0; k < g.size(); ++k) best = std::max(best, c[k] - cl::eval_cost(t, g[k] - g[j]));
  return best;
}

}  // namespace

TEST(SolveManipulation, BurnsDownToLowState) {
  for (double r : {0.0, 0.05, 1.0}) {
    auto sol = cl::solve_manipulation(cl::Contract{{0.7, 0.2, 1.5}}, cl::LinearTech{r}, kThree);
    expect_vec_near(sol.plan.z, {0.0, -1.5, 0.0});
    expect_vec_near(sol.value.v, {0.7, 0.7, 1.5});
  }
}

TEST(SolveManipulation, InflatesMiddleState) {
  auto sol = cl::solve_manipulation(cl::Contract{{0.5, 0.2, 3.5}}, cl::LinearTech{0.0}, kThree);
  expect_vec_near(sol.plan.z, {0.0, 1.5, 0.0});
  expect_vec_near(sol.value.v, {0.5, 2.0, 3.5});
}

TEST(SolveManipulation, SlopeBoundedContractIsLeftAlone) {
  auto sol = cl::solve_manipulation(cl::Contract{{0.0, 1.5, 2.5}}, cl::LinearTech{0.0}, kThree);
  EXPECT_TRUE(sol.is_zero_plan());
  expect_vec_near(sol.value.v, {0.0, 1.5, 2.5});
}

TEST(SolveManipulation, TiePrefersFinancierThenSmallShift) {
  // At x = 1 staying and jumping to 4 both give 0.5 and leave the financier 0.5.
  auto sol = cl::solve_manipulation(cl::Contract{{0.5, 0.2, 3.5}}, cl::LinearTech{0.0}, kThree);
  EXPECT_EQ(sol.plan.target[0], 0u);
  // Flat contract: every burn ties for the agent; the financier prefers the
  // report with the largest x - y, i.e. no burning.
  auto flat = cl::solve_manipulation(cl::Contract{{1.0, 1.0, 1.0}}, cl::LinearTech{0.0}, kThree);
  EXPECT_TRUE(flat.is_zero_plan());
  // A burn that ties for the agent always leaves the financier less.
  auto burn = cl::solve_manipulation(cl::Contract{{0.0, 2.0, 2.0}}, cl::LinearTech{0.0}, cl::ProfitGrid{{0.0, 1.0, 2.5}});
  EXPECT_EQ(burn.plan.target[1], 1u);
  EXPECT_EQ(burn.plan.target[2], 2u);
}

TEST(SolveManipulation, TieRuleIsOrderFree) {
  // From x = 1 burning to 0 and inflating to 2 both give the agent 1 and the
  // financier -1 at equal distance, so the smaller z (the burn) is chosen.
  cl::ProfitGrid g{{0.0, 1.0, 2.0}};
  cl::Contract c{{1.0, 0.0, 3.0}};
  cl::TabulatedTech tech{{{1.0, 2.0}, {2.0, 4.0}}};
  auto s1 = cl::solve_manipulation(c, tech, g);
  EXPECT_EQ(s1.plan.target[1], 0u);
  EXPECT_DOUBLE_EQ(s1.plan.z[1], -1.0);
  // Perturbing within tolerance must not flip the choice.
  cl::Contract c2{{1.0, 0.0, 3.0 + 1e-11}};
  EXPECT_EQ(cl::solve_manipulation(c2, tech, g).plan.target[1], 0u);
  cl::Contract c3{{1.0 + 1e-11, 0.0, 3.0}};
  EXPECT_EQ(cl::solve_manipulation(c3, tech, g).plan.target[1], 0u);
}

TEST(MonotoneEnvelope, Examples) {
  EXPECT_EQ(cl::monotone_envelope(cl::Contract{{0.7, 0.2, 1.5}}).y, (std::vector<double>{0.7, 0.7, 1.5}));
  EXPECT_EQ(cl::monotone_envelope(cl::Contract{{0.0, 1.0, 1.0}}).y, (std::vector<double>{0.0, 1.0, 1.0}));
  EXPECT_EQ(cl::monotone_envelope(cl::Contract{{3.0, 2.0, 1.0}}).y, (std::vector<double>{3.0, 3.0, 3.0}));
}

TEST(MonotoneEnvelope, IdempotentAndDominating) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 500; ++t) {
    auto c = cl::testing::random_contract(rng, 6, 5.0);
    auto e = cl::monotone_envelope(c);
    EXPECT_EQ(cl::monotone_envelope(e), e);
    for (std::size_t j = 0; j < c.size(); ++j) {
      EXPECT_GE(e[j], c[j]);
      if (j > 0) {
        EXPECT_GE(e[j], e[j - 1]);
      }
    }
  }
}

TEST(ManipulationProof, DebtUnderConvexPower) {
  cl::ProfitGrid g;
  for (int j = 0; j <= 20; ++j) g.points.push_back(0.25 * j);
  for (double gamma : {0.1, 1.0, 50.0})
    for (double d : {0.0, 1.3, 2.5, 5.0}) {
      cl::Contract c;
      for (double x : g.points) c.y.push_back(std::max(0.0, x - d));
      EXPECT_TRUE(cl::is_manipulation_proof(c, cl::ConvexPowerTech{gamma}, g).manipulation_proof);
    }
}

TEST(ManipulationProof, BonusHasWitnessInMiddleInterval) {
  cl::ProfitGrid g;
  for (int j = 0; j <= 40; ++j) g.points.push_back(0.1 * j);
  const double dp = 2.0, beta = 1.0, b = dp - beta;
  cl::ConvexPowerTech tech{1.0};
  const double reach = cl::inverse_cost(tech, b);
  ASSERT_GT(reach, 0.1);
  cl::Contract c;
  for (double x : g.points) c.y.push_back(x >= dp - 1e-12 ? x - beta : 0.0);
  auto rep = cl::is_manipulation_proof(c, tech, g);
  ASSERT_FALSE(rep.manipulation_proof);
  ASSERT_TRUE(rep.witness);
  EXPECT_GE(rep.witness->x, dp - reach - 1e-12);
  EXPECT_LT(rep.witness->x, dp);
  EXPECT_GT(rep.witness->gain, 0.0);
  EXPECT_GT(rep.witness->z, 0.0);
}

TEST(ManipulationProof, ConstantContract) {
  EXPECT_TRUE(cl::is_manipulation_proof(cl::Contract{{2.0, 2.0, 2.0}}, cl::LinearTech{0.0}, kThree).manipulation_proof);
}

TEST(SlopeDiagnostic, Examples) {
  EXPECT_NEAR(cl::slope_diagnostic(cl::ValueFunction{{0.5, 2.0, 3.5}}, kThree), 1.0, 1e-12);
  EXPECT_EQ(cl::slope_diagnostic(cl::ValueFunction{{1.0, 1.0, 1.0}}, kThree), 0.0);
  EXPECT_THROW(cl::slope_diagnostic(cl::ValueFunction{{1.0}}, cl::ProfitGrid{{0.0}}), std::invalid_argument);
}

TEST(ValueFunctionProperties, MonotoneDominatingAndAttainingMaximum) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> par(0.0, 3.0);
  for (int t = 0; t < 10000; ++t) {
    const auto g = cl::testing::random_grid(rng, 2 + t % 6);
    const auto c = cl::testing::random_contract(rng, g.size(), 2.0 * g.max());
    cl::ManipulationTech tech;
    switch (t % 4) {
      case 0: tech = cl::LinearTech{par(rng)}; break;
      case 1: tech = cl::ConvexPowerTech{par(rng)}; break;
      case 2: tech = cl::QuadraticTech{false}; break;
      default: {
        const double c1 = 0.5 + par(rng);
        tech = cl::TabulatedTech{{{0.5, c1}, {1.0, c1 + par(rng)}}};
        break;
      }
    }
    const auto sol = cl::solve_manipulation(c, tech, g);
    for (std::size_t j = 0; j < g.size(); ++j) {
      ASSERT_GE(sol.value[j], c[j] - 1e-12);
      ASSERT_NEAR(sol.value[j], brute_max(c, tech, g, j), 1e-12);
      ASSERT_NEAR(g[j] + sol.plan.z[j], g[sol.plan.target[j]], 1e-12);
      if (j) {
        ASSERT_GE(sol.value[j], sol.value[j - 1] - 1e-12) << tech_name(tech) << " t=" << t;
      }
    }
  }
}

TEST(ValueFunctionProperties, EnvelopeLeavesValueUnchanged) {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 2000; ++t) {
    const auto g = cl::testing::random_grid(rng, 5);
    const auto c = cl::testing::random_contract(rng, 5, 6.0);
    cl::ManipulationTech tech = (t % 2) ? cl::ManipulationTech{cl::LinearTech{0.1}} : cl::ConvexPowerTech{0.7};
    const auto a = cl::solve_manipulation(c, tech, g);
    const auto b = cl::solve_manipulation(cl::monotone_envelope(c), tech, g);
    expect_vec_near(a.value.v, b.value.v, 1e-9);
  }
}

TEST(ValueFunctionProperties, LinearValueAsContractIsManipulationProof) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 2000; ++t) {
    const auto g = cl::testing::random_grid(rng, 5);
    const auto c = cl::testing::random_contract(rng, 5, 6.0);
    const cl::LinearTech tech{0.05 * (t % 5)};
    const auto v = cl::solve_manipulation(c, tech, g).value;
    EXPECT_TRUE(cl::solve_manipulation(cl::Contract{v.v}, tech, g).is_zero_plan());
    EXPECT_LE(cl::slope_diagnostic(v, g), 1.0 + tech.rate + 1e-9);
  }
}

TEST(ManipulationCsv, HeaderAndRows) {
  cl::Contract c{{0.7, 0.2, 1.5}};
  auto sol = cl::solve_manipulation(c, cl::LinearTech{0.0}, kThree);
  std::ostringstream os;
  cl::write_manipulation_csv(os, kThree, c, sol);
  EXPECT_EQ(os.str(), "x,y,z,v\n1,0.7,0,0.7\n2.5,0.2,-1.5,0.7\n4,1.5,0,1.5\n");
}
