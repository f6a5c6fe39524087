#include <gtest/gtest.h>

#include <cmath>

#include "clearing/ocm.hpp"
#include "clearing/oracle.hpp"
#include "clearing/pcm_gbd.hpp"
#include "clearing/verify.hpp"
#include "support/random_scenario.hpp"

using namespace clearing;
namespace fx = clearing::testing;

namespace {

Scenario single_unit_one_period() {
  return load_scenario(R"({"periods": 1, "demand": [50], "units": [{"id": "G1", "bid": 10, "p_max": 100}]})");
}

void expect_monotone(const GbdTrace& trace) {
  for (std::size_t k = 1; k < trace.size(); ++k) {
    EXPECT_LE(trace[k].ubd, trace[k - 1].ubd) << "row " << k;
    EXPECT_GE(trace[k].lbd, trace[k - 1].lbd) << "row " << k;
  }
}

}  // namespace

TEST(OptimalitySubproblem, PriceRowsNamedPerUnitAndPeriod) {
  const Scenario s = fx::load_fixture("two_unit_toy.json");
  const LinearProgram lp = build_optimality_subproblem(s, {30.0});
  EXPECT_TRUE(lp.find_constraint("mcpcap[G1,1]").has_value());
  EXPECT_TRUE(lp.find_constraint("mcpcap[G2,1]").has_value());
}

TEST(OptimalitySubproblem, HighPricesReduceToOfferCostWithPriceAsBid) {
  fx::TinyScenarioGenerator gen(21);
  for (int k = 0; k < 20; ++k) {
    const Scenario s = gen.next();
    std::vector<double> high;
    for (int t = 0; t < s.periods; ++t) high.push_back(s.max_bid(t) + 1.0);
    Scenario as_bid = s;
    for (auto& g : as_bid.units) g.bid = high;
    const OptimalitySubResult sub = solve_optimality_subproblem(s, high);
    try {
      const ClearingResult ocm = clear_ocm(as_bid);
      ASSERT_TRUE(sub.feasible);
      EXPECT_NEAR(sub.objective, ocm.offer_cost, 1e-6) << "instance " << k;
    } catch (const MarketInfeasible&) {
      EXPECT_FALSE(sub.feasible);
    }
  }
}

TEST(OptimalitySubproblem, SingleUnitScalesWithPrice) {
  const Scenario s = single_unit_one_period();
  const OptimalitySubResult at10 = solve_optimality_subproblem(s, {10.0});
  ASSERT_TRUE(at10.feasible);
  EXPECT_NEAR(at10.objective, 500.0, 1e-6);
  EXPECT_NEAR(at10.schedule.p[0][0], 50.0, 1e-6);
  const OptimalitySubResult at20 = solve_optimality_subproblem(s, {20.0});
  ASSERT_TRUE(at20.feasible);
  EXPECT_NEAR(at20.objective, 1000.0, 1e-6);
}

TEST(OptimalitySubproblem, ThreeUnitAtEleven) {
  const OptimalitySubResult sub = solve_optimality_subproblem(fx::load_fixture("three_unit.json"), {11.0});
  ASSERT_TRUE(sub.feasible);
  EXPECT_NEAR(sub.objective, 3650.0, 1e-6);
  EXPECT_TRUE(sub.schedule.committed(0, 0));
  EXPECT_TRUE(sub.schedule.committed(1, 0));
  EXPECT_FALSE(sub.schedule.committed(2, 0));
}

TEST(OptimalitySubproblem, LowPriceForcesInfeasibility) {
  const Scenario s = fx::load_fixture("two_unit_toy.json");
  EXPECT_FALSE(solve_optimality_subproblem(s, {10.0}).feasible);
  EXPECT_FALSE(solve_optimality_subproblem(s, {5.0}).feasible);
}

TEST(OptimalitySubproblem, PriceRowDualsFinite) {
  const OptimalitySubResult sub = solve_optimality_subproblem(fx::load_fixture("two_unit_toy.json"), {30.0});
  ASSERT_TRUE(sub.feasible);
  ASSERT_EQ(sub.lambda.size(), 2u);
  for (const auto& row : sub.lambda) {
    ASSERT_EQ(row.size(), 1u);
    EXPECT_TRUE(std::isfinite(row[0]));
    EXPECT_GE(row[0], -1e-9);
  }
}

TEST(FeasibilitySubproblem, TwoUnitToySlack) {
  const Scenario s = fx::load_fixture("two_unit_toy.json");
  const FeasibilitySubResult sub = solve_feasibility_subproblem(s, {10.0});
  EXPECT_NEAR(sub.w, 20.0, 1e-6);
  EXPECT_TRUE(sub.schedule.committed(1, 0));
  EXPECT_NEAR(sub.alpha[1][0], 20.0, 1e-6);
  EXPECT_NEAR(sub.lambda[1][0], 1.0, 1e-6);
  const std::vector<FeasibilityCut> cuts = make_feasibility_cuts(sub, {10.0});
  ASSERT_EQ(cuts.size(), 1u);
  EXPECT_NEAR(cuts[0].price_floor(), 30.0, 1e-6);
}

TEST(FeasibilitySubproblem, NoSlackWhenPricesCoverBids) {
  fx::TinyScenarioGenerator gen(23);
  for (int k = 0; k < 10; ++k) {
    const Scenario s = gen.next();
    std::vector<double> high;
    for (int t = 0; t < s.periods; ++t) high.push_back(s.max_bid(t));
    try {
      const FeasibilitySubResult sub = solve_feasibility_subproblem(s, high);
      EXPECT_NEAR(sub.w, 0.0, 1e-9);
      EXPECT_TRUE(make_feasibility_cuts(sub, high).empty());
    } catch (const MarketInfeasible&) {
    }
  }
}

TEST(Cuts, OptimalityCutSubstitution) {
  OptimalitySubResult sub;
  sub.objective = 100.0;
  sub.schedule.p = {{2.0}, {3.0}};
  sub.lambda = {{0.0}, {0.0}};
  const OptimalityCut cut = make_optimality_cut(sub, {20.0});
  EXPECT_DOUBLE_EQ(cut.grad[0], 5.0);
  EXPECT_DOUBLE_EQ(cut.evaluate({20.0}), 100.0);
  EXPECT_DOUBLE_EQ(cut.evaluate({12.0}), 60.0);
}

TEST(Cuts, FeasibilityCutSubstitution) {
  const FeasibilityCut cut{0, 4.0, 2.0, 10.0};
  EXPECT_DOUBLE_EQ(cut.price_floor(), 12.0);
  EXPECT_TRUE(cut.admits({12.0}));
  EXPECT_FALSE(cut.admits({11.0}));
}

TEST(Cuts, SingleUnitOptimalityCutBelowOptimum) {
  const Scenario s = single_unit_one_period();
  const OptimalitySubResult sub = solve_optimality_subproblem(s, {10.0});
  ASSERT_TRUE(sub.feasible);
  EXPECT_LE(make_optimality_cut(sub, {10.0}).evaluate({10.0}), 500.0 + 1e-6);
}

TEST(Master, HandSolvedPools) {
  const Scenario s = load_scenario(R"({"periods": 1, "demand": [5], "units": [{"id": "G1", "bid": 30, "p_max": 100}]})");
  CutPool pool;
  MasterResult m = solve_master(pool, s);
  EXPECT_NEAR(m.mcp[0], 0.0, 1e-9);
  EXPECT_NEAR(m.lbd, 0.0, 1e-9);

  pool.optimality.push_back({100.0, {20.0}, {5.0}});
  m = solve_master(pool, s);
  EXPECT_NEAR(m.mcp[0], 0.0, 1e-9);
  EXPECT_NEAR(m.lbd, 0.0, 1e-9);

  pool.feasibility.push_back({0, 4.0, 2.0, 10.0});
  m = solve_master(pool, s);
  EXPECT_NEAR(m.mcp[0], 12.0, 1e-9);
  EXPECT_NEAR(m.lbd, 60.0, 1e-9);
}

TEST(Master, FloorAboveHighestBidHasNoPrice) {
  const Scenario s = load_scenario(R"({"periods": 1, "demand": [5], "units": [{"id": "G1", "bid": 30, "p_max": 100}]})");
  CutPool pool;
  pool.feasibility.push_back({0, 40.0, 1.0, 0.0});
  EXPECT_THROW(solve_master(pool, s), NoPriceExists);
}

TEST(RunGbd, SingleUnit) {
  const GbdResult g = run_pcm_gbd(single_unit_one_period());
  EXPECT_TRUE(g.converged);
  EXPECT_NEAR(g.result.payment_cost, 500.0, 1e-6);
  EXPECT_DOUBLE_EQ(g.result.mcp[0], 10.0);
  EXPECT_EQ(g.result.stats.mechanism, "pcm");
}

TEST(RunGbd, ThreeUnitBeatsOfferCostSettlement) {
  const Scenario s = fx::load_fixture("three_unit.json");
  const GbdResult g = run_pcm_gbd(s);
  EXPECT_TRUE(g.converged);
  EXPECT_NEAR(g.result.payment_cost, 3650.0, 1e-6);
  EXPECT_TRUE(g.result.schedule.committed(0, 0));
  EXPECT_TRUE(g.result.schedule.committed(1, 0));
  EXPECT_FALSE(g.result.schedule.committed(2, 0));
  EXPECT_LT(g.result.payment_cost, clear_ocm(s).payment_cost);
  expect_monotone(g.trace);
  EXPECT_LE(g.trace.back().ubd - g.trace.back().lbd, GbdOptions{}.epsilon);
}

TEST(RunGbd, SeedFromOcmReachesSameAnswer) {
  GbdOptions o;
  o.seed_from_ocm = true;
  const GbdResult g = run_pcm_gbd(fx::load_fixture("three_unit.json"), o);
  EXPECT_NEAR(g.result.payment_cost, 3650.0, 1e-6);
}

TEST(RunGbd, IterationCapCarriesIncumbentAndTrace) {
  GbdOptions o;
  o.max_iterations = 1;
  try {
    run_pcm_gbd(fx::load_fixture("three_unit.json"), o);
    FAIL() << "expected the iteration cap to trigger";
  } catch (const IterationLimitReached& e) {
    EXPECT_EQ(e.code(), ExitCode::kIterationLimit);
    ASSERT_TRUE(e.incumbent().has_value());
    EXPECT_EQ(e.trace().size(), 1u);
    EXPECT_LE(e.incumbent()->payment_cost, 3750.0 + 1e-6);
  }
}

TEST(RunGbd, IncumbentPropertiesOnTinyMarkets) {
  fx::TinyScenarioGenerator gen(41);
  for (int k = 0; k < 40; ++k) {
    const Scenario s = gen.next();
    GbdResult g;
    try {
      g = run_pcm_gbd(s);
    } catch (const MarketInfeasible&) {
      continue;
    }
    const ClearingResult& r = g.result;
    EXPECT_TRUE(verify_schedule(s, r.schedule, r.mcp).empty()) << "instance " << k;
    const Payments pay = compute_payments(r.schedule, r.mcp, s);
    EXPECT_NEAR(pay.payment_cost, r.payment_cost, 1e-6 * (1 + std::abs(r.payment_cost)));
    EXPECT_NEAR(r.payment_cost, g.trace.back().ubd, 1e-6 * (1 + std::abs(r.payment_cost)));
    // Price sits at the highest committed bid wherever units produce.
    const std::vector<double> floor = settle_mcp(r.schedule, s);
    for (int t = 0; t < s.periods; ++t) {
      if (r.schedule.generation(t) > 1e-9) {
        EXPECT_DOUBLE_EQ(r.mcp[static_cast<std::size_t>(t)], floor[static_cast<std::size_t>(t)]);
      }
    }
    expect_monotone(g.trace);
    EXPECT_LE(r.payment_cost, clear_ocm(s).payment_cost + 1e-6) << "instance " << k;
  }
}
