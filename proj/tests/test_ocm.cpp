#include <gtest/gtest.h>

#include <cmath>

#include "clearing/model.hpp"
#include "clearing/ocm.hpp"
#include "clearing/oracle.hpp"
#include "clearing/verify.hpp"
#include "support/random_scenario.hpp"

using namespace clearing;
namespace fx = clearing::testing;

namespace {

double recompute_offer(const Schedule& sch, const Scenario& s) {
  double v = 0.0;
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    for (int t = 0; t < s.periods; ++t) {
      const auto k = static_cast<std::size_t>(t);
      v += s.units[i].bid[k] * sch.p[i][k] + sch.sc_u[i][k] + sch.sc_d[i][k] + s.units[i].no_load_cost * sch.u[i][k];
    }
  }
  return v;
}

}  // namespace

TEST(BuildOcm, SmallestModel) {
  const Scenario s = load_scenario(R"({"periods": 1, "demand": [50], "units": [{"id": "G1", "bid": 10, "p_max": 100}]})");
  const LinearProgram lp = build_ocm(s);
  EXPECT_EQ(lp.num_variables(), 4);
  EXPECT_TRUE(lp.find_constraint("balance[1]").has_value());
  EXPECT_TRUE(lp.find_constraint("shutdown[G1,1]").has_value());
  EXPECT_TRUE(lp.find_constraint("pmax[G1,1]").has_value());
}

TEST(BuildOcm, FleetRowsPresent) {
  const Scenario s = load_scenario(R"({
    "periods": 2, "demand": [50, 60],
    "units": [{"id": "G1", "bid": 10, "p_max": 100}],
    "fleets": [{"id": "V1", "e_min": 0, "e_max": 40, "e_initial": 20, "e_target": 20, "ch_min": 0, "ch_max": 10,
                "dsch_min": 0, "dsch_max": 10, "efficiency": 0.9, "availability": [1, 1]}]})");
  const LinearProgram lp = build_ocm(s);
  EXPECT_TRUE(lp.find_constraint("mode[V1,1]").has_value());
  EXPECT_TRUE(lp.find_constraint("mode[V1,2]").has_value());
  EXPECT_TRUE(lp.find_constraint("terminal[V1]").has_value());
}

TEST(BuildOcm, TenUnitBinaryCount) {
  const Scenario s = fx::load_fixture("ten_unit_v2g.json");
  int binaries = 0;
  const LinearProgram lp = build_ocm(s);
  for (int j = 0; j < lp.num_variables(); ++j) binaries += lp.variable(j).integer ? 1 : 0;
  EXPECT_EQ(binaries, 240 + 48 * static_cast<int>(s.fleets.size()));
  const LinearProgram bare = build_ocm(without_fleets(s));
  binaries = 0;
  for (int j = 0; j < bare.num_variables(); ++j) binaries += bare.variable(j).integer ? 1 : 0;
  EXPECT_EQ(binaries, 240);
}

TEST(ClearOcm, SingleUnit) {
  const Scenario s = fx::load_fixture("single_unit.json");
  const ClearingResult r = clear_ocm(s);
  EXPECT_NEAR(r.offer_cost, 1100.0, 1e-6);
  EXPECT_NEAR(r.payment_cost, 1100.0, 1e-6);
  EXPECT_NEAR(r.schedule.p[0][0], 50.0, 1e-6);
  EXPECT_NEAR(r.schedule.p[0][1], 60.0, 1e-6);
  EXPECT_DOUBLE_EQ(r.mcp[0], 10.0);
  EXPECT_DOUBLE_EQ(r.mcp[1], 10.0);
  EXPECT_EQ(r.stats.mechanism, "ocm");
}

TEST(ClearOcm, ThreeUnitCommitsCheapOfferSet) {
  const Scenario s = fx::load_fixture("three_unit.json");
  const ClearingResult r = clear_ocm(s);
  EXPECT_NEAR(r.offer_cost, 2250.0, 1e-6);
  EXPECT_TRUE(r.schedule.committed(0, 0));
  EXPECT_FALSE(r.schedule.committed(1, 0));
  EXPECT_TRUE(r.schedule.committed(2, 0));
  EXPECT_DOUBLE_EQ(r.mcp[0], 25.0);
  EXPECT_NEAR(r.payment_cost, 3750.0, 1e-6);
  EXPECT_NEAR(r.unit_payments[0], 2500.0, 1e-6);
  EXPECT_NEAR(r.unit_payments[1], 0.0, 1e-6);
  EXPECT_NEAR(r.unit_payments[2], 1250.0, 1e-6);
}

TEST(ClearOcm, InfeasibleMarket) {
  // Capacity passes the screen but a ramp limit makes period 2 unreachable.
  const Scenario s = load_scenario(R"({"periods": 2, "demand": [10, 100],
    "units": [{"id": "G1", "bid": 10, "p_max": 100, "ramp_up": 20, "ramp_down": 100}]})");
  EXPECT_THROW(clear_ocm(s), MarketInfeasible);
}

TEST(SettleMcp, HighestCommittedBid) {
  const Scenario s = load_scenario(R"({"periods": 1, "demand": [10],
    "units": [{"id": "A", "bid": 20, "p_max": 100}, {"id": "B", "bid": 30, "p_max": 100}]})");
  Schedule sch = Schedule::empty_for(s);
  sch.u[0][0] = 1;
  sch.u[1][0] = 1;
  EXPECT_DOUBLE_EQ(settle_mcp(sch, s)[0], 30.0);
  sch.u[1][0] = 0;
  EXPECT_DOUBLE_EQ(settle_mcp(sch, s)[0], 20.0);
  sch.u[0][0] = 0;
  EXPECT_DOUBLE_EQ(settle_mcp(sch, s)[0], 0.0);
}

TEST(ComputePayments, ZeroScheduleZeroPayment) {
  const Scenario s = fx::load_fixture("three_unit.json");
  const Payments p = compute_payments(Schedule::empty_for(s), {25.0}, s);
  EXPECT_EQ(p.payment_cost, 0.0);
  EXPECT_EQ(p.offer_cost, 0.0);
  for (double v : p.unit_payments) EXPECT_EQ(v, 0.0);
}

TEST(ClearOcm, MatchesOracleOnTinyMarkets) {
  fx::TinyScenarioGenerator gen(31);
  for (int k = 0; k < 60; ++k) {
    const Scenario s = gen.next();
    ClearingResult oracle;
    try {
      oracle = oracle_ocm(s);
    } catch (const MarketInfeasible&) {
      EXPECT_THROW(clear_ocm(s), MarketInfeasible) << "instance " << k;
      continue;
    }
    const ClearingResult r = clear_ocm(s);
    EXPECT_NEAR(r.offer_cost, oracle.offer_cost, 1e-6) << "instance " << k;
    EXPECT_NEAR(recompute_offer(r.schedule, s), r.offer_cost, 1e-6 * (1 + std::abs(r.offer_cost)));
    EXPECT_TRUE(verify_schedule(s, r.schedule, r.mcp).empty()) << "instance " << k;
    const Payments pay = compute_payments(r.schedule, r.mcp, s);
    EXPECT_NEAR(pay.payment_cost, r.payment_cost, 1e-6 * (1 + std::abs(r.payment_cost)));
  }
}

TEST(ClearOcm, StartupPricedAtStair) {
  // Offline 3 periods before t=1 with stairs (1: 10), (2: 20), (rest: 40).
  const Scenario s = load_scenario(R"({"periods": 1, "demand": [50],
    "units": [{"id": "G1", "bid": 10, "p_max": 100, "initial_offline_periods": 3,
               "startup_stairs": [{"max_offline_periods": 1, "cost": 10}, {"max_offline_periods": 2, "cost": 20},
                                  {"max_offline_periods": null, "cost": 40}]}]})");
  const ClearingResult r = clear_ocm(s);
  EXPECT_NEAR(r.schedule.sc_u[0][0], 40.0, 1e-6);
  EXPECT_NEAR(r.offer_cost, 540.0, 1e-6);
}
