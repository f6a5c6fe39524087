#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "clearing/scenario.hpp"
#include "support/random_scenario.hpp"

using namespace clearing;

namespace {

const char* kMinimal = R"({"periods": 1, "demand": [50], "units": [{"id": "G1", "bid": 10, "p_max": 100}], "fleets": []})";

const char* kWithFleet = R"({
  "periods": 2, "demand": [50, 60],
  "units": [{"id": "G1", "bid": [10, 12], "p_max": 100,
             "startup_stairs": [{"max_offline_periods": 2, "cost": 50}, {"max_offline_periods": null, "cost": 90}]}],
  "fleets": [{"id": "V1", "e_min": 0, "e_max": 40, "e_initial": 20, "e_target": 20,
              "ch_min": 0, "ch_max": 100, "dsch_min": 0, "dsch_max": 100, "efficiency": 0.9,
              "availability": [0.1, 1.0]}]
})";

std::string error_of(const std::string& doc) {
  try {
    load_scenario(doc);
  } catch (const ClearingError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(LoadScenario, MinimalDocument) {
  const Scenario s = load_scenario(kMinimal);
  EXPECT_EQ(s.periods, 1);
  ASSERT_EQ(s.units.size(), 1u);
  EXPECT_TRUE(s.fleets.empty());
  EXPECT_DOUBLE_EQ(s.units[0].bid[0], 10.0);
  EXPECT_DOUBLE_EQ(s.units[0].p_max[0], 100.0);
}

TEST(LoadScenario, PminAbovePmaxNamesUnitAndPeriod) {
  const std::string msg =
      error_of(R"({"periods": 1, "demand": [50], "units": [{"id": "G1", "bid": 10, "p_min": 200, "p_max": 100}]})");
  EXPECT_NE(msg.find("G1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("period 1"), std::string::npos) << msg;
}

TEST(LoadScenario, DemandLengthMismatch) {
  try {
    load_scenario(R"({"periods": 2, "demand": [50], "units": [{"id": "G1", "bid": 10, "p_max": 100}]})");
    FAIL() << "accepted short demand";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.code(), ExitCode::kValidation);
    EXPECT_NE(std::string(e.what()).find("demand"), std::string::npos);
  }
}

TEST(LoadScenario, CapacityScreen) {
  EXPECT_THROW(load_scenario(R"({"periods": 1, "demand": [150], "units": [{"id": "G1", "bid": 10, "p_max": 100}]})"),
               CapacityError);
}

TEST(LoadScenario, FleetDischargeCountsTowardCapacity) {
  const Scenario s = load_scenario(kWithFleet);
  EXPECT_EQ(s.fleets.size(), 1u);
}

TEST(LoadScenario, MalformedJsonIsParseError) {
  EXPECT_THROW(load_scenario("{\"periods\": 1,"), ParseError);
}

TEST(LoadScenario, UnknownFieldRejected) {
  const std::string msg =
      error_of(R"({"periods": 1, "demand": [50], "units": [{"id": "G1", "bid": 10, "p_max": 100, "pmax": 3}]})");
  EXPECT_NE(msg.find("pmax"), std::string::npos) << msg;
}

TEST(LoadScenario, DefaultHistoryPricesColdestStair) {
  const Scenario s = load_scenario(kWithFleet);
  const GeneratorOffer& g = s.units[0];
  EXPECT_FALSE(g.initial_committed);
  EXPECT_EQ(g.initial_offline_periods, g.coldest_offline_periods());
  EXPECT_EQ(g.initial_offline_periods, 3);
}

TEST(LoadScenario, InvalidDocumentsAreRejected) {
  const std::string base = kWithFleet;
  auto with = [&](const std::string& from, const std::string& to) {
    std::string doc = base;
    const auto at = doc.find(from);
    EXPECT_NE(at, std::string::npos) << from;
    return doc.replace(at, from.size(), to);
  };
  const std::pair<std::string, std::string> bad[] = {
      {"\"efficiency\": 0.9", "\"efficiency\": 0"},
      {"\"efficiency\": 0.9", "\"efficiency\": 1.5"},
      {"\"e_initial\": 20", "\"e_initial\": 50"},
      {"\"e_target\": 20", "\"e_target\": -1"},
      {"\"ch_min\": 0", "\"ch_min\": 200"},
      {"\"availability\": [0.1, 1.0]", "\"availability\": [0.1, 1.5]"},
      {"\"availability\": [0.1, 1.0]", "\"availability\": [0.1]"},
      {"\"cost\": 90", "\"cost\": 10"},
      {"\"max_offline_periods\": 2", "\"max_offline_periods\": 0"},
      {"\"bid\": [10, 12]", "\"bid\": [10, -12]"},
      {"\"id\": \"V1\"", "\"id\": \"G1\""},
      {"\"periods\": 2", "\"periods\": 0"},
      {"\"p_max\": 100,", "\"p_max\": 100, \"initial_committed\": true, \"initial_offline_periods\": 2,"},
      {"\"p_max\": 100,", "\"p_max\": 100, \"initial_output\": 5,"},
  };
  for (const auto& [from, to] : bad) {
    EXPECT_THROW(load_scenario(with(from, to)), ClearingError) << to;
  }
}

TEST(FleetLimits, AvailabilityScalesPowerLimits) {
  const Scenario s = load_scenario(kWithFleet);
  const PevFleet& f = s.fleets[0];
  const FleetLimits tenth = effective_fleet_limits(f, 0);
  EXPECT_NEAR(tenth.ch_max, 10.0, 1e-12);
  EXPECT_NEAR(tenth.dsch_max, 10.0, 1e-12);
  const FleetLimits full = effective_fleet_limits(f, 1);
  EXPECT_DOUBLE_EQ(full.ch_max, f.ch_max);
  EXPECT_DOUBLE_EQ(full.dsch_max, f.dsch_max);

  PevFleet absent = f;
  absent.ch_min = 5;
  absent.dsch_min = 5;
  absent.availability = {0.0, 0.0};
  const FleetLimits none = effective_fleet_limits(absent, 0);
  EXPECT_EQ(none.ch_max, 0.0);
  EXPECT_EQ(none.ch_min, 0.0);
  EXPECT_EQ(none.dsch_max, 0.0);
  EXPECT_EQ(none.dsch_min, 0.0);
}

TEST(LoadScenario, RoundTripReproducesScenario) {
  clearing::testing::TinyScenarioGenerator gen(7);
  for (int k = 0; k < 50; ++k) {
    const Scenario s = gen.next();
    const std::string once = serialize_scenario(s);
    const Scenario back = load_scenario(once);
    EXPECT_EQ(serialize_scenario(back), once);
  }
  const Scenario fx = clearing::testing::load_fixture("ten_unit_v2g.json");
  EXPECT_EQ(serialize_scenario(load_scenario(serialize_scenario(fx))), serialize_scenario(fx));
}

TEST(LoadScenario, TenUnitFixture) {
  const Scenario s = clearing::testing::load_fixture("ten_unit_v2g.json");
  EXPECT_EQ(s.periods, 24);
  EXPECT_EQ(s.units.size(), 10u);
}

TEST(DemandOverride, ReplacesDemand) {
  Scenario s = load_scenario(kWithFleet);
  std::istringstream csv("period,demand_mw\n2,70\n1,40\n");
  apply_demand_csv(s, csv);
  EXPECT_DOUBLE_EQ(s.demand[0], 40.0);
  EXPECT_DOUBLE_EQ(s.demand[1], 70.0);

  std::istringstream missing("period,demand_mw\n1,40\n");
  EXPECT_THROW(apply_demand_csv(s, missing), ClearingError);
  std::istringstream too_high("period,demand_mw\n1,40\n2,5000\n");
  EXPECT_THROW(apply_demand_csv(s, too_high), CapacityError);
}
