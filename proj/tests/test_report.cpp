#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "clearing/report.hpp"
#include "support/random_scenario.hpp"

using namespace clearing;
namespace fx = clearing::testing;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Num, FixedSixDecimals) {
  EXPECT_EQ(num(1.0 / 3.0), "0.333333");
  EXPECT_EQ(num(3650.0), "3650.000000");
  EXPECT_EQ(num(-0.0), "0.000000");
  EXPECT_EQ(num(-1e-9), "0.000000");
  EXPECT_EQ(num(-2.5), "-2.500000");
  EXPECT_EQ(num(INFINITY), "inf");
}

TEST(HourlyCsv, SingleUnitPriceConstant) {
  const Scenario s = fx::load_fixture("single_unit.json");
  const ClearingResult r = clear_ocm(s);
  const auto rows = parse_csv(hourly_csv(r, s));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "demand", "net_demand", "mcp", "payment_t", "fleet_net_mw"}));
  EXPECT_EQ(rows[1][3], "10.000000");
  EXPECT_EQ(rows[2][3], "10.000000");
}

TEST(HourlyCsv, PaymentColumnSumsToPaymentCost) {
  const Scenario s = fx::load_fixture("peaky_v2g.json");
  for (const ClearingResult& r : {clear_ocm(s), run_pcm_gbd(s).result}) {
    const auto rows = parse_csv(hourly_csv(r, s));
    double total = 0.0;
    for (std::size_t k = 1; k < rows.size(); ++k) {
      total += std::stod(rows[k][4]);
      // net demand is what the units serve
      EXPECT_NEAR(std::stod(rows[k][2]), r.schedule.generation(static_cast<int>(k) - 1), 1e-5);
    }
    EXPECT_NEAR(total, r.payment_cost, 1e-4);
  }
}

TEST(ResultJson, ThreeUnitPayments) {
  const Scenario s = fx::load_fixture("three_unit.json");
  const std::string pcm = result_json(run_pcm_gbd(s).result, s);
  const std::string ocm = result_json(clear_ocm(s), s);
  EXPECT_NE(pcm.find("\"payment_cost\": 3650.000000"), std::string::npos) << pcm;
  EXPECT_NE(ocm.find("\"payment_cost\": 3750.000000"), std::string::npos) << ocm;
  EXPECT_NE(pcm.find("\"mechanism\": \"pcm\""), std::string::npos);
  EXPECT_NE(pcm.find("\"wall_ms\": 0.000000"), std::string::npos);
  // Parses as JSON.
  const auto doc = nlohmann::json::parse(pcm);
  EXPECT_EQ(doc["units"].size(), 3u);
  EXPECT_DOUBLE_EQ(doc["unit_payments"]["G2"].get<double>(), 2550.0);
}

TEST(ResultJson, TimingOnlyWhenAsked) {
  const Scenario s = fx::load_fixture("single_unit.json");
  ClearingResult r = clear_ocm(s);
  r.stats.wall_ms = 12.5;
  EXPECT_NE(result_json(r, s).find("\"wall_ms\": 0.000000"), std::string::npos);
  EXPECT_NE(result_json(r, s, ReportOptions{true}).find("\"wall_ms\": 12.500000"), std::string::npos);
}

TEST(TraceCsv, LowerBoundNeverDecreases) {
  const GbdResult g = run_pcm_gbd(fx::load_fixture("peaky_v2g.json"));
  const auto rows = parse_csv(trace_csv(g.trace));
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"iteration", "cut_type", "ubd", "lbd", "wall_ms"}));
  for (std::size_t k = 2; k < rows.size(); ++k) EXPECT_GE(std::stod(rows[k][3]), std::stod(rows[k - 1][3]));
  for (std::size_t k = 1; k < rows.size(); ++k) {
    EXPECT_TRUE(rows[k][1] == "optimality" || rows[k][1] == "feasibility");
    EXPECT_EQ(rows[k][4], "0.000000");
  }
}

TEST(Compare, FleetFreeScenarioGivesIdenticalColumns) {
  const ComparisonReport rep = compare_mechanisms(fx::load_fixture("three_unit.json"));
  EXPECT_EQ(rep.runs[0].payment_cost, rep.runs[1].payment_cost);
  EXPECT_EQ(rep.runs[0].average_mcp, rep.runs[1].average_mcp);
  EXPECT_EQ(rep.runs[2].payment_cost, rep.runs[3].payment_cost);
  EXPECT_NEAR(rep.runs[0].payment_cost, 3750.0, 1e-6);
  EXPECT_NEAR(rep.runs[2].payment_cost, 3650.0, 1e-6);
  EXPECT_NEAR(rep.without_v2g.absolute, 100.0, 1e-6);
  EXPECT_NEAR(rep.without_v2g.percent, 100.0 * 100.0 / 3750.0, 1e-9);
}

TEST(Compare, PcmNeverPaysMore) {
  const ComparisonReport rep = compare_mechanisms(fx::load_fixture("peaky_v2g.json"));
  EXPECT_LE(rep.runs[2].payment_cost, rep.runs[0].payment_cost + 1e-6);
  EXPECT_LE(rep.runs[3].payment_cost, rep.runs[1].payment_cost + 1e-6);
  double sum = 0.0;
  for (const auto& row : rep.unit_payments) sum += row[3];
  EXPECT_NEAR(sum, rep.runs[3].payment_cost, 1e-6);
}

TEST(Compare, OutputsStable) {
  const Scenario s = fx::load_fixture("three_unit.json");
  const ComparisonReport a = compare_mechanisms(s);
  const ComparisonReport b = compare_mechanisms(s);
  EXPECT_EQ(comparison_json(a), comparison_json(b));
  EXPECT_EQ(comparison_csv(a), comparison_csv(b));
  const auto rows = parse_csv(comparison_csv(a));
  EXPECT_EQ(rows[0], (std::vector<std::string>{"section", "item", "OCM", "OCM-V2G", "PCM", "PCM-V2G"}));
  EXPECT_EQ(rows.back()[0], "savings");
  EXPECT_NO_THROW(nlohmann::json::parse(comparison_json(a)));
}
