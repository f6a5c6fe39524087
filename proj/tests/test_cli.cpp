#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <fmt/format.h>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::path(CLEARING_TEST_WORKDIR);

std::string data(const char* name) { return std::string(CLEARING_DATA_DIR) + "/" + name; }

// Runs the CLI with stdout and stderr captured into files under the work dir.
int cli(const std::string& args, const std::string& env = "") {
  fs::create_directories(kWork);
  const std::string cmd = fmt::format("{} \"{}\" {} > \"{}\" 2> \"{}\"", env, CLEARING_CLI_PATH, args,
                                      (kWork / "stdout.txt").string(), (kWork / "stderr.txt").string());
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string out_dir(const char* name) {
  const fs::path p = kWork / name;
  fs::remove_all(p);
  return p.string();
}

}  // namespace

TEST(Cli, ValidateGoodFile) {
  EXPECT_EQ(cli("validate \"" + data("three_unit.json") + "\""), 0);
  EXPECT_EQ(slurp(kWork / "stdout.txt"), "ok: 3 units, 0 fleets, 1 periods\n");
}

TEST(Cli, ValidateExitCodes) {
  EXPECT_EQ(cli("validate \"" + data("bad_demand_length.json") + "\""), 2);
  EXPECT_NE(slurp(kWork / "stderr.txt").find("demand"), std::string::npos);
  EXPECT_EQ(cli("validate \"" + data("short_capacity.json") + "\""), 3);
  EXPECT_EQ(cli("validate \"" + data("no_such_file.json") + "\""), 5);
  const fs::path broken = kWork / "broken.json";
  std::ofstream(broken) << "{\"periods\": 1,";
  EXPECT_EQ(cli("validate \"" + broken.string() + "\""), 4);
  EXPECT_EQ(cli("frobnicate"), 1);
  EXPECT_EQ(cli("clear \"" + data("three_unit.json") + "\" --mechanism lmp --v2g on --out x"), 1);
}

TEST(Cli, ClearWritesResultFiles) {
  const std::string ocm = out_dir("ocm");
  ASSERT_EQ(cli("clear \"" + data("single_unit.json") + "\" --mechanism ocm --v2g on --out \"" + ocm + "\""), 0);
  EXPECT_EQ(slurp(fs::path(ocm) / "hourly.csv"),
            "t,demand,net_demand,mcp,payment_t,fleet_net_mw\n"
            "1,50.000000,50.000000,10.000000,500.000000,0.000000\n"
            "2,60.000000,60.000000,10.000000,600.000000,0.000000\n");
  EXPECT_FALSE(fs::exists(fs::path(ocm) / "trace.csv"));

  const std::string pcm = out_dir("pcm");
  ASSERT_EQ(cli("clear \"" + data("three_unit.json") + "\" --mechanism pcm --v2g off --out \"" + pcm + "\""), 0);
  EXPECT_NE(slurp(fs::path(pcm) / "result.json").find("\"payment_cost\": 3650.000000"), std::string::npos);
  EXPECT_TRUE(fs::exists(fs::path(pcm) / "trace.csv"));

  const std::string ocm3 = out_dir("ocm3");
  ASSERT_EQ(cli("clear \"" + data("three_unit.json") + "\" --mechanism ocm --v2g off --out \"" + ocm3 + "\""), 0);
  EXPECT_NE(slurp(fs::path(ocm3) / "result.json").find("\"payment_cost\": 3750.000000"), std::string::npos);
}

TEST(Cli, ClearIsByteIdentical) {
  const std::string a = out_dir("rep_a");
  const std::string b = out_dir("rep_b");
  const std::string base = "clear \"" + data("peaky_v2g.json") + "\" --mechanism pcm --v2g on --out ";
  ASSERT_EQ(cli(base + "\"" + a + "\""), 0);
  ASSERT_EQ(cli(base + "\"" + b + "\""), 0);
  for (const char* f : {"result.json", "hourly.csv", "trace.csv"}) {
    EXPECT_EQ(slurp(fs::path(a) / f), slurp(fs::path(b) / f)) << f;
  }
}

TEST(Cli, V2gOffDropsFleets) {
  const std::string off = out_dir("off");
  ASSERT_EQ(cli("clear \"" + data("peaky_v2g.json") + "\" --mechanism ocm --v2g off --out \"" + off + "\""), 0);
  EXPECT_NE(slurp(fs::path(off) / "result.json").find("\"fleets\": []"), std::string::npos);
}

TEST(Cli, DemandOverride) {
  const fs::path csv = kWork / "demand.csv";
  fs::create_directories(kWork);
  std::ofstream(csv) << "period,demand_mw\n1,20\n2,30\n";
  const std::string out = out_dir("override");
  ASSERT_EQ(cli("clear \"" + data("single_unit.json") + "\" --mechanism ocm --v2g on --out \"" + out +
                "\" --demand \"" + csv.string() + "\""),
            0);
  EXPECT_NE(slurp(fs::path(out) / "hourly.csv").find("2,30.000000,30.000000,10.000000,300.000000"), std::string::npos);
}

TEST(Cli, NodeBudgetFromEnvironment) {
  EXPECT_EQ(cli("validate \"" + data("three_unit.json") + "\"", "CLEARING_NODE_LIMIT=abc"), 0);
  const std::string out = out_dir("budget");
  EXPECT_EQ(cli("clear \"" + data("three_unit.json") + "\" --mechanism ocm --v2g on --out \"" + out + "\"",
                "CLEARING_NODE_LIMIT=abc"),
            2);
  EXPECT_EQ(cli("clear \"" + data("peaky_v2g.json") + "\" --mechanism ocm --v2g on --out \"" + out + "\"",
                "CLEARING_NODE_LIMIT=1"),
            7);
}

TEST(Cli, IterationCapExitsWithIncumbent) {
  const std::string out = out_dir("cap");
  EXPECT_EQ(cli("clear \"" + data("three_unit.json") + "\" --mechanism pcm --v2g on --max-iter 1 --out \"" + out + "\""), 7);
  EXPECT_TRUE(fs::exists(fs::path(out) / "result.json"));
  EXPECT_NE(slurp(fs::path(out) / "result.json").find("\"converged\": false"), std::string::npos);
  EXPECT_TRUE(fs::exists(fs::path(out) / "trace.csv"));
}

TEST(Cli, CompareWritesBothFiles) {
  const std::string out = out_dir("compare");
  ASSERT_EQ(cli("compare \"" + data("three_unit.json") + "\" --out \"" + out + "\""), 0);
  const std::string csv = slurp(fs::path(out) / "comparison.csv");
  EXPECT_NE(csv.find("summary,payment_cost,3750.000000,3750.000000,3650.000000,3650.000000"), std::string::npos) << csv;
  EXPECT_TRUE(fs::exists(fs::path(out) / "comparison.json"));
}
