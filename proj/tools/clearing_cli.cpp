#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "clearing/clearing.hpp"

namespace fs = std::filesystem;
using namespace clearing;

namespace {

Scenario read_scenario(const std::string& path, const std::string& demand_path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  Scenario s = load_scenario(in);
  if (!demand_path.empty()) {
    std::ifstream d(demand_path, std::ios::binary);
    if (!d) throw IoError("cannot open " + demand_path);
    apply_demand_csv(s, d);
  }
  return s;
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
}

// CLEARING_NODE_LIMIT caps branch-and-bound nodes for every MIP solve.
MipOptions mip_from_env() {
  MipOptions m;
  if (const char* v = std::getenv("CLEARING_NODE_LIMIT"); v && *v) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n <= 0) throw ValidationError(fmt::format("CLEARING_NODE_LIMIT must be a positive integer, got '{}'", v));
    m.node_limit = n;
  }
  return m;
}

struct ClearArgs {
  std::string file;
  std::string mechanism = "pcm";
  std::string v2g = "on";
  std::string out;
  std::string demand;
  double epsilon = GbdOptions{}.epsilon;
  int max_iter = GbdOptions{}.max_iterations;
  bool seed_from_ocm = false;
  bool timing = false;
};

void write_outputs(const std::string& out, const ClearingResult& r, const Scenario& s, const ReportOptions& ro,
                   const std::optional<DecompositionInfo>& gbd, const GbdTrace* trace) {
  make_dir(out);
  detail::write_file(fs::path(out) / "result.json", result_json(r, s, ro, gbd));
  detail::write_file(fs::path(out) / "hourly.csv", hourly_csv(r, s));
  if (trace) detail::write_file(fs::path(out) / "trace.csv", trace_csv(*trace, ro));
}

int run_clear(const ClearArgs& a) {
  Scenario s = read_scenario(a.file, a.demand);
  if (a.v2g == "off") {
    s = without_fleets(std::move(s));
    screen_capacity(s);
  }
  const ReportOptions ro{a.timing};
  const MipOptions mip = mip_from_env();
  if (a.mechanism == "ocm") {
    OcmOptions o;
    o.mip = mip;
    try {
      const ClearingResult r = clear_ocm(s, o);
      write_outputs(a.out, r, s, ro, std::nullopt, nullptr);
    } catch (const IterationLimitReached& e) {
      if (e.incumbent()) write_outputs(a.out, *e.incumbent(), s, ro, std::nullopt, nullptr);
      throw;
    }
  } else {
    GbdOptions o;
    o.epsilon = a.epsilon;
    o.max_iterations = a.max_iter;
    o.seed_from_ocm = a.seed_from_ocm;
    o.mip = mip;
    try {
      const GbdResult g = run_pcm_gbd(s, o);
      write_outputs(a.out, g.result, s, ro, DecompositionInfo{g.converged, g.proven}, &g.trace);
    } catch (const IterationLimitReached& e) {
      if (e.incumbent()) {
        write_outputs(a.out, *e.incumbent(), s, ro, DecompositionInfo{false, false}, &e.trace());
      } else if (!e.trace().empty()) {
        make_dir(a.out);
        detail::write_file(fs::path(a.out) / "trace.csv", trace_csv(e.trace(), ro));
      }
      throw;
    }
  }
  fmt::print("wrote {}\n", a.out);
  return 0;
}

int run_compare(const std::string& file, const std::string& out, const std::string& demand) {
  const Scenario s = read_scenario(file, demand);
  CompareOptions o;
  o.ocm.mip = mip_from_env();
  o.gbd.mip = o.ocm.mip;
  const ComparisonReport rep = compare_mechanisms(s, o);
  make_dir(out);
  detail::write_file(fs::path(out) / "comparison.json", comparison_json(rep));
  detail::write_file(fs::path(out) / "comparison.csv", comparison_csv(rep));
  fmt::print("wrote {}\n", out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Day-ahead market clearing under offer-cost and payment-cost minimization"};
  app.require_subcommand(1);

  std::string validate_file;
  auto* validate = app.add_subcommand("validate", "Load and validate a scenario");
  validate->add_option("file", validate_file, "Scenario JSON")->required();

  ClearArgs ca;
  auto* clear = app.add_subcommand("clear", "Clear one market and write result.json, hourly.csv, trace.csv");
  clear->add_option("file", ca.file, "Scenario JSON")->required();
  clear->add_option("--mechanism", ca.mechanism, "ocm or pcm")->check(CLI::IsMember({"ocm", "pcm"}))->required();
  clear->add_option("--v2g", ca.v2g, "on or off")->check(CLI::IsMember({"on", "off"}))->required();
  clear->add_option("--out", ca.out, "Output directory")->required();
  clear->add_option("--epsilon", ca.epsilon, "Absolute UBD-LBD tolerance (pcm)")->check(CLI::PositiveNumber);
  clear->add_option("--max-iter", ca.max_iter, "Decomposition iteration cap (pcm)")->check(CLI::PositiveNumber);
  clear->add_flag("--seed-from-ocm", ca.seed_from_ocm, "Start from the OCM prices instead of the highest bids");
  clear->add_option("--demand", ca.demand, "CSV with header period,demand_mw overriding demand");
  clear->add_flag("--timing", ca.timing, "Report wall-clock times instead of zeros");

  std::string cmp_file, cmp_out, cmp_demand;
  auto* compare = app.add_subcommand("compare", "Run OCM and PCM with and without fleets");
  compare->add_option("file", cmp_file, "Scenario JSON")->required();
  compare->add_option("--out", cmp_out, "Output directory")->required();
  compare->add_option("--demand", cmp_demand, "CSV with header period,demand_mw overriding demand");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (*validate) {
      const Scenario s = read_scenario(validate_file, "");
      fmt::print("ok: {} units, {} fleets, {} periods\n", s.units.size(), s.fleets.size(), s.periods);
      return 0;
    }
    if (*clear) return run_clear(ca);
    return run_compare(cmp_file, cmp_out, cmp_demand);
  } catch (const ClearingError& e) {
    std::cerr << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kInternal);
  }
}
