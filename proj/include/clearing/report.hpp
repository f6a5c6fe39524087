#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "clearing/ocm.hpp"
#include "clearing/pcm_gbd.hpp"
#include "clearing/results.hpp"
#include "clearing/scenario.hpp"

namespace clearing {

// Every number leaving the tool goes through here: fixed 6 decimals, no
// locale, and -0 printed as 0 so repeated runs compare byte for byte.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::string out = fmt::format("{:.6f}", v);
  if (out.find_first_not_of("-0.") == std::string::npos && out.front() == '-') out.erase(0, 1);
  return out;
}

namespace detail {

// JSON needs quoted non-finite values; everything else is a bare number.
inline std::string jnum(double v) { return std::isfinite(v) ? num(v) : "\"" + num(v) + "\""; }

inline std::string jstr(const std::string& v) {
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (static_cast<unsigned char>(c) < 0x20) {
      out += fmt::format("\\u{:04x}", static_cast<int>(c));
    } else {
      out += c;
    }
  }
  return out + "\"";
}

inline std::string jarray(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ", " : "") + jnum(v[k]);
  return out + "]";
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

}  // namespace detail

struct ReportOptions {
  bool timing = false;  // wall-clock fields are zeroed unless set, keeping output reproducible
};

// Extra decomposition facts that only exist for pcm runs.
struct DecompositionInfo {
  bool converged = false;
  bool proven = false;
};

inline std::string result_json(const ClearingResult& r, const Scenario& s, const ReportOptions& o = {},
                               const std::optional<DecompositionInfo>& gbd = std::nullopt) {
  using detail::jarray;
  using detail::jnum;
  using detail::jstr;
  const Schedule& sch = r.schedule;
  std::string out = "{\n";
  out += "  \"mechanism\": " + jstr(r.stats.mechanism) + ",\n";
  out += fmt::format("  \"periods\": {},\n", s.periods);
  out += "  \"offer_cost\": " + jnum(r.offer_cost) + ",\n";
  out += "  \"payment_cost\": " + jnum(r.payment_cost) + ",\n";
  out += "  \"mcp\": " + jarray(r.mcp) + ",\n";
  out += "  \"unit_payments\": {";
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    out += (i ? ", " : "") + jstr(s.units[i].id) + ": " + jnum(r.unit_payments[i]);
  }
  out += "},\n  \"units\": [";
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    out += i ? ",\n" : "\n";
    out += "    {\"id\": " + jstr(s.units[i].id) + ", \"u\": " + jarray(sch.u[i]) + ", \"p\": " + jarray(sch.p[i]) +
           ", \"sc_u\": " + jarray(sch.sc_u[i]) + ", \"sc_d\": " + jarray(sch.sc_d[i]) + "}";
  }
  out += s.units.empty() ? "],\n" : "\n  ],\n";
  out += "  \"fleets\": [";
  for (std::size_t v = 0; v < s.fleets.size(); ++v) {
    out += v ? ",\n" : "\n";
    out += "    {\"id\": " + jstr(s.fleets[v].id) + ", \"p\": " + jarray(sch.p_fleet[v]) + ", \"u_ch\": " +
           jarray(sch.u_ch[v]) + ", \"u_dsch\": " + jarray(sch.u_dsch[v]) + ", \"e\": " + jarray(sch.e_fleet[v]) + "}";
  }
  out += s.fleets.empty() ? "],\n" : "\n  ],\n";
  out += "  \"stats\": {\"wall_ms\": " + jnum(o.timing ? r.stats.wall_ms : 0.0) +
         fmt::format(", \"lp_iterations\": {}, \"nodes\": {}, \"gbd_iterations\": {}", r.stats.lp_iterations,
                     r.stats.nodes, r.stats.gbd_iterations);
  if (gbd) {
    out += fmt::format(", \"converged\": {}, \"proven\": {}", gbd->converged, gbd->proven);
  }
  out += "}\n}\n";
  return out;
}

// payment_t carries the energy payment plus the fixed costs incurred in
// period t, so the column sums to payment_cost.
inline std::string hourly_csv(const ClearingResult& r, const Scenario& s) {
  std::string out = "t,demand,net_demand,mcp,payment_t,fleet_net_mw\n";
  for (int t = 0; t < s.periods; ++t) {
    const auto k = static_cast<std::size_t>(t);
    double pay = 0.0;
    for (std::size_t i = 0; i < s.units.size(); ++i) {
      pay += r.mcp[k] * r.schedule.p[i][k] + r.schedule.sc_u[i][k] + r.schedule.sc_d[i][k] +
             s.units[i].no_load_cost * r.schedule.u[i][k];
    }
    const double fleet = r.schedule.fleet_net(t);
    out += fmt::format("{},{},{},{},{},{}\n", t + 1, num(s.demand[k]), num(s.demand[k] - fleet), num(r.mcp[k]),
                       num(pay), num(fleet));
  }
  return out;
}

inline std::string trace_csv(const GbdTrace& trace, const ReportOptions& o = {}) {
  std::string out = "iteration,cut_type,ubd,lbd,wall_ms\n";
  for (const TraceRow& row : trace) {
    out += fmt::format("{},{},{},{},{}\n", row.iteration, row.cut_type, num(row.ubd), num(row.lbd),
                       num(o.timing ? row.wall_ms : 0.0));
  }
  return out;
}

struct MechanismSummary {
  double offer_cost = 0.0;
  double payment_cost = 0.0;
  double average_mcp = 0.0;
};

struct Savings {
  double absolute = 0.0;
  double percent = 0.0;
};

// Column order everywhere: OCM, OCM-V2G, PCM, PCM-V2G.
struct ComparisonReport {
  static constexpr const char* kRuns[4] = {"OCM", "OCM-V2G", "PCM", "PCM-V2G"};
  std::vector<std::string> unit_ids;
  MechanismSummary runs[4];
  std::vector<std::vector<double>> unit_payments;  // [unit][run]
  Savings without_v2g;
  Savings with_v2g;
};

inline MechanismSummary summarize(const ClearingResult& r) {
  MechanismSummary m;
  m.offer_cost = r.offer_cost;
  m.payment_cost = r.payment_cost;
  double total = 0.0;
  for (double v : r.mcp) total += v;
  m.average_mcp = r.mcp.empty() ? 0.0 : total / static_cast<double>(r.mcp.size());
  return m;
}

inline Savings savings_of(double ocm_payment, double pcm_payment) {
  Savings out;
  out.absolute = ocm_payment - pcm_payment;
  out.percent = ocm_payment != 0.0 ? 100.0 * out.absolute / ocm_payment : 0.0;
  return out;
}

struct CompareOptions {
  OcmOptions ocm;
  GbdOptions gbd;
};

// Clears the scenario four ways. The runs are independent and go in
// parallel; the report is assembled in a fixed order afterwards.
inline ComparisonReport compare_mechanisms(const Scenario& s, const CompareOptions& o = {}) {
  const Scenario bare = without_fleets(s);
  auto ocm = [&o](const Scenario& sc) { return clear_ocm(sc, o.ocm); };
  auto pcm = [&o](const Scenario& sc) { return run_pcm_gbd(sc, o.gbd).result; };
  std::future<ClearingResult> jobs[4] = {
      std::async(std::launch::async, ocm, std::cref(bare)),
      std::async(std::launch::async, ocm, std::cref(s)),
      std::async(std::launch::async, pcm, std::cref(bare)),
      std::async(std::launch::async, pcm, std::cref(s)),
  };
  // Drain every future before rethrowing so no worker outlives the scenarios.
  std::optional<ClearingResult> results[4];
  std::exception_ptr failure;
  for (int k = 0; k < 4; ++k) {
    try {
      results[k] = jobs[k].get();
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  ComparisonReport rep;
  for (const auto& g : s.units) rep.unit_ids.push_back(g.id);
  rep.unit_payments.assign(s.units.size(), std::vector<double>(4, 0.0));
  for (int k = 0; k < 4; ++k) {
    rep.runs[k] = summarize(*results[k]);
    for (std::size_t i = 0; i < s.units.size(); ++i) rep.unit_payments[i][static_cast<std::size_t>(k)] = results[k]->unit_payments[i];
  }
  rep.without_v2g = savings_of(rep.runs[0].payment_cost, rep.runs[2].payment_cost);
  rep.with_v2g = savings_of(rep.runs[1].payment_cost, rep.runs[3].payment_cost);
  return rep;
}

inline std::string comparison_json(const ComparisonReport& rep) {
  using detail::jnum;
  using detail::jstr;
  std::string out = "{\n  \"runs\": {\n";
  for (int k = 0; k < 4; ++k) {
    const MechanismSummary& m = rep.runs[k];
    out += "    " + jstr(ComparisonReport::kRuns[k]) + ": {\"offer_cost\": " + jnum(m.offer_cost) +
           ", \"payment_cost\": " + jnum(m.payment_cost) + ", \"average_mcp\": " + jnum(m.average_mcp) + "}" +
           (k < 3 ? ",\n" : "\n");
  }
  out += "  },\n  \"unit_payments\": [";
  for (std::size_t i = 0; i < rep.unit_ids.size(); ++i) {
    out += i ? ",\n" : "\n";
    out += "    {\"id\": " + jstr(rep.unit_ids[i]);
    for (int k = 0; k < 4; ++k) out += ", " + jstr(ComparisonReport::kRuns[k]) + ": " + jnum(rep.unit_payments[i][static_cast<std::size_t>(k)]);
    out += "}";
  }
  out += rep.unit_ids.empty() ? "],\n" : "\n  ],\n";
  auto sav = [](const Savings& v) { return "{\"absolute\": " + jnum(v.absolute) + ", \"percent\": " + jnum(v.percent) + "}"; };
  out += "  \"savings\": {\"without_v2g\": " + sav(rep.without_v2g) + ", \"with_v2g\": " + sav(rep.with_v2g) + "}\n}\n";
  return out;
}

inline std::string comparison_csv(const ComparisonReport& rep) {
  std::string out = "section,item,OCM,OCM-V2G,PCM,PCM-V2G\n";
  auto row = [&](const char* section, const std::string& item, auto get) {
    out += fmt::format("{},{}", section, item);
    for (int k = 0; k < 4; ++k) out += "," + num(get(k));
    out += "\n";
  };
  row("summary", "payment_cost", [&](int k) { return rep.runs[k].payment_cost; });
  row("summary", "average_mcp", [&](int k) { return rep.runs[k].average_mcp; });
  row("summary", "offer_cost", [&](int k) { return rep.runs[k].offer_cost; });
  for (std::size_t i = 0; i < rep.unit_ids.size(); ++i) {
    row("unit_payment", rep.unit_ids[i], [&](int k) { return rep.unit_payments[i][static_cast<std::size_t>(k)]; });
  }
  // Savings are PCM against OCM; the without-V2G figure sits under PCM and
  // the with-V2G figure under PCM-V2G.
  out += fmt::format("savings,absolute,,,{},{}\n", num(rep.without_v2g.absolute), num(rep.with_v2g.absolute));
  out += fmt::format("savings,percent,,,{},{}\n", num(rep.without_v2g.percent), num(rep.with_v2g.percent));
  return out;
}

}  // namespace clearing
