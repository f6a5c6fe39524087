#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "clearing/errors.hpp"
#include "clearing/lp.hpp"

namespace clearing {

// Periods are indexed from 0 inside the library; messages and files use 1..T.

struct StartupStair {
  std::optional<int> max_offline_periods;  // empty: open-ended last stair
  double cost = 0.0;
};

struct GeneratorOffer {
  std::string id;
  std::vector<double> bid;
  std::vector<double> p_min;
  std::vector<double> p_max;
  double ramp_up = kInf;
  double ramp_down = kInf;
  std::vector<StartupStair> startup_stairs{StartupStair{}};
  double shutdown_cost = 0.0;
  double no_load_cost = 0.0;
  bool initial_committed = false;
  double initial_output = 0.0;
  int initial_offline_periods = 1;

  // Offline durations k with stair_start(s) <= k get at least stair s's cost.
  int stair_start(std::size_t s) const {
    return s == 0 ? 1 : *startup_stairs[s - 1].max_offline_periods + 1;
  }

  // Startup cost after being offline for k >= 1 periods.
  double startup_cost_after(int k) const {
    double c = 0.0;
    for (std::size_t s = 0; s < startup_stairs.size(); ++s) {
      if (k >= stair_start(s)) c = startup_stairs[s].cost;
    }
    return c;
  }

  double max_startup_cost() const {
    double c = 0.0;
    for (const auto& s : startup_stairs) c = std::max(c, s.cost);
    return c;
  }

  // Shortest offline history that prices a start at the last (coldest) stair.
  int coldest_offline_periods() const { return stair_start(startup_stairs.size() - 1); }
};

struct PevFleet {
  std::string id;
  double e_min = 0.0;
  double e_max = 0.0;
  double e_initial = 0.0;
  double e_target = 0.0;
  double ch_min = 0.0;
  double ch_max = 0.0;
  double dsch_min = 0.0;
  double dsch_max = 0.0;
  double efficiency = 1.0;
  std::vector<double> availability;
};

struct FleetLimits {
  double ch_max;
  double ch_min;
  double dsch_max;
  double dsch_min;
};

inline FleetLimits effective_fleet_limits(const PevFleet& f, int t) {
  const double a = f.availability.at(static_cast<std::size_t>(t));
  return {f.ch_max * a, f.ch_min * a, f.dsch_max * a, f.dsch_min * a};
}

struct Scenario {
  int periods = 0;
  std::vector<double> demand;
  std::vector<GeneratorOffer> units;
  std::vector<PevFleet> fleets;

  double max_bid(int t) const {
    double b = 0.0;
    for (const auto& u : units) b = std::max(b, u.bid[static_cast<std::size_t>(t)]);
    return b;
  }
};

namespace detail {

using json = nlohmann::json;

inline std::string where(const std::string& kind, const std::string& id) {
  return fmt::format("{} '{}'", kind, id);
}

inline void check_keys(const json& obj, const std::string& ctx, std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
      throw ValidationError(fmt::format("{}: unknown field '{}'", ctx, it.key()));
    }
  }
}

inline const json& require(const json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(fmt::format("{}: missing field '{}'", ctx, key));
  return *it;
}

inline double number(const json& v, const std::string& ctx, const char* key) {
  if (!v.is_number()) throw ParseError(fmt::format("{}: field '{}' must be a number", ctx, key));
  return v.get<double>();
}

inline double number_or(const json& obj, const char* key, double fallback, const std::string& ctx) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, ctx, key);
}

inline int integer(const json& v, const std::string& ctx, const char* key) {
  if (!v.is_number()) throw ParseError(fmt::format("{}: field '{}' must be a number", ctx, key));
  const double d = v.get<double>();
  if (d != std::floor(d) || std::abs(d) > 1e9) {
    throw ValidationError(fmt::format("{}: field '{}' must be an integer", ctx, key));
  }
  return static_cast<int>(d);
}

// Accepts a per-period array or a scalar that applies to every period.
// Array length is checked by validation so that the message can name the field.
inline std::vector<double> series(const json& v, int periods, const std::string& ctx, const char* key) {
  if (v.is_number()) return std::vector<double>(static_cast<std::size_t>(std::max(periods, 0)), v.get<double>());
  if (!v.is_array()) throw ParseError(fmt::format("{}: field '{}' must be a number or an array", ctx, key));
  std::vector<double> out;
  out.reserve(v.size());
  for (const json& e : v) out.push_back(number(e, ctx, key));
  return out;
}

inline void check_series(const std::vector<double>& s, int periods, const std::string& ctx, const char* key,
                         double hi = kInf) {
  if (static_cast<int>(s.size()) != periods) {
    throw ValidationError(fmt::format("{}: '{}' has {} entries, expected {}", ctx, key, s.size(), periods));
  }
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (!std::isfinite(s[t]) || s[t] < 0.0 || s[t] > hi) {
      throw ValidationError(fmt::format("{}: '{}' at period {} must be finite and within [0, {}]", ctx, key,
                                        t + 1, hi == kInf ? std::string("inf") : fmt::format("{}", hi)));
    }
  }
}

inline void check_scalar(double v, const std::string& ctx, const char* key, bool allow_inf = false) {
  if (std::isnan(v) || v < 0.0 || (!allow_inf && !std::isfinite(v))) {
    throw ValidationError(fmt::format("{}: '{}' must be a finite non-negative number", ctx, key));
  }
}

}  // namespace detail

// Checks every type invariant; throws ValidationError naming the first
// violation. Does not run the capacity screen.
inline void validate_scenario(const Scenario& s) {
  using detail::check_scalar;
  using detail::check_series;
  if (s.periods < 1) throw ValidationError("'periods' must be at least 1");
  check_series(s.demand, s.periods, "scenario", "demand");

  std::set<std::string> ids;
  for (const GeneratorOffer& u : s.units) {
    if (u.id.empty()) throw ValidationError("unit with empty 'id'");
    const std::string ctx = detail::where("unit", u.id);
    if (!ids.insert(u.id).second) throw ValidationError(fmt::format("{}: duplicate id", ctx));
    check_series(u.bid, s.periods, ctx, "bid");
    check_series(u.p_min, s.periods, ctx, "p_min");
    check_series(u.p_max, s.periods, ctx, "p_max");
    for (int t = 0; t < s.periods; ++t) {
      if (u.p_min[static_cast<std::size_t>(t)] > u.p_max[static_cast<std::size_t>(t)]) {
        throw ValidationError(fmt::format("{}: p_min exceeds p_max at period {}", ctx, t + 1));
      }
    }
    check_scalar(u.ramp_up, ctx, "ramp_up", true);
    check_scalar(u.ramp_down, ctx, "ramp_down", true);
    if (u.startup_stairs.empty()) throw ValidationError(fmt::format("{}: 'startup_stairs' is empty", ctx));
    for (std::size_t k = 0; k < u.startup_stairs.size(); ++k) {
      const StartupStair& st = u.startup_stairs[k];
      check_scalar(st.cost, ctx, "startup_stairs.cost");
      const bool last = k + 1 == u.startup_stairs.size();
      if (!st.max_offline_periods && !last) {
        throw ValidationError(fmt::format("{}: only the last startup stair may omit 'max_offline_periods'", ctx));
      }
      if (st.max_offline_periods) {
        if (*st.max_offline_periods < 1) {
          throw ValidationError(fmt::format("{}: startup stair {} threshold must be at least 1", ctx, k + 1));
        }
        if (k > 0 && *st.max_offline_periods <= *u.startup_stairs[k - 1].max_offline_periods) {
          throw ValidationError(fmt::format("{}: startup stair thresholds must be strictly increasing", ctx));
        }
      }
      if (k > 0 && st.cost < u.startup_stairs[k - 1].cost) {
        throw ValidationError(fmt::format("{}: startup stair costs must be non-decreasing", ctx));
      }
    }
    check_scalar(u.shutdown_cost, ctx, "shutdown_cost");
    check_scalar(u.no_load_cost, ctx, "no_load_cost");
    check_scalar(u.initial_output, ctx, "initial_output");
    if (!u.initial_committed && u.initial_output != 0.0) {
      throw ValidationError(fmt::format("{}: initial_output must be 0 when not initially committed", ctx));
    }
    if (u.initial_committed && u.initial_offline_periods != 0) {
      throw ValidationError(fmt::format("{}: initial_offline_periods must be 0 when initially committed", ctx));
    }
    if (!u.initial_committed && u.initial_offline_periods < 1) {
      throw ValidationError(fmt::format("{}: initial_offline_periods must be at least 1 when not initially committed", ctx));
    }
  }

  for (const PevFleet& f : s.fleets) {
    if (f.id.empty()) throw ValidationError("fleet with empty 'id'");
    const std::string ctx = detail::where("fleet", f.id);
    if (!ids.insert(f.id).second) throw ValidationError(fmt::format("{}: duplicate id", ctx));
    for (auto [v, key] : {std::pair{f.e_min, "e_min"}, {f.e_max, "e_max"}, {f.e_initial, "e_initial"},
                          {f.e_target, "e_target"}, {f.ch_min, "ch_min"}, {f.ch_max, "ch_max"},
                          {f.dsch_min, "dsch_min"}, {f.dsch_max, "dsch_max"}}) {
      check_scalar(v, ctx, key);
    }
    if (f.e_min > f.e_initial || f.e_initial > f.e_max) {
      throw ValidationError(fmt::format("{}: requires e_min <= e_initial <= e_max", ctx));
    }
    if (f.e_min > f.e_target || f.e_target > f.e_max) {
      throw ValidationError(fmt::format("{}: requires e_min <= e_target <= e_max", ctx));
    }
    if (f.ch_min > f.ch_max) throw ValidationError(fmt::format("{}: requires ch_min <= ch_max", ctx));
    if (f.dsch_min > f.dsch_max) throw ValidationError(fmt::format("{}: requires dsch_min <= dsch_max", ctx));
    if (!(f.efficiency > 0.0 && f.efficiency <= 1.0)) {
      throw ValidationError(fmt::format("{}: efficiency must be in (0, 1]", ctx));
    }
    check_series(f.availability, s.periods, ctx, "availability", 1.0);
  }
}

// Rejects scenarios whose installed capacity cannot cover demand in some period.
inline void screen_capacity(const Scenario& s) {
  for (int t = 0; t < s.periods; ++t) {
    double cap = 0.0;
    for (const auto& u : s.units) cap += u.p_max[static_cast<std::size_t>(t)];
    for (const auto& f : s.fleets) cap += effective_fleet_limits(f, t).dsch_max;
    const double d = s.demand[static_cast<std::size_t>(t)];
    if (cap < d) {
      throw CapacityError(fmt::format("period {}: available capacity {} MW is below demand {} MW", t + 1, cap, d));
    }
  }
}

inline Scenario scenario_from_json(const nlohmann::json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw ParseError("scenario document must be a JSON object");
  check_keys(doc, "scenario", {"periods", "demand", "units", "fleets"});
  Scenario s;
  s.periods = integer(require(doc, "periods", "scenario"), "scenario", "periods");
  if (s.periods < 1) throw ValidationError("'periods' must be at least 1");
  const json& demand = require(doc, "demand", "scenario");
  if (!demand.is_array()) throw ParseError("scenario: field 'demand' must be an array");
  s.demand = series(demand, s.periods, "scenario", "demand");

  const json& units = require(doc, "units", "scenario");
  if (!units.is_array()) throw ParseError("scenario: field 'units' must be an array");
  for (std::size_t k = 0; k < units.size(); ++k) {
    const json& ju = units[k];
    if (!ju.is_object()) throw ParseError(fmt::format("units[{}] must be an object", k));
    GeneratorOffer u;
    const json& id = require(ju, "id", fmt::format("units[{}]", k));
    if (!id.is_string()) throw ParseError(fmt::format("units[{}]: field 'id' must be a string", k));
    u.id = id.get<std::string>();
    const std::string ctx = where("unit", u.id);
    check_keys(ju, ctx, {"id", "bid", "p_min", "p_max", "ramp_up", "ramp_down", "startup_stairs", "shutdown_cost",
                         "no_load_cost", "initial_committed", "initial_output", "initial_offline_periods"});
    u.bid = series(require(ju, "bid", ctx), s.periods, ctx, "bid");
    u.p_max = series(require(ju, "p_max", ctx), s.periods, ctx, "p_max");
    u.p_min = ju.contains("p_min") ? series(ju["p_min"], s.periods, ctx, "p_min")
                                   : std::vector<double>(static_cast<std::size_t>(s.periods), 0.0);
    u.ramp_up = number_or(ju, "ramp_up", kInf, ctx);
    u.ramp_down = number_or(ju, "ramp_down", kInf, ctx);
    if (ju.contains("startup_stairs")) {
      const json& js = ju["startup_stairs"];
      if (!js.is_array()) throw ParseError(fmt::format("{}: field 'startup_stairs' must be an array", ctx));
      u.startup_stairs.clear();
      for (const json& e : js) {
        if (!e.is_object()) throw ParseError(fmt::format("{}: startup stair must be an object", ctx));
        check_keys(e, ctx + " startup stair", {"max_offline_periods", "cost"});
        StartupStair st;
        st.cost = number(require(e, "cost", ctx + " startup stair"), ctx, "cost");
        if (e.contains("max_offline_periods") && !e["max_offline_periods"].is_null()) {
          st.max_offline_periods = integer(e["max_offline_periods"], ctx, "max_offline_periods");
        }
        u.startup_stairs.push_back(st);
      }
    }
    u.shutdown_cost = number_or(ju, "shutdown_cost", 0.0, ctx);
    u.no_load_cost = number_or(ju, "no_load_cost", 0.0, ctx);
    if (ju.contains("initial_committed")) {
      if (!ju["initial_committed"].is_boolean()) {
        throw ParseError(fmt::format("{}: field 'initial_committed' must be a boolean", ctx));
      }
      u.initial_committed = ju["initial_committed"].get<bool>();
    }
    u.initial_output = number_or(ju, "initial_output", 0.0, ctx);
    if (ju.contains("initial_offline_periods")) {
      u.initial_offline_periods = integer(ju["initial_offline_periods"], ctx, "initial_offline_periods");
    } else if (u.initial_committed) {
      u.initial_offline_periods = 0;
    } else {
      // Default history: offline long enough that a start is priced at the
      // coldest stair. Guarded because the stairs are validated later.
      bool ordered = !u.startup_stairs.empty();
      for (std::size_t k = 0; ordered && k + 1 < u.startup_stairs.size(); ++k) {
        ordered = u.startup_stairs[k].max_offline_periods.has_value();
      }
      u.initial_offline_periods = ordered ? std::max(1, u.coldest_offline_periods()) : 1;
    }
    s.units.push_back(std::move(u));
  }

  if (doc.contains("fleets")) {
    const json& fleets = doc["fleets"];
    if (!fleets.is_array()) throw ParseError("scenario: field 'fleets' must be an array");
    for (std::size_t k = 0; k < fleets.size(); ++k) {
      const json& jf = fleets[k];
      if (!jf.is_object()) throw ParseError(fmt::format("fleets[{}] must be an object", k));
      PevFleet f;
      const json& id = require(jf, "id", fmt::format("fleets[{}]", k));
      if (!id.is_string()) throw ParseError(fmt::format("fleets[{}]: field 'id' must be a string", k));
      f.id = id.get<std::string>();
      const std::string ctx = where("fleet", f.id);
      check_keys(jf, ctx, {"id", "e_min", "e_max", "e_initial", "e_target", "ch_min", "ch_max", "dsch_min",
                           "dsch_max", "efficiency", "availability"});
      f.e_min = number(require(jf, "e_min", ctx), ctx, "e_min");
      f.e_max = number(require(jf, "e_max", ctx), ctx, "e_max");
      f.e_initial = number(require(jf, "e_initial", ctx), ctx, "e_initial");
      f.e_target = number(require(jf, "e_target", ctx), ctx, "e_target");
      f.ch_min = number_or(jf, "ch_min", 0.0, ctx);
      f.ch_max = number(require(jf, "ch_max", ctx), ctx, "ch_max");
      f.dsch_min = number_or(jf, "dsch_min", 0.0, ctx);
      f.dsch_max = number(require(jf, "dsch_max", ctx), ctx, "dsch_max");
      f.efficiency = number(require(jf, "efficiency", ctx), ctx, "efficiency");
      f.availability = jf.contains("availability") ? series(jf["availability"], s.periods, ctx, "availability")
                                                   : std::vector<double>(static_cast<std::size_t>(s.periods), 1.0);
      s.fleets.push_back(std::move(f));
    }
  }
  return s;
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json doc;
  doc["periods"] = s.periods;
  doc["demand"] = s.demand;
  doc["units"] = nlohmann::json::array();
  for (const auto& u : s.units) {
    nlohmann::json ju;
    ju["id"] = u.id;
    ju["bid"] = u.bid;
    ju["p_min"] = u.p_min;
    ju["p_max"] = u.p_max;
    if (std::isfinite(u.ramp_up)) ju["ramp_up"] = u.ramp_up;
    if (std::isfinite(u.ramp_down)) ju["ramp_down"] = u.ramp_down;
    ju["startup_stairs"] = nlohmann::json::array();
    for (const auto& st : u.startup_stairs) {
      nlohmann::json e;
      e["max_offline_periods"] = st.max_offline_periods ? nlohmann::json(*st.max_offline_periods) : nlohmann::json();
      e["cost"] = st.cost;
      ju["startup_stairs"].push_back(e);
    }
    ju["shutdown_cost"] = u.shutdown_cost;
    ju["no_load_cost"] = u.no_load_cost;
    ju["initial_committed"] = u.initial_committed;
    ju["initial_output"] = u.initial_output;
    ju["initial_offline_periods"] = u.initial_offline_periods;
    doc["units"].push_back(ju);
  }
  doc["fleets"] = nlohmann::json::array();
  for (const auto& f : s.fleets) {
    doc["fleets"].push_back({{"id", f.id},
                             {"e_min", f.e_min},
                             {"e_max", f.e_max},
                             {"e_initial", f.e_initial},
                             {"e_target", f.e_target},
                             {"ch_min", f.ch_min},
                             {"ch_max", f.ch_max},
                             {"dsch_min", f.dsch_min},
                             {"dsch_max", f.dsch_max},
                             {"efficiency", f.efficiency},
                             {"availability", f.availability}});
  }
  return doc;
}

inline std::string serialize_scenario(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

inline Scenario load_scenario(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
  Scenario s = scenario_from_json(doc);
  validate_scenario(s);
  screen_capacity(s);
  return s;
}

inline Scenario load_scenario(const std::string& text) {
  std::istringstream in(text);
  return load_scenario(in);
}

// Replaces demand from a two-column CSV with header "period,demand_mw" that
// lists every period 1..T exactly once, then re-validates.
inline void apply_demand_csv(Scenario& s, std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("demand file is empty");
  auto trim = [](std::string v) {
    v.erase(std::remove_if(v.begin(), v.end(), [](unsigned char c) { return std::isspace(c); }), v.end());
    return v;
  };
  if (trim(line) != "period,demand_mw") throw ParseError("demand file header must be 'period,demand_mw'");
  std::vector<double> demand(static_cast<std::size_t>(s.periods), 0.0);
  std::vector<char> seen(static_cast<std::size_t>(s.periods), 0);
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(fmt::format("demand file line {}: expected two columns", row));
    std::size_t used = 0;
    int period = 0;
    double value = 0.0;
    try {
      period = std::stoi(line.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("period");
      const std::string rest = line.substr(comma + 1);
      value = std::stod(rest, &used);
      if (used != rest.size()) throw std::invalid_argument("value");
    } catch (const std::logic_error&) {
      throw ParseError(fmt::format("demand file line {}: malformed number", row));
    }
    if (period < 1 || period > s.periods) {
      throw ValidationError(fmt::format("demand file line {}: period {} outside 1..{}", row, period, s.periods));
    }
    if (seen[static_cast<std::size_t>(period - 1)]++) {
      throw ValidationError(fmt::format("demand file: period {} listed twice", period));
    }
    demand[static_cast<std::size_t>(period - 1)] = value;
  }
  for (int t = 0; t < s.periods; ++t) {
    if (!seen[static_cast<std::size_t>(t)]) throw ValidationError(fmt::format("demand file: period {} missing", t + 1));
  }
  s.demand = std::move(demand);
  validate_scenario(s);
  screen_capacity(s);
}

// The no-V2G variant used for comparisons: fleets are removed, not zeroed.
inline Scenario without_fleets(Scenario s) {
  s.fleets.clear();
  return s;
}

}  // namespace clearing
