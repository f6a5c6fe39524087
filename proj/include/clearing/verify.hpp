#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "clearing/results.hpp"
#include "clearing/scenario.hpp"

namespace clearing {

// Re-checks a schedule against the market constraints directly from the
// scenario data, without going through the solver's model. Returns one
// message per violated constraint (empty when feasible). When mcp is given,
// the price floor MCP(t) >= B_i(t) u_i(t) is checked as well.
inline std::vector<std::string> verify_schedule(const Scenario& s, const Schedule& sch,
                                                const std::optional<std::vector<double>>& mcp = std::nullopt,
                                                double tol = 1e-6) {
  std::vector<std::string> bad;
  const int T = s.periods;
  auto fail = [&](std::string msg) { bad.push_back(std::move(msg)); };
  auto is_binary = [&](double v) { return std::abs(v) <= tol || std::abs(v - 1.0) <= tol; };

  if (sch.periods != T || sch.u.size() != s.units.size() || sch.p_fleet.size() != s.fleets.size()) {
    fail("schedule shape does not match scenario");
    return bad;
  }

  for (std::size_t i = 0; i < s.units.size(); ++i) {
    const GeneratorOffer& g = s.units[i];
    auto u_at = [&](int period) -> double {  // 1-based, history for period <= 0
      if (period >= 1) return sch.u[i][static_cast<std::size_t>(period - 1)];
      if (g.initial_committed) return 1.0;
      return period <= -g.initial_offline_periods ? 1.0 : 0.0;
    };
    auto p_at = [&](int period) -> double {
      return period >= 1 ? sch.p[i][static_cast<std::size_t>(period - 1)] : g.initial_output;
    };
    for (int period = 1; period <= T; ++period) {
      const auto k = static_cast<std::size_t>(period - 1);
      const double u = sch.u[i][k];
      const double p = sch.p[i][k];
      if (!is_binary(u)) fail(fmt::format("unit {} period {}: commitment {} is not binary", g.id, period, u));

      int start = 1;
      for (const StartupStair& st : g.startup_stairs) {
        double sum = 0.0;
        for (int n = 1; n <= start; ++n) sum += u_at(period - n);
        if (sch.sc_u[i][k] < st.cost * (u - sum) - tol) {
          fail(fmt::format("unit {} period {}: startup cost {} below stair cost {}", g.id, period, sch.sc_u[i][k],
                           st.cost * (u - sum)));
        }
        if (st.max_offline_periods) start = *st.max_offline_periods + 1;
      }
      if (sch.sc_u[i][k] < -tol) fail(fmt::format("unit {} period {}: negative startup cost", g.id, period));

      const double sd = g.shutdown_cost * (u_at(period - 1) - u);
      if (sch.sc_d[i][k] < sd - tol || sch.sc_d[i][k] < -tol) {
        fail(fmt::format("unit {} period {}: shutdown cost {} below {}", g.id, period, sch.sc_d[i][k], sd));
      }

      if (p < g.p_min[k] * u - tol || p > g.p_max[k] * u + tol) {
        fail(fmt::format("unit {} period {}: output {} outside [{}, {}]", g.id, period, p, g.p_min[k] * u,
                         g.p_max[k] * u));
      }

      const double prev_u = u_at(period - 1);
      const double pmax_prev = period > 1 ? g.p_max[k - 1] : g.p_max[k];
      if (std::isfinite(g.ramp_up)) {
        const double lim = prev_u * g.ramp_up + (1.0 - prev_u) * g.p_max[k];
        if (p - p_at(period - 1) > lim + tol) fail(fmt::format("unit {} period {}: ramp-up limit exceeded", g.id, period));
      }
      if (std::isfinite(g.ramp_down)) {
        const double lim = u * g.ramp_down + (1.0 - u) * pmax_prev;
        if (p_at(period - 1) - p > lim + tol) fail(fmt::format("unit {} period {}: ramp-down limit exceeded", g.id, period));
      }

      if (mcp && (*mcp)[k] < g.bid[k] * u - tol) {
        fail(fmt::format("unit {} period {}: price {} below committed bid {}", g.id, period, (*mcp)[k], g.bid[k]));
      }
    }
  }

  for (int period = 1; period <= T; ++period) {
    const auto k = static_cast<std::size_t>(period - 1);
    double supply = 0.0;
    for (const auto& row : sch.p) supply += row[k];
    for (const auto& row : sch.p_fleet) supply += row[k];
    if (std::abs(supply - s.demand[k]) > tol) {
      fail(fmt::format("period {}: supply {} does not meet demand {}", period, supply, s.demand[k]));
    }
  }

  for (std::size_t v = 0; v < s.fleets.size(); ++v) {
    const PevFleet& f = s.fleets[v];
    double e_prev = f.e_initial;
    for (int period = 1; period <= T; ++period) {
      const auto k = static_cast<std::size_t>(period - 1);
      const FleetLimits lim = effective_fleet_limits(f, period - 1);
      const double pv = sch.p_fleet[v][k];
      const double ch = sch.u_ch[v][k];
      const double ds = sch.u_dsch[v][k];
      if (!is_binary(ch) || !is_binary(ds)) fail(fmt::format("fleet {} period {}: mode flags not binary", f.id, period));
      if (pv > ds * lim.dsch_max - ch * lim.ch_min + tol || pv < ds * lim.dsch_min - ch * lim.ch_max - tol) {
        fail(fmt::format("fleet {} period {}: power {} outside mode limits", f.id, period, pv));
      }
      if (ch + ds > 1.0 + tol) fail(fmt::format("fleet {} period {}: charging and discharging at once", f.id, period));
      const double e = sch.e_fleet[v][k];
      if (std::abs(e - (e_prev - f.efficiency * pv)) > tol) {
        fail(fmt::format("fleet {} period {}: energy {} breaks the balance recursion", f.id, period, e));
      }
      if (e < f.e_min - tol || e > f.e_max + tol) fail(fmt::format("fleet {} period {}: energy {} out of range", f.id, period, e));
      e_prev = e;
    }
    if (std::abs(e_prev - f.e_target) > tol) {
      fail(fmt::format("fleet {}: terminal energy {} differs from target {}", f.id, e_prev, f.e_target));
    }
  }
  return bad;
}

}  // namespace clearing
