#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "clearing/lp.hpp"
#include "clearing/results.hpp"
#include "clearing/scenario.hpp"

namespace clearing {

// Column indices of the commitment model, [unit * T + t] and [fleet * T + t].
struct ModelIndex {
  int periods = 0;
  std::vector<int> p, u, sc_u, sc_d;
  std::vector<int> p_fleet, u_ch, u_dsch, e_fleet;

  int at(const std::vector<int>& v, std::size_t k, int t) const {
    return v[k * static_cast<std::size_t>(periods) + static_cast<std::size_t>(t)];
  }
};

struct CommitmentModel {
  LinearProgram lp;
  ModelIndex ix;
};

namespace detail {

inline std::string label(const char* family, const std::string& id, int t) {
  return fmt::format("{}[{},{}]", family, id, t + 1);
}

// History value u_i(t) for t <= 0 (1-based period numbers).
inline double initial_commitment(const GeneratorOffer& g, int period) {
  if (g.initial_committed) return 1.0;
  return period <= -g.initial_offline_periods ? 1.0 : 0.0;
}

}  // namespace detail

// All commitment, dispatch and fleet constraints with a zero objective. The
// mechanisms add their own objective and price rows on top.
inline CommitmentModel build_commitment_model(const Scenario& s) {
  using detail::label;
  CommitmentModel m;
  LinearProgram& lp = m.lp;
  ModelIndex& ix = m.ix;
  const int T = s.periods;
  ix.periods = T;

  for (const GeneratorOffer& g : s.units) {
    for (int t = 0; t < T; ++t) {
      ix.p.push_back(lp.add_variable(label("p", g.id, t), 0.0, g.p_max[static_cast<std::size_t>(t)]));
      ix.u.push_back(lp.add_binary(label("u", g.id, t)));
      ix.sc_u.push_back(lp.add_variable(label("scu", g.id, t), 0.0, kInf));
      ix.sc_d.push_back(lp.add_variable(label("scd", g.id, t), 0.0, kInf));
    }
  }
  for (const PevFleet& f : s.fleets) {
    for (int t = 0; t < T; ++t) {
      const FleetLimits lim = effective_fleet_limits(f, t);
      ix.p_fleet.push_back(lp.add_variable(label("pv", f.id, t), -lim.ch_max, lim.dsch_max));
      ix.u_ch.push_back(lp.add_binary(label("uch", f.id, t)));
      ix.u_dsch.push_back(lp.add_binary(label("udsch", f.id, t)));
      ix.e_fleet.push_back(lp.add_variable(label("E", f.id, t), f.e_min, f.e_max));
    }
  }

  for (std::size_t i = 0; i < s.units.size(); ++i) {
    const GeneratorOffer& g = s.units[i];
    for (int t = 0; t < T; ++t) {
      const auto k = static_cast<std::size_t>(t);
      const int period = t + 1;
      const int u = ix.at(ix.u, i, t);
      const int p = ix.at(ix.p, i, t);

      // Startup: sc >= cost_s * (u(t) - sum_{n=1..len_s} u(t-n)), one row per stair.
      for (std::size_t st = 0; st < g.startup_stairs.size(); ++st) {
        const double cost = g.startup_stairs[st].cost;
        const int len = g.stair_start(st);
        std::vector<Term> terms{{ix.at(ix.sc_u, i, t), 1.0}, {u, -cost}};
        double history = 0.0;
        for (int n = 1; n <= len; ++n) {
          const int q = period - n;
          if (q >= 1) terms.push_back({ix.at(ix.u, i, q - 1), cost});
          else history += detail::initial_commitment(g, q);
        }
        lp.add_constraint(fmt::format("startup[{},{},{}]", g.id, period, st + 1), std::move(terms),
                          Sense::kGreaterEqual, -cost * history);
      }

      // Shutdown: sc_d >= SD * (u(t-1) - u(t)).
      {
        std::vector<Term> terms{{ix.at(ix.sc_d, i, t), 1.0}, {u, g.shutdown_cost}};
        double rhs = 0.0;
        if (t > 0) terms.push_back({ix.at(ix.u, i, t - 1), -g.shutdown_cost});
        else rhs = g.shutdown_cost * (g.initial_committed ? 1.0 : 0.0);
        lp.add_constraint(label("shutdown", g.id, t), std::move(terms), Sense::kGreaterEqual, rhs);
      }

      lp.add_constraint(label("pmax", g.id, t), {{p, 1.0}, {u, -g.p_max[k]}}, Sense::kLessEqual, 0.0);
      lp.add_constraint(label("pmin", g.id, t), {{p, 1.0}, {u, -g.p_min[k]}}, Sense::kGreaterEqual, 0.0);

      // Ramping. An infinite limit leaves the row out.
      const double pmax_now = g.p_max[k];
      const double pmax_prev = t > 0 ? g.p_max[k - 1] : g.p_max[k];
      const double u0 = g.initial_committed ? 1.0 : 0.0;
      if (std::isfinite(g.ramp_up)) {
        // p(t) - p(t-1) <= u(t-1) RU + (1 - u(t-1)) Pmax(t)
        const double slope = pmax_now - g.ramp_up;
        if (t > 0) {
          lp.add_constraint(label("rampup", g.id, t),
                            {{p, 1.0}, {ix.at(ix.p, i, t - 1), -1.0}, {ix.at(ix.u, i, t - 1), slope}},
                            Sense::kLessEqual, pmax_now);
        } else {
          lp.add_constraint(label("rampup", g.id, t), {{p, 1.0}}, Sense::kLessEqual,
                            pmax_now + g.initial_output - slope * u0);
        }
      }
      if (std::isfinite(g.ramp_down)) {
        // p(t-1) - p(t) <= u(t) RD + (1 - u(t)) Pmax(t-1)
        const double slope = pmax_prev - g.ramp_down;
        if (t > 0) {
          lp.add_constraint(label("rampdown", g.id, t),
                            {{ix.at(ix.p, i, t - 1), 1.0}, {p, -1.0}, {u, slope}}, Sense::kLessEqual, pmax_prev);
        } else {
          lp.add_constraint(label("rampdown", g.id, t), {{p, -1.0}, {u, slope}}, Sense::kLessEqual,
                            pmax_prev - g.initial_output);
        }
      }
    }
  }

  for (int t = 0; t < T; ++t) {
    std::vector<Term> terms;
    for (std::size_t i = 0; i < s.units.size(); ++i) terms.push_back({ix.at(ix.p, i, t), 1.0});
    for (std::size_t v = 0; v < s.fleets.size(); ++v) terms.push_back({ix.at(ix.p_fleet, v, t), 1.0});
    lp.add_constraint(fmt::format("balance[{}]", t + 1), std::move(terms), Sense::kEqual,
                      s.demand[static_cast<std::size_t>(t)]);
  }

  for (std::size_t v = 0; v < s.fleets.size(); ++v) {
    const PevFleet& f = s.fleets[v];
    for (int t = 0; t < T; ++t) {
      const FleetLimits lim = effective_fleet_limits(f, t);
      const int pv = ix.at(ix.p_fleet, v, t);
      const int ch = ix.at(ix.u_ch, v, t);
      const int ds = ix.at(ix.u_dsch, v, t);
      const int e = ix.at(ix.e_fleet, v, t);
      // pv <= u_dsch * dsch_max - u_ch * ch_min
      lp.add_constraint(label("fleetmax", f.id, t), {{pv, 1.0}, {ds, -lim.dsch_max}, {ch, lim.ch_min}},
                        Sense::kLessEqual, 0.0);
      // pv >= u_dsch * dsch_min - u_ch * ch_max
      lp.add_constraint(label("fleetmin", f.id, t), {{pv, 1.0}, {ds, -lim.dsch_min}, {ch, lim.ch_max}},
                        Sense::kGreaterEqual, 0.0);
      lp.add_constraint(label("mode", f.id, t), {{ch, 1.0}, {ds, 1.0}}, Sense::kLessEqual, 1.0);
      // E(t) = E(t-1) - eta * pv(t)
      if (t > 0) {
        lp.add_constraint(label("energy", f.id, t), {{e, 1.0}, {ix.at(ix.e_fleet, v, t - 1), -1.0}, {pv, f.efficiency}},
                          Sense::kEqual, 0.0);
      } else {
        lp.add_constraint(label("energy", f.id, t), {{e, 1.0}, {pv, f.efficiency}}, Sense::kEqual, f.e_initial);
      }
    }
    lp.add_constraint(fmt::format("terminal[{}]", f.id), {{ix.at(ix.e_fleet, v, T - 1), 1.0}}, Sense::kEqual,
                      f.e_target);
  }
  return m;
}

// Offer-cost objective: bids on energy plus startup, shutdown and no-load costs.
inline void add_fixed_costs(CommitmentModel& m, const Scenario& s) {
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    for (int t = 0; t < s.periods; ++t) {
      m.lp.set_cost(m.ix.at(m.ix.sc_u, i, t), 1.0);
      m.lp.set_cost(m.ix.at(m.ix.sc_d, i, t), 1.0);
      m.lp.set_cost(m.ix.at(m.ix.u, i, t), s.units[i].no_load_cost);
    }
  }
}

inline CommitmentModel build_ocm_model(const Scenario& s) {
  CommitmentModel m = build_commitment_model(s);
  add_fixed_costs(m, s);
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    for (int t = 0; t < s.periods; ++t) {
      m.lp.set_cost(m.ix.at(m.ix.p, i, t), s.units[i].bid[static_cast<std::size_t>(t)]);
    }
  }
  return m;
}

inline LinearProgram build_ocm(const Scenario& s) { return build_ocm_model(s).lp; }

inline Schedule extract_schedule(const CommitmentModel& m, const Scenario& s, const std::vector<double>& x) {
  Schedule sch = Schedule::empty_for(s);
  auto get = [&](const std::vector<int>& cols, std::size_t k, int t) {
    return x[static_cast<std::size_t>(m.ix.at(cols, k, t))];
  };
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    for (int t = 0; t < s.periods; ++t) {
      const auto k = static_cast<std::size_t>(t);
      sch.u[i][k] = std::round(get(m.ix.u, i, t));
      sch.p[i][k] = get(m.ix.p, i, t);
      sch.sc_u[i][k] = get(m.ix.sc_u, i, t);
      sch.sc_d[i][k] = get(m.ix.sc_d, i, t);
    }
  }
  for (std::size_t v = 0; v < s.fleets.size(); ++v) {
    for (int t = 0; t < s.periods; ++t) {
      const auto k = static_cast<std::size_t>(t);
      sch.p_fleet[v][k] = get(m.ix.p_fleet, v, t);
      sch.u_ch[v][k] = std::round(get(m.ix.u_ch, v, t));
      sch.u_dsch[v][k] = std::round(get(m.ix.u_dsch, v, t));
      sch.e_fleet[v][k] = get(m.ix.e_fleet, v, t);
    }
  }
  return sch;
}

}  // namespace clearing
