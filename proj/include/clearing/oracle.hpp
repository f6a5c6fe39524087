#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "clearing/lp.hpp"
#include "clearing/results.hpp"
#include "clearing/scenario.hpp"
#include "clearing/simplex.hpp"

namespace clearing {

struct OracleBudget {
  int max_binary_count = 18;
  std::int64_t max_enumerations = std::int64_t{1} << 18;
};

namespace detail {

// Offline run length ending just before `period` (1-based), counting history.
inline int offline_run_before(const GeneratorOffer& g, const std::vector<double>& u, int period) {
  int run = 0;
  for (int q = period - 1; q >= 1; --q) {
    if (u[static_cast<std::size_t>(q - 1)] > 0.5) return run;
    ++run;
  }
  return g.initial_committed ? run : run + g.initial_offline_periods;
}

// Exhaustive search over commitments and fleet modes. Binary vectors are
// ordered lexicographically as (u of unit 1 over periods, ..., u of the last
// unit, then per fleet and period the pair (u_ch, u_dsch)); the smallest
// vector wins ties. Fleet pairs with both flags set violate the mode
// exclusion row and are never generated, so each period has three modes.
class Enumerator {
 public:
  enum class Objective : std::uint8_t { kOffer, kPayment };

  Enumerator(const Scenario& s, const OracleBudget& b) : s_(s) {
    const auto T = static_cast<std::int64_t>(s.periods);
    const auto I = static_cast<std::int64_t>(s.units.size());
    const auto V = static_cast<std::int64_t>(s.fleets.size());
    const std::int64_t binaries = T * (I + 2 * V);
    if (binaries > b.max_binary_count) {
      throw BudgetExceeded(fmt::format("{} binary variables exceed the limit of {}", binaries, b.max_binary_count));
    }
    count_ = 1;
    for (std::int64_t k = 0; k < T * I; ++k) count_ *= 2;
    for (std::int64_t k = 0; k < T * V; ++k) count_ *= 3;
    if (count_ > b.max_enumerations) {
      throw BudgetExceeded(fmt::format("{} assignments exceed the limit of {}", count_, b.max_enumerations));
    }
    build_template();
  }

  ClearingResult run(Objective obj) const {
    constexpr std::int64_t kChunks = 16;  // fixed so the reduction order never depends on hardware
    std::vector<std::future<Best>> parts;
    const std::int64_t step = (count_ + kChunks - 1) / kChunks;
    for (std::int64_t lo = 0; lo < count_; lo += step) {
      const std::int64_t hi = std::min(count_, lo + step);
      parts.push_back(std::async(std::launch::async, [this, lo, hi, obj] { return scan(lo, hi, obj); }));
    }
    Best best;
    for (auto& f : parts) {
      Best b = f.get();
      if (b.index >= 0 && (best.index < 0 || b.value < best.value - kTieTol)) best = std::move(b);
    }
    if (best.index < 0) throw MarketInfeasible("no binary assignment admits a feasible dispatch");
    return best.result;
  }

  std::int64_t assignments() const { return count_; }

 private:
  static constexpr double kTieTol = 1e-9;

  struct Best {
    std::int64_t index = -1;
    double value = kInf;
    ClearingResult result;
  };

  struct Assignment {
    std::vector<std::vector<double>> u;    // [unit][t]
    std::vector<std::vector<int>> mode;    // [fleet][t]: 0 idle, 1 discharge, 2 charge
  };

  Assignment decode(std::int64_t index) const {
    const int T = s_.periods;
    Assignment a;
    a.u.assign(s_.units.size(), std::vector<double>(static_cast<std::size_t>(T), 0.0));
    a.mode.assign(s_.fleets.size(), std::vector<int>(static_cast<std::size_t>(T), 0));
    // Least significant digit is the last fleet's last period.
    for (std::size_t v = s_.fleets.size(); v-- > 0;) {
      for (int t = T; t-- > 0;) {
        a.mode[v][static_cast<std::size_t>(t)] = static_cast<int>(index % 3);
        index /= 3;
      }
    }
    for (std::size_t i = s_.units.size(); i-- > 0;) {
      for (int t = T; t-- > 0;) {
        a.u[i][static_cast<std::size_t>(t)] = static_cast<double>(index % 2);
        index /= 2;
      }
    }
    return a;
  }

  // Continuous dispatch model; bounds, ramp right-hand sides and costs are
  // filled in per assignment.
  void build_template() {
    const int T = s_.periods;
    for (std::size_t i = 0; i < s_.units.size(); ++i) {
      for (int t = 0; t < T; ++t) p_.push_back(lp_.add_variable(fmt::format("p{}_{}", i, t), 0.0, 0.0));
    }
    for (std::size_t v = 0; v < s_.fleets.size(); ++v) {
      for (int t = 0; t < T; ++t) {
        pv_.push_back(lp_.add_variable(fmt::format("pv{}_{}", v, t), 0.0, 0.0));
        e_.push_back(lp_.add_variable(fmt::format("e{}_{}", v, t), s_.fleets[v].e_min, s_.fleets[v].e_max));
      }
    }
    auto P = [&](std::size_t i, int t) { return p_[i * static_cast<std::size_t>(T) + static_cast<std::size_t>(t)]; };
    for (std::size_t i = 0; i < s_.units.size(); ++i) {
      const GeneratorOffer& g = s_.units[i];
      for (int t = 0; t < T; ++t) {
        if (std::isfinite(g.ramp_up)) {
          std::vector<Term> terms{{P(i, t), 1.0}};
          if (t > 0) terms.push_back({P(i, t - 1), -1.0});
          ramp_up_rows_.push_back({i, t, lp_.add_constraint(fmt::format("ru{}_{}", i, t), terms, Sense::kLessEqual, 0.0)});
        }
        if (std::isfinite(g.ramp_down)) {
          std::vector<Term> terms{{P(i, t), -1.0}};
          if (t > 0) terms.push_back({P(i, t - 1), 1.0});
          ramp_down_rows_.push_back({i, t, lp_.add_constraint(fmt::format("rd{}_{}", i, t), terms, Sense::kLessEqual, 0.0)});
        }
      }
    }
    for (int t = 0; t < T; ++t) {
      std::vector<Term> terms;
      for (std::size_t i = 0; i < s_.units.size(); ++i) terms.push_back({P(i, t), 1.0});
      for (std::size_t v = 0; v < s_.fleets.size(); ++v) terms.push_back({pv_[v * static_cast<std::size_t>(T) + static_cast<std::size_t>(t)], 1.0});
      lp_.add_constraint(fmt::format("bal{}", t), terms, Sense::kEqual, s_.demand[static_cast<std::size_t>(t)]);
    }
    for (std::size_t v = 0; v < s_.fleets.size(); ++v) {
      const PevFleet& f = s_.fleets[v];
      const std::size_t base = v * static_cast<std::size_t>(T);
      for (int t = 0; t < T; ++t) {
        const auto k = base + static_cast<std::size_t>(t);
        std::vector<Term> terms{{e_[k], 1.0}, {pv_[k], f.efficiency}};
        if (t > 0) terms.push_back({e_[k - 1], -1.0});
        lp_.add_constraint(fmt::format("en{}_{}", v, t), terms, Sense::kEqual, t == 0 ? f.e_initial : 0.0);
      }
      lp_.add_constraint(fmt::format("term{}", v), {{e_[base + static_cast<std::size_t>(T) - 1], 1.0}}, Sense::kEqual,
                         f.e_target);
    }
  }

  // Quick necessary condition: committed capacity plus fleet modes can meet demand.
  bool screen(const Assignment& a) const {
    for (int t = 0; t < s_.periods; ++t) {
      const auto k = static_cast<std::size_t>(t);
      double hi = 0.0;
      double lo = 0.0;
      for (std::size_t i = 0; i < s_.units.size(); ++i) {
        hi += a.u[i][k] * s_.units[i].p_max[k];
        lo += a.u[i][k] * s_.units[i].p_min[k];
      }
      for (std::size_t v = 0; v < s_.fleets.size(); ++v) {
        const FleetLimits lim = effective_fleet_limits(s_.fleets[v], t);
        if (a.mode[v][k] == 1) {
          hi += lim.dsch_max;
          lo += lim.dsch_min;
        } else if (a.mode[v][k] == 2) {
          hi -= lim.ch_min;
          lo -= lim.ch_max;
        }
      }
      const double d = s_.demand[k];
      if (hi < d - 1e-9 || lo > d + 1e-9) return false;
    }
    return true;
  }

  Best scan(std::int64_t lo, std::int64_t hi, Objective obj) const {
    LinearProgram lp = lp_;
    Best best;
    const int T = s_.periods;
    for (std::int64_t index = lo; index < hi; ++index) {
      const Assignment a = decode(index);
      if (!screen(a)) continue;

      Schedule sch = Schedule::empty_for(s_);
      std::vector<double> mcp(static_cast<std::size_t>(T), 0.0);
      double fixed = 0.0;
      for (std::size_t i = 0; i < s_.units.size(); ++i) {
        const GeneratorOffer& g = s_.units[i];
        sch.u[i] = a.u[i];
        for (int t = 0; t < T; ++t) {
          const auto k = static_cast<std::size_t>(t);
          const double u = a.u[i][k];
          const double prev = t > 0 ? a.u[i][k - 1] : (g.initial_committed ? 1.0 : 0.0);
          if (u > 0.5 && prev < 0.5) sch.sc_u[i][k] = g.startup_cost_after(offline_run_before(g, a.u[i], t + 1));
          if (u < 0.5 && prev > 0.5) sch.sc_d[i][k] = g.shutdown_cost;
          fixed += sch.sc_u[i][k] + sch.sc_d[i][k] + g.no_load_cost * u;
          if (u > 0.5) mcp[k] = std::max(mcp[k], g.bid[k]);
          const int col = p_[i * static_cast<std::size_t>(T) + k];
          lp.set_bounds(col, g.p_min[k] * u, g.p_max[k] * u);
        }
      }
      for (std::size_t i = 0; i < s_.units.size(); ++i) {
        for (int t = 0; t < T; ++t) {
          const auto k = static_cast<std::size_t>(t);
          const double cost = obj == Objective::kOffer ? s_.units[i].bid[k] : mcp[k];
          lp.set_cost(p_[i * static_cast<std::size_t>(T) + k], cost);
        }
      }
      for (const RampRow& r : ramp_up_rows_) {
        const GeneratorOffer& g = s_.units[r.unit];
        const auto k = static_cast<std::size_t>(r.t);
        const double prev_u = r.t > 0 ? a.u[r.unit][k - 1] : (g.initial_committed ? 1.0 : 0.0);
        const double rhs = prev_u * g.ramp_up + (1.0 - prev_u) * g.p_max[k];
        lp.set_rhs(r.row, r.t > 0 ? rhs : rhs + g.initial_output);
      }
      for (const RampRow& r : ramp_down_rows_) {
        const GeneratorOffer& g = s_.units[r.unit];
        const auto k = static_cast<std::size_t>(r.t);
        const double u = a.u[r.unit][k];
        const double pmax_prev = r.t > 0 ? g.p_max[k - 1] : g.p_max[k];
        const double rhs = u * g.ramp_down + (1.0 - u) * pmax_prev;
        lp.set_rhs(r.row, r.t > 0 ? rhs : rhs - g.initial_output);
      }
      for (std::size_t v = 0; v < s_.fleets.size(); ++v) {
        for (int t = 0; t < T; ++t) {
          const auto k = static_cast<std::size_t>(t);
          const FleetLimits lim = effective_fleet_limits(s_.fleets[v], t);
          const int col = pv_[v * static_cast<std::size_t>(T) + k];
          switch (a.mode[v][k]) {
            case 1: lp.set_bounds(col, lim.dsch_min, lim.dsch_max); break;
            case 2: lp.set_bounds(col, -lim.ch_max, -lim.ch_min); break;
            default: lp.set_bounds(col, 0.0, 0.0); break;
          }
          sch.u_dsch[v][k] = a.mode[v][k] == 1 ? 1.0 : 0.0;
          sch.u_ch[v][k] = a.mode[v][k] == 2 ? 1.0 : 0.0;
        }
      }

      const Solution sol = solve_lp(lp);
      if (sol.status != SolveStatus::kOptimal) continue;
      const double value = sol.objective_value + fixed;
      if (best.index >= 0 && !(value < best.value - kTieTol)) continue;

      for (std::size_t i = 0; i < s_.units.size(); ++i) {
        for (int t = 0; t < T; ++t) {
          sch.p[i][static_cast<std::size_t>(t)] = sol.values[static_cast<std::size_t>(p_[i * static_cast<std::size_t>(T) + static_cast<std::size_t>(t)])];
        }
      }
      for (std::size_t v = 0; v < s_.fleets.size(); ++v) {
        for (int t = 0; t < T; ++t) {
          const auto k = v * static_cast<std::size_t>(T) + static_cast<std::size_t>(t);
          sch.p_fleet[v][static_cast<std::size_t>(t)] = sol.values[static_cast<std::size_t>(pv_[k])];
          sch.e_fleet[v][static_cast<std::size_t>(t)] = sol.values[static_cast<std::size_t>(e_[k])];
        }
      }
      best.index = index;
      best.value = value;
      best.result = ClearingResult{};
      best.result.schedule = std::move(sch);
      price_result(best.result, s_, obj == Objective::kOffer ? settle_mcp(best.result.schedule, s_) : mcp);
      best.result.stats.mechanism = obj == Objective::kOffer ? "ocm" : "pcm";
    }
    return best;
  }

  struct RampRow {
    std::size_t unit;
    int t;
    int row;
  };

  const Scenario& s_;
  std::int64_t count_ = 0;
  LinearProgram lp_;
  std::vector<int> p_, pv_, e_;
  std::vector<RampRow> ramp_up_rows_, ramp_down_rows_;
};

}  // namespace detail

// Ground-truth offer-cost clearing by enumeration. The result's offer_cost is
// the minimum of the offer-cost objective; mcp is the settled price.
inline ClearingResult oracle_ocm(const Scenario& s, const OracleBudget& b = {}) {
  return detail::Enumerator(s, b).run(detail::Enumerator::Objective::kOffer);
}

// Ground-truth payment-cost clearing. For each assignment the price is the
// lowest one the floor rows allow, the max committed bid.
inline ClearingResult oracle_pcm(const Scenario& s, const OracleBudget& b = {}) {
  return detail::Enumerator(s, b).run(detail::Enumerator::Objective::kPayment);
}

}  // namespace clearing
