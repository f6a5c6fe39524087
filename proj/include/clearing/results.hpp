#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "clearing/errors.hpp"
#include "clearing/scenario.hpp"

namespace clearing {

// Per-unit and per-fleet series are indexed [unit][period] / [fleet][period].
struct Schedule {
  int periods = 0;
  std::vector<std::vector<double>> u;
  std::vector<std::vector<double>> p;
  std::vector<std::vector<double>> sc_u;
  std::vector<std::vector<double>> sc_d;
  std::vector<std::vector<double>> p_fleet;  // positive while discharging
  std::vector<std::vector<double>> u_ch;
  std::vector<std::vector<double>> u_dsch;
  std::vector<std::vector<double>> e_fleet;

  static Schedule empty_for(const Scenario& s) {
    Schedule sch;
    sch.periods = s.periods;
    const auto T = static_cast<std::size_t>(s.periods);
    const std::vector<double> zeros(T, 0.0);
    sch.u.assign(s.units.size(), zeros);
    sch.p = sch.sc_u = sch.sc_d = sch.u;
    sch.p_fleet.assign(s.fleets.size(), zeros);
    sch.u_ch = sch.u_dsch = sch.e_fleet = sch.p_fleet;
    return sch;
  }

  bool committed(std::size_t i, int t) const { return u[i][static_cast<std::size_t>(t)] > 0.5; }

  double generation(int t) const {
    double g = 0.0;
    for (const auto& row : p) g += row[static_cast<std::size_t>(t)];
    return g;
  }
  double fleet_net(int t) const {
    double g = 0.0;
    for (const auto& row : p_fleet) g += row[static_cast<std::size_t>(t)];
    return g;
  }
};

struct SolveStats {
  std::string mechanism;  // "ocm" or "pcm"
  double wall_ms = 0.0;
  long lp_iterations = 0;
  long nodes = 0;
  int gbd_iterations = 0;
};

struct ClearingResult {
  Schedule schedule;
  std::vector<double> mcp;
  double offer_cost = 0.0;
  double payment_cost = 0.0;
  std::vector<double> unit_payments;
  SolveStats stats;
};

// One row of the decomposition convergence record.
struct TraceRow {
  int iteration = 0;
  std::string cut_type;  // "optimality" or "feasibility"
  double ubd = 0.0;      // best upper bound so far; +inf before any
  double lbd = 0.0;
  double wall_ms = 0.0;
};

using GbdTrace = std::vector<TraceRow>;

// Raised when a solver budget runs out; carries the best schedule found so
// far (when there is one) so callers can still report it.
class IterationLimitReached : public ClearingError {
 public:
  IterationLimitReached(const std::string& what, std::optional<ClearingResult> incumbent, GbdTrace trace = {})
      : ClearingError(ExitCode::kIterationLimit, "iteration limit reached: " + what),
        incumbent_(std::move(incumbent)),
        trace_(std::move(trace)) {}
  const std::optional<ClearingResult>& incumbent() const { return incumbent_; }
  const GbdTrace& trace() const { return trace_; }

 private:
  std::optional<ClearingResult> incumbent_;
  GbdTrace trace_;
};

// Uniform price: the highest bid among committed units, 0 when none is.
inline std::vector<double> settle_mcp(const Schedule& sch, const Scenario& s) {
  std::vector<double> mcp(static_cast<std::size_t>(s.periods), 0.0);
  for (int t = 0; t < s.periods; ++t) {
    for (std::size_t i = 0; i < s.units.size(); ++i) {
      if (sch.committed(i, t)) mcp[static_cast<std::size_t>(t)] = std::max(mcp[static_cast<std::size_t>(t)], s.units[i].bid[static_cast<std::size_t>(t)]);
    }
  }
  return mcp;
}

struct Payments {
  double payment_cost = 0.0;
  std::vector<double> unit_payments;
  double offer_cost = 0.0;
};

inline Payments compute_payments(const Schedule& sch, const std::vector<double>& mcp, const Scenario& s) {
  Payments out;
  out.unit_payments.assign(s.units.size(), 0.0);
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    const GeneratorOffer& g = s.units[i];
    for (int t = 0; t < s.periods; ++t) {
      const auto k = static_cast<std::size_t>(t);
      const double fixed = sch.sc_u[i][k] + sch.sc_d[i][k] + g.no_load_cost * sch.u[i][k];
      out.unit_payments[i] += mcp[k] * sch.p[i][k] + fixed;
      out.offer_cost += g.bid[k] * sch.p[i][k] + fixed;
    }
    out.payment_cost += out.unit_payments[i];
  }
  return out;
}

// Fills mcp-dependent fields of a result from its schedule.
inline void price_result(ClearingResult& r, const Scenario& s, std::vector<double> mcp) {
  r.mcp = std::move(mcp);
  Payments pay = compute_payments(r.schedule, r.mcp, s);
  r.offer_cost = pay.offer_cost;
  r.payment_cost = pay.payment_cost;
  r.unit_payments = std::move(pay.unit_payments);
}

}  // namespace clearing
