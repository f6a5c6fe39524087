#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "clearing/mip.hpp"
#include "clearing/model.hpp"
#include "clearing/ocm.hpp"
#include "clearing/results.hpp"
#include "clearing/scenario.hpp"

namespace clearing {

struct GbdOptions {
  double epsilon = 1e-4;  // absolute, currency
  int max_iterations = 50;
  bool seed_from_ocm = false;
  bool ocm_incumbent = true;
  bool feasibility_incumbents = true;
  bool reprice_incumbents = true;
  int price_descent = 2;        // extra subproblem solves per candidate schedule
  int neighborhood_sweeps = 1;  // one-level price moves tried on the final incumbent
  MipOptions mip;
};

// eta >= base_ubd + sum_t grad(t) * (MCP(t) - mcp_ref(t))
struct OptimalityCut {
  double base_ubd = 0.0;
  std::vector<double> mcp_ref;
  std::vector<double> grad;

  double evaluate(const std::vector<double>& mcp) const {
    double v = base_ubd;
    for (std::size_t t = 0; t < grad.size(); ++t) v += grad[t] * (mcp[t] - mcp_ref[t]);
    return v;
  }
};

// w_hat - lambda_sum * (MCP(t) - mcp_ref_t) <= 0, a lower bound on MCP(t).
struct FeasibilityCut {
  int period = 0;  // 0-based
  double w_hat = 0.0;
  double lambda_sum = 0.0;
  double mcp_ref_t = 0.0;

  double price_floor() const { return mcp_ref_t + w_hat / lambda_sum; }
  bool admits(const std::vector<double>& mcp, double tol = 1e-6) const {
    return w_hat - lambda_sum * (mcp[static_cast<std::size_t>(period)] - mcp_ref_t) <= tol;
  }
};

struct CutPool {
  std::vector<OptimalityCut> optimality;
  std::vector<FeasibilityCut> feasibility;
};

// Commitment model plus one price row per (unit, period), indexed [unit * T + t].
struct PriceSubproblem {
  CommitmentModel model;
  std::vector<int> price_rows;
  std::vector<int> slack;  // feasibility variant only
};

inline PriceSubproblem build_optimality_model(const Scenario& s, const std::vector<double>& mcp_hat) {
  PriceSubproblem sp{build_commitment_model(s), {}, {}};
  CommitmentModel& m = sp.model;
  add_fixed_costs(m, s);
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    for (int t = 0; t < s.periods; ++t) {
      const auto k = static_cast<std::size_t>(t);
      m.lp.set_cost(m.ix.at(m.ix.p, i, t), mcp_hat[k]);
      sp.price_rows.push_back(m.lp.add_constraint(detail::label("mcpcap", s.units[i].id, t),
                                                  {{m.ix.at(m.ix.u, i, t), s.units[i].bid[k]}}, Sense::kLessEqual,
                                                  mcp_hat[k]));
    }
  }
  return sp;
}

inline LinearProgram build_optimality_subproblem(const Scenario& s, const std::vector<double>& mcp_hat) {
  return build_optimality_model(s, mcp_hat).model.lp;
}

inline PriceSubproblem build_feasibility_model(const Scenario& s, const std::vector<double>& mcp_hat) {
  PriceSubproblem sp{build_commitment_model(s), {}, {}};
  CommitmentModel& m = sp.model;
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    for (int t = 0; t < s.periods; ++t) {
      const auto k = static_cast<std::size_t>(t);
      const int alpha = m.lp.add_variable(detail::label("alpha", s.units[i].id, t), 0.0, kInf, false, 1.0);
      sp.slack.push_back(alpha);
      sp.price_rows.push_back(m.lp.add_constraint(detail::label("mcpslack", s.units[i].id, t),
                                                  {{m.ix.at(m.ix.u, i, t), s.units[i].bid[k]}, {alpha, -1.0}},
                                                  Sense::kLessEqual, mcp_hat[k]));
    }
  }
  return sp;
}

inline LinearProgram build_feasibility_subproblem(const Scenario& s, const std::vector<double>& mcp_hat) {
  return build_feasibility_model(s, mcp_hat).model.lp;
}

struct OptimalitySubResult {
  bool feasible = false;
  bool proven = true;            // false when the node budget cut the search short
  double objective = 0.0;        // Z_sub at mcp_hat
  Schedule schedule;
  std::vector<std::vector<double>> lambda;  // [unit][t], price-row multipliers
  std::vector<double> row_duals;            // every row of the fixed LP, for logging
  long nodes = 0;
  long iterations = 0;
};

struct FeasibilitySubResult {
  bool proven = true;
  double w = 0.0;
  std::vector<double> w_t;
  Schedule schedule;
  std::vector<std::vector<double>> alpha;
  std::vector<std::vector<double>> lambda;
  long nodes = 0;
  long iterations = 0;
};

namespace detail {

inline std::vector<std::vector<double>> per_unit(const Scenario& s, const std::vector<int>& idx,
                                                 const std::vector<double>& values) {
  std::vector<std::vector<double>> out(s.units.size(), std::vector<double>(static_cast<std::size_t>(s.periods)));
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    for (int t = 0; t < s.periods; ++t) {
      out[i][static_cast<std::size_t>(t)] = values[static_cast<std::size_t>(idx[i * static_cast<std::size_t>(s.periods) + static_cast<std::size_t>(t)])];
    }
  }
  return out;
}

// MIP solve followed by the fixed-integer LP that supplies the multipliers.
inline std::pair<Solution, Solution> solve_with_duals(const LinearProgram& lp, const MipOptions& opts) {
  Solution mip = solve_mip(lp, opts);
  if (mip.status == SolveStatus::kUnbounded) throw InternalError("price subproblem reported unbounded");
  if (!mip.has_values()) return {mip, Solution{}};
  Solution fixed = resolve_duals_with_fixed_integers(lp, mip);
  if (fixed.status != SolveStatus::kOptimal) {
    throw InternalError(fmt::format("fixed-commitment LP returned {}", to_string(fixed.status)));
  }
  return {mip, fixed};
}

// Keeps the unit commitments of sch, prices every period at the highest
// committed bid and re-solves dispatch and fleet modes for the least payment.
inline Schedule reprice_dispatch(const Scenario& s, const Schedule& sch, const MipOptions& opts) {
  PriceSubproblem sp = build_optimality_model(s, settle_mcp(sch, s));
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    for (int t = 0; t < s.periods; ++t) {
      const double u = sch.u[i][static_cast<std::size_t>(t)];
      sp.model.lp.set_bounds(sp.model.ix.at(sp.model.ix.u, i, t), u, u);
    }
  }
  const Solution sol = solve_mip(sp.model.lp, opts);
  if (!sol.has_values()) return sch;
  return extract_schedule(sp.model, s, sol.values);
}

}  // namespace detail

inline OptimalitySubResult solve_optimality_subproblem(const Scenario& s, const std::vector<double>& mcp_hat,
                                                       const MipOptions& opts = {}) {
  const PriceSubproblem sp = build_optimality_model(s, mcp_hat);
  auto [mip, fixed] = detail::solve_with_duals(sp.model.lp, opts);
  OptimalitySubResult r;
  r.nodes = mip.nodes;
  r.iterations = mip.iterations + fixed.iterations;
  if (!mip.has_values()) {
    // Infeasible, or no schedule found within the node budget.
    r.proven = mip.status == SolveStatus::kInfeasible;
    return r;
  }
  r.feasible = true;
  r.proven = mip.status == SolveStatus::kOptimal;
  r.objective = fixed.objective_value;
  r.schedule = extract_schedule(sp.model, s, fixed.values);
  r.lambda = detail::per_unit(s, sp.price_rows, fixed.duals);
  r.row_duals = fixed.duals;
  return r;
}

// The optimality subproblem with every binary fixed at sch: objective and
// price-row multipliers for a known schedule.
inline OptimalitySubResult evaluate_optimality_subproblem(const Scenario& s, const std::vector<double>& mcp_hat,
                                                          const Schedule& sch) {
  PriceSubproblem sp = build_optimality_model(s, mcp_hat);
  LinearProgram& lp = sp.model.lp;
  const ModelIndex& ix = sp.model.ix;
  auto fix = [&](int j, double v) {
    lp.set_bounds(j, v, v);
    lp.set_integer(j, false);
  };
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    for (int t = 0; t < s.periods; ++t) fix(ix.at(ix.u, i, t), sch.u[i][static_cast<std::size_t>(t)]);
  }
  for (std::size_t v = 0; v < s.fleets.size(); ++v) {
    for (int t = 0; t < s.periods; ++t) {
      fix(ix.at(ix.u_ch, v, t), sch.u_ch[v][static_cast<std::size_t>(t)]);
      fix(ix.at(ix.u_dsch, v, t), sch.u_dsch[v][static_cast<std::size_t>(t)]);
    }
  }
  const Solution sol = solve_lp(lp);
  OptimalitySubResult r;
  r.proven = false;
  r.iterations = sol.iterations;
  if (sol.status != SolveStatus::kOptimal) return r;
  r.feasible = true;
  r.objective = sol.objective_value;
  r.schedule = extract_schedule(sp.model, s, sol.values);
  r.lambda = detail::per_unit(s, sp.price_rows, sol.duals);
  r.row_duals = sol.duals;
  return r;
}

inline FeasibilitySubResult solve_feasibility_subproblem(const Scenario& s, const std::vector<double>& mcp_hat,
                                                         const MipOptions& opts = {}) {
  const PriceSubproblem sp = build_feasibility_model(s, mcp_hat);
  auto [mip, fixed] = detail::solve_with_duals(sp.model.lp, opts);
  if (!mip.has_values()) {
    if (mip.status == SolveStatus::kIterationLimit) {
      throw IterationLimitReached("feasibility subproblem found no schedule within the node budget", std::nullopt);
    }
    throw MarketInfeasible("no commitment meets demand under the unit and fleet constraints");
  }
  FeasibilitySubResult r;
  r.proven = mip.status == SolveStatus::kOptimal;
  r.nodes = mip.nodes;
  r.iterations = mip.iterations + fixed.iterations;
  r.w = fixed.objective_value;
  r.schedule = extract_schedule(sp.model, s, fixed.values);
  r.alpha = detail::per_unit(s, sp.slack, fixed.values);
  r.lambda = detail::per_unit(s, sp.price_rows, fixed.duals);
  r.w_t.assign(static_cast<std::size_t>(s.periods), 0.0);
  for (const auto& row : r.alpha) {
    for (std::size_t t = 0; t < row.size(); ++t) r.w_t[t] += row[t];
  }
  return r;
}

inline OptimalityCut make_optimality_cut(const OptimalitySubResult& sub, const std::vector<double>& mcp_hat) {
  OptimalityCut cut;
  cut.base_ubd = sub.objective;
  cut.mcp_ref = mcp_hat;
  cut.grad.assign(mcp_hat.size(), 0.0);
  for (std::size_t t = 0; t < mcp_hat.size(); ++t) {
    for (std::size_t i = 0; i < sub.schedule.p.size(); ++i) cut.grad[t] += sub.schedule.p[i][t] - sub.lambda[i][t];
  }
  return cut;
}

inline std::vector<FeasibilityCut> make_feasibility_cuts(const FeasibilitySubResult& sub,
                                                         const std::vector<double>& mcp_hat, double tol = 1e-9) {
  std::vector<FeasibilityCut> cuts;
  for (std::size_t t = 0; t < mcp_hat.size(); ++t) {
    if (sub.w_t[t] <= tol) continue;
    double lambda_sum = 0.0;
    for (const auto& row : sub.lambda) lambda_sum += row[t];
    if (lambda_sum <= tol) {
      throw InternalError(fmt::format("feasibility cut for period {} has slack {} but zero multipliers", t + 1,
                                      sub.w_t[t]));
    }
    cuts.push_back({static_cast<int>(t), sub.w_t[t], lambda_sum, mcp_hat[t]});
  }
  return cuts;
}

// Upper bound on any payment: every period's load plus full fleet charging
// paid at the highest bid, plus every fixed cost in every period.
inline double payment_upper_bound(const Scenario& s) {
  double h = 0.0;
  for (int t = 0; t < s.periods; ++t) {
    double energy = s.demand[static_cast<std::size_t>(t)];
    for (const auto& f : s.fleets) energy += effective_fleet_limits(f, t).ch_max;
    h += energy * s.max_bid(t);
  }
  for (const auto& g : s.units) {
    h += static_cast<double>(s.periods) * (g.max_startup_cost() + g.shutdown_cost + g.no_load_cost);
  }
  return h;
}

struct MasterResult {
  std::vector<double> mcp;
  double lbd = 0.0;
};

// min eta over (eta, MCP) subject to the pool and the box bounds. Among the
// minimizers, the lowest total price is returned.
inline MasterResult solve_master(const CutPool& pool, const Scenario& s) {
  const int T = s.periods;
  LinearProgram lp;
  const int eta = lp.add_variable("eta", 0.0, payment_upper_bound(s), false, 1.0);
  std::vector<int> mcp;
  for (int t = 0; t < T; ++t) mcp.push_back(lp.add_variable(fmt::format("mcp[{}]", t + 1), 0.0, s.max_bid(t)));
  for (std::size_t k = 0; k < pool.optimality.size(); ++k) {
    const OptimalityCut& c = pool.optimality[k];
    std::vector<Term> terms{{eta, 1.0}};
    double rhs = c.base_ubd;
    for (int t = 0; t < T; ++t) {
      const auto i = static_cast<std::size_t>(t);
      terms.push_back({mcp[i], -c.grad[i]});
      rhs -= c.grad[i] * c.mcp_ref[i];
    }
    lp.add_constraint(fmt::format("opt[{}]", k + 1), std::move(terms), Sense::kGreaterEqual, rhs);
  }
  for (std::size_t k = 0; k < pool.feasibility.size(); ++k) {
    const FeasibilityCut& c = pool.feasibility[k];
    lp.add_constraint(fmt::format("feas[{}]", k + 1), {{mcp[static_cast<std::size_t>(c.period)], c.lambda_sum}},
                      Sense::kGreaterEqual, c.w_hat + c.lambda_sum * c.mcp_ref_t);
  }
  const Solution first = solve_lp(lp);
  if (first.status == SolveStatus::kInfeasible) {
    throw NoPriceExists("the cuts push some period's price above the highest bid");
  }
  if (first.status != SolveStatus::kOptimal) {
    throw InternalError(fmt::format("master problem returned {}", to_string(first.status)));
  }
  // Second stage: keep eta optimal and pick the lowest prices.
  const double eta_star = first.objective_value;
  lp.set_cost(eta, 0.0);
  for (int j : mcp) lp.set_cost(j, 1.0);
  lp.set_bounds(eta, 0.0, eta_star + 1e-9 * (1.0 + std::abs(eta_star)));
  const Solution second = solve_lp(lp);
  const Solution& use = second.status == SolveStatus::kOptimal ? second : first;
  MasterResult r;
  r.lbd = eta_star;
  for (int j : mcp) r.mcp.push_back(use.values[static_cast<std::size_t>(j)]);
  return r;
}

struct GbdResult {
  ClearingResult result;
  GbdTrace trace;
  CutPool cuts;
  bool converged = false;
  bool proven = true;  // every subproblem MIP closed its gap within the node budget
};

inline std::vector<double> initial_price_guess(const Scenario& s, const GbdOptions& opts) {
  if (opts.seed_from_ocm) {
    OcmOptions o;
    o.mip = opts.mip;
    try {
      return clear_ocm(s, o).mcp;
    } catch (const IterationLimitReached& e) {
      if (e.incumbent()) return e.incumbent()->mcp;
    }
  }
  std::vector<double> m(static_cast<std::size_t>(s.periods));
  for (int t = 0; t < s.periods; ++t) m[static_cast<std::size_t>(t)] = s.max_bid(t);
  return m;
}

inline GbdResult run_pcm_gbd(const Scenario& s, const GbdOptions& opts = {}) {
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();
  auto elapsed_ms = [&] { return std::chrono::duration<double, std::milli>(clock::now() - started).count(); };

  GbdResult out;
  std::vector<double> mcp_hat = initial_price_guess(s, opts);
  double ubd = kInf;
  double lbd = 0.0;
  std::optional<ClearingResult> incumbent;
  long nodes = 0;
  long iterations = 0;

  std::set<std::vector<double>> descended;
  // Candidate schedules update the incumbent at their settled prices. Each
  // descent step re-solves the optimality subproblem at the candidate's own
  // price, which can only lower the payment.
  auto offer = [&](const Schedule& sch) {
    Schedule current = sch;
    for (int d = 0;; ++d) {
      ClearingResult candidate;
      candidate.schedule = opts.reprice_incumbents ? detail::reprice_dispatch(s, current, opts.mip) : current;
      price_result(candidate, s, settle_mcp(current, s));
      if (candidate.payment_cost < ubd) {
        ubd = candidate.payment_cost;
        incumbent = candidate;
      }
      if (d >= opts.price_descent || !descended.insert(candidate.mcp).second) break;
      OptimalitySubResult again = solve_optimality_subproblem(s, candidate.mcp, opts.mip);
      nodes += again.nodes;
      iterations += again.iterations;
      out.proven = out.proven && again.proven;
      if (!again.feasible) break;
      out.cuts.optimality.push_back(make_optimality_cut(again, candidate.mcp));
      current = std::move(again.schedule);
    }
  };
  // Each move caps one period's price at the next bid level below the
  // incumbent's, either on the incumbent's prices or on the highest bids.
  auto search_neighborhood = [&] {
    for (int sweep = 0; sweep < opts.neighborhood_sweeps; ++sweep) {
      const double before = ubd;
      const std::vector<double> base = incumbent->mcp;
      for (int t = 0; t < s.periods; ++t) {
        const auto k = static_cast<std::size_t>(t);
        double below = -kInf;
        double above = kInf;
        for (const auto& g : s.units) {
          if (g.bid[k] < base[k] - 1e-9) below = std::max(below, g.bid[k]);
          if (g.bid[k] > base[k] + 1e-9) above = std::min(above, g.bid[k]);
        }
        std::vector<std::vector<double>> moves;
        if (below > -kInf) {
          moves.push_back(base);
          moves.back()[k] = below;
          moves.push_back(initial_price_guess(s, GbdOptions{}));
          moves.back()[k] = below;
        }
        if (above < kInf) {
          moves.push_back(base);
          moves.back()[k] = above;
        }
        for (const auto& m : moves) {
          if (!descended.insert(m).second) continue;
          OptimalitySubResult sub = solve_optimality_subproblem(s, m, opts.mip);
          nodes += sub.nodes;
          iterations += sub.iterations;
          out.proven = out.proven && sub.proven;
          if (sub.feasible) offer(sub.schedule);
        }
      }
      if (ubd >= before) break;
    }
  };

  if (opts.ocm_incumbent) {
    OcmOptions o;
    o.mip = opts.mip;
    try {
      offer(clear_ocm(s, o).schedule);
    } catch (const IterationLimitReached& e) {
      out.proven = false;
      if (e.incumbent()) offer(e.incumbent()->schedule);
    }
  }

  for (int k = 1; k <= opts.max_iterations; ++k) {
    TraceRow row;
    row.iteration = k;
    OptimalitySubResult sub = solve_optimality_subproblem(s, mcp_hat, opts.mip);
    nodes += sub.nodes;
    iterations += sub.iterations;
    out.proven = out.proven && sub.proven;
    std::optional<FeasibilitySubResult> fsub;
    if (!sub.feasible) {
      fsub = solve_feasibility_subproblem(s, mcp_hat, opts.mip);
      nodes += fsub->nodes;
      iterations += fsub->iterations;
      out.proven = out.proven && fsub->proven;
      if (fsub->w <= 1e-9) {
        // The budget-limited search missed a schedule the slack model found.
        sub = evaluate_optimality_subproblem(s, mcp_hat, fsub->schedule);
        iterations += sub.iterations;
      }
    }
    if (sub.feasible) {
      row.cut_type = "optimality";
      descended.insert(mcp_hat);
      offer(sub.schedule);
      out.cuts.optimality.push_back(make_optimality_cut(sub, mcp_hat));
    } else {
      row.cut_type = "feasibility";
      if (opts.feasibility_incumbents) offer(fsub->schedule);
      std::vector<FeasibilityCut> cuts = make_feasibility_cuts(*fsub, mcp_hat);
      if (cuts.empty()) {
        throw InternalError("feasibility subproblem found no price violation after an infeasible optimality subproblem");
      }
      out.cuts.feasibility.insert(out.cuts.feasibility.end(), cuts.begin(), cuts.end());
    }

    const MasterResult master = solve_master(out.cuts, s);
    lbd = std::max(lbd, master.lbd);
    if (incumbent && ubd - lbd <= opts.epsilon) search_neighborhood();
    row.ubd = ubd;
    row.lbd = lbd;
    row.wall_ms = elapsed_ms();
    out.trace.push_back(row);
    if (incumbent && ubd - lbd <= opts.epsilon) {
      out.converged = true;
      break;
    }
    mcp_hat = master.mcp;
  }

  auto finalize = [&](ClearingResult r) {
    r.stats.mechanism = "pcm";
    r.stats.gbd_iterations = static_cast<int>(out.trace.size());
    r.stats.nodes = nodes;
    r.stats.lp_iterations = iterations;
    r.stats.wall_ms = elapsed_ms();
    return r;
  };
  if (!out.converged) {
    throw IterationLimitReached(fmt::format("decomposition did not converge in {} iterations", opts.max_iterations),
                                incumbent ? std::optional<ClearingResult>(finalize(*incumbent)) : std::nullopt,
                                out.trace);
  }
  out.result = finalize(*incumbent);
  return out;
}

}  // namespace clearing
