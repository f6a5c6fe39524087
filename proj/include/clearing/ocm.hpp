#pragma once

#include <chrono>

#include "clearing/mip.hpp"
#include "clearing/model.hpp"
#include "clearing/results.hpp"
#include "clearing/scenario.hpp"

namespace clearing {

struct OcmOptions {
  MipOptions mip;
};

// Minimizes as-bid cost, then settles every period at the highest committed bid.
inline ClearingResult clear_ocm(const Scenario& s, const OcmOptions& opts = {}) {
  const auto started = std::chrono::steady_clock::now();
  const CommitmentModel m = build_ocm_model(s);
  const Solution sol = solve_mip(m.lp, opts.mip);
  if (sol.status == SolveStatus::kInfeasible) {
    throw MarketInfeasible("no commitment meets demand under the unit and fleet constraints");
  }
  if (sol.status == SolveStatus::kUnbounded) throw InternalError("offer-cost model reported unbounded");

  ClearingResult r;
  if (sol.has_values()) {
    r.schedule = extract_schedule(m, s, sol.values);
    price_result(r, s, settle_mcp(r.schedule, s));
  }
  r.stats.mechanism = "ocm";
  r.stats.lp_iterations = sol.iterations;
  r.stats.nodes = sol.nodes;
  r.stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  if (sol.status == SolveStatus::kIterationLimit) {
    throw IterationLimitReached("offer-cost search hit the node budget",
                                sol.has_values() ? std::optional<ClearingResult>(r) : std::nullopt);
  }
  return r;
}

}  // namespace clearing
