#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <queue>
#include <vector>

#include "clearing/lp.hpp"
#include "clearing/simplex.hpp"

namespace clearing {

// Seam for plugging in an external solver. The bundled BaselineSolver is what
// every test and the command-line tool use unless told otherwise.
class Solver {
 public:
  virtual ~Solver() = default;
  virtual Solution solve_lp(const LinearProgram& lp) = 0;
  virtual Solution solve_mip(const LinearProgram& lp, const MipOptions& opts) = 0;
};

namespace detail {

struct BranchRecord {
  int parent;  // -1 at the root
  int var;     // -1 at the root
  double lower;
  double upper;
};

struct OpenNode {
  double bound;
  int depth;
  long seq;
  int record;
  std::shared_ptr<const std::vector<VarStatus>> basis;
};

struct NodeOrder {
  // priority_queue pops the "largest"; we want the smallest bound, then the
  // deepest node, then the oldest.
  bool operator()(const OpenNode& a, const OpenNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.seq > b.seq;
  }
};

class BranchAndBound {
 public:
  BranchAndBound(const LinearProgram& lp, const MipOptions& opts) : lp_(lp), opts_(opts), sx_(lp) {
    for (int j = 0; j < lp.num_variables(); ++j) {
      if (lp.variable(j).integer) ints_.push_back(j);
    }
  }

  Solution run() {
    Solution out;
    const auto root = sx_.solve(false);
    out.iterations = sx_.iterations();
    iterations_ += sx_.iterations();
    if (root == Simplex::Result::kInfeasible) return finish(out, SolveStatus::kInfeasible);
    if (root == Simplex::Result::kUnbounded) return finish(out, SolveStatus::kUnbounded);
    if (root == Simplex::Result::kIterationLimit) return finish(out, SolveStatus::kIterationLimit);

    records_.push_back({-1, -1, 0.0, 0.0});
    if (!process(0, 0)) return finish(out, SolveStatus::kOptimal);
    if (opts_.dive_frequency > 0) dive(0);

    bool truncated = false;
    while (!open_.empty()) {
      if (have_incumbent_ && open_.top().bound >= incumbent_obj_ - gap_allowance()) break;
      if (nodes_ >= opts_.node_limit) {
        truncated = true;
        break;
      }
      OpenNode node = open_.top();
      open_.pop();
      apply_bounds(node.record);
      sx_.set_basis(*node.basis);
      auto r = sx_.solve(true);
      iterations_ += sx_.iterations();
      if (r == Simplex::Result::kIterationLimit) {
        sx_.set_slack_basis();
        r = sx_.solve(false);
        iterations_ += sx_.iterations();
      }
      ++nodes_;
      if (r == Simplex::Result::kIterationLimit) {
        truncated = true;  // node could not be resolved; optimality not proven
        continue;
      }
      if (r != Simplex::Result::kOptimal) continue;
      const bool branched = process(node.record, node.depth);
      if (branched && opts_.dive_frequency > 0 && nodes_ % opts_.dive_frequency == 0) dive(node.record);
    }
    out.nodes = nodes_;
    if (!have_incumbent_) {
      return finish(out, truncated ? SolveStatus::kIterationLimit : SolveStatus::kInfeasible);
    }
    return finish(out, truncated ? SolveStatus::kIterationLimit : SolveStatus::kOptimal);
  }

 private:
  double gap_allowance() const {
    return std::max(opts_.absolute_gap, opts_.relative_gap * std::abs(incumbent_obj_));
  }

  void apply_bounds(int record) {
    sx_.reset_bounds();
    seen_.assign(static_cast<std::size_t>(lp_.num_variables()), 0);
    for (int r = record; r > 0; r = records_[static_cast<std::size_t>(r)].parent) {
      const BranchRecord& b = records_[static_cast<std::size_t>(r)];
      if (seen_[static_cast<std::size_t>(b.var)]) continue;  // deeper change wins
      seen_[static_cast<std::size_t>(b.var)] = 1;
      sx_.set_bounds(b.var, b.lower, b.upper);
    }
  }

  // Most fractional integer variable at the current LP point, -1 if integral.
  int branching_variable() const {
    int best = -1;
    double best_frac = opts_.integrality_tolerance;
    for (int j : ints_) {
      const double v = sx_.value(j);
      const double f = std::min(v - std::floor(v), std::ceil(v) - v);
      if (f > best_frac) {
        best_frac = f;
        best = j;
      }
    }
    return best;
  }

  void consider_incumbent() {
    const double z = sx_.objective();
    if (have_incumbent_ && z >= incumbent_obj_) return;
    have_incumbent_ = true;
    incumbent_obj_ = z;
    incumbent_ = sx_.primal_values();
  }

  // Examines the LP optimum at the current node. Returns true when children
  // were queued.
  bool process(int record, int depth) {
    const double z = sx_.objective();
    if (have_incumbent_ && z >= incumbent_obj_ - gap_allowance()) return false;
    const int j = branching_variable();
    if (j < 0) {
      consider_incumbent();
      return false;
    }
    record = fix_by_reduced_cost(record, z);
    const double v = sx_.value(j);
    auto basis = std::make_shared<const std::vector<VarStatus>>(sx_.basis());
    const double lo = sx_.lower(j);
    const double up = sx_.upper(j);
    records_.push_back({record, j, lo, std::floor(v)});
    open_.push({z, depth + 1, seq_++, static_cast<int>(records_.size()) - 1, basis});
    records_.push_back({record, j, std::ceil(v), up});
    open_.push({z, depth + 1, seq_++, static_cast<int>(records_.size()) - 1, basis});
    return true;
  }

  // A nonbasic integer whose reduced cost alone lifts the node bound past the
  // incumbent cannot move off its bound anywhere below this node.
  int fix_by_reduced_cost(int record, double z) {
    if (!have_incumbent_) return record;
    const double cutoff = incumbent_obj_ - gap_allowance() + 1e-9 * (1.0 + std::abs(incumbent_obj_));
    for (int j : ints_) {
      const double lo = sx_.lower(j);
      const double up = sx_.upper(j);
      if (lo == up) continue;
      const double d = sx_.reduced_cost(j);
      if (sx_.status(j) == VarStatus::kAtLower && z + d > cutoff) {
        records_.push_back({record, j, lo, lo});
      } else if (sx_.status(j) == VarStatus::kAtUpper && z - d > cutoff) {
        records_.push_back({record, j, up, up});
      } else {
        continue;
      }
      record = static_cast<int>(records_.size()) - 1;
      ++fixed_;
    }
    return record;
  }

  // Fix-and-resolve descent from the node's LP point looking for an incumbent.
  void dive(int record) {
    apply_bounds(record);
    std::vector<std::pair<int, double>> fixes;
    auto restore = [&]() {
      apply_bounds(record);
      for (auto [j, v] : fixes) sx_.set_bounds(j, v, v);
    };
    restore();
    auto r = sx_.solve(true);
    iterations_ += sx_.iterations();
    const int max_depth = static_cast<int>(ints_.size()) + 1;
    for (int step = 0; step < max_depth && r == Simplex::Result::kOptimal; ++step) {
      if (have_incumbent_ && sx_.objective() >= incumbent_obj_ - gap_allowance()) return;
      int pick = -1;
      double pick_frac = 1.0;
      for (int j : ints_) {
        const double v = sx_.value(j);
        const double f = std::min(v - std::floor(v), std::ceil(v) - v);
        if (f > opts_.integrality_tolerance && f < pick_frac) {
          pick_frac = f;
          pick = j;
        }
      }
      if (pick < 0) {
        consider_incumbent();
        return;
      }
      const double v = sx_.value(pick);
      const double first = std::round(v);
      const double second = first > v ? std::floor(v) : std::ceil(v);
      fixes.emplace_back(pick, first);
      restore();
      r = sx_.solve(true);
      iterations_ += sx_.iterations();
      if (r != Simplex::Result::kOptimal) {
        fixes.back().second = second;
        restore();
        r = sx_.solve(true);
        iterations_ += sx_.iterations();
      }
    }
  }

  Solution finish(Solution out, SolveStatus status) {
    out.status = status;
    out.nodes = nodes_;
    out.iterations = iterations_;
    if (have_incumbent_) {
      out.values = incumbent_;
      for (int j : ints_) {
        auto& v = out.values[static_cast<std::size_t>(j)];
        v = std::round(v);
      }
      out.objective_value = incumbent_obj_;
    }
    return out;
  }

  const LinearProgram& lp_;
  MipOptions opts_;
  Simplex sx_;
  std::vector<int> ints_;
  std::vector<BranchRecord> records_;
  std::priority_queue<OpenNode, std::vector<OpenNode>, NodeOrder> open_;
  std::vector<char> seen_;
  std::vector<double> incumbent_;
  double incumbent_obj_ = kInf;
  bool have_incumbent_ = false;
  long nodes_ = 0;
  long seq_ = 0;
  long iterations_ = 0;
  long fixed_ = 0;
};

}  // namespace detail

class BaselineSolver final : public Solver {
 public:
  Solution solve_lp(const LinearProgram& lp) override { return clearing::solve_lp(lp); }

  Solution solve_mip(const LinearProgram& lp, const MipOptions& opts) override {
    if (lp.num_integer_variables() == 0) return clearing::solve_lp(lp);
    lp.validate();
    for (const Variable& v : lp.variables()) {
      if (v.lower > v.upper) return {};
    }
    detail::BranchAndBound bb(lp, opts);
    return bb.run();
  }
};

inline Solution solve_mip(const LinearProgram& lp, const MipOptions& opts = {}) {
  BaselineSolver solver;
  return solver.solve_mip(lp, opts);
}

// Re-solves lp as an LP with every integer variable fixed at its value in s,
// which yields row multipliers for a mixed-integer optimum.
inline Solution resolve_duals_with_fixed_integers(const LinearProgram& lp, const Solution& s) {
  if (lp.num_integer_variables() == 0) return solve_lp(lp);
  if (!s.has_values()) throw InternalError("cannot fix integers of a solution without values");
  LinearProgram fixed = lp;
  for (int j = 0; j < lp.num_variables(); ++j) {
    if (!lp.variable(j).integer) continue;
    const double v = std::round(s.values[static_cast<std::size_t>(j)]);
    fixed.set_bounds(j, v, v);
    fixed.set_integer(j, false);
  }
  return solve_lp(fixed);
}

}  // namespace clearing
