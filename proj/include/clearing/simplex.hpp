#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "clearing/detail/basis_factor.hpp"
#include "clearing/lp.hpp"

namespace clearing {

enum class VarStatus : std::int8_t { kBasic, kAtLower, kAtUpper, kAtZero };

struct SimplexTolerances {
  double primal = 1e-9;   // internal; reported solutions are checked against 1e-7
  double dual = 1e-9;
  double pivot = 1e-9;
};

// Bounded-variable revised simplex over the rows of a LinearProgram.
//
// Internally every row i gets a logical variable r_i = a_i'x whose bounds encode
// the row sense, so the working system is [A | -I] (x, r) = 0. A cold start
// uses the all-logical basis and the primal method (phase 1 minimizes the sum
// of bound violations). A warm start from a dual-feasible basis runs the dual
// method, which is how branch-and-bound reoptimizes after a bound change.
class Simplex {
 public:
  enum class Result : std::uint8_t { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

  explicit Simplex(const LinearProgram& lp) : lp_(&lp) {
    m_ = lp.num_constraints();
    n_ = lp.num_variables();
    total_ = n_ + m_;
    std::vector<int> counts(static_cast<std::size_t>(n_), 0);
    for (const Constraint& r : lp.constraints()) {
      for (const Term& t : r.terms) ++counts[static_cast<std::size_t>(t.var)];
    }
    cstart_.assign(static_cast<std::size_t>(n_) + 1, 0);
    for (int j = 0; j < n_; ++j) cstart_[static_cast<std::size_t>(j) + 1] = cstart_[static_cast<std::size_t>(j)] + counts[static_cast<std::size_t>(j)];
    crow_.resize(static_cast<std::size_t>(cstart_.back()));
    cval_.resize(static_cast<std::size_t>(cstart_.back()));
    std::vector<int> fill(cstart_.begin(), cstart_.end() - 1);
    for (int i = 0; i < m_; ++i) {
      for (const Term& t : lp.constraint(i).terms) {
        const int slot = fill[static_cast<std::size_t>(t.var)]++;
        crow_[static_cast<std::size_t>(slot)] = i;
        cval_[static_cast<std::size_t>(slot)] = t.coef;
      }
    }
    cost_.assign(static_cast<std::size_t>(total_), 0.0);
    lo0_.assign(static_cast<std::size_t>(total_), 0.0);
    up0_.assign(static_cast<std::size_t>(total_), 0.0);
    for (int j = 0; j < n_; ++j) {
      cost_[static_cast<std::size_t>(j)] = lp.cost(j);
      lo0_[static_cast<std::size_t>(j)] = lp.variable(j).lower;
      up0_[static_cast<std::size_t>(j)] = lp.variable(j).upper;
    }
    for (int i = 0; i < m_; ++i) {
      const Constraint& r = lp.constraint(i);
      const auto k = static_cast<std::size_t>(n_ + i);
      switch (r.sense) {
        case Sense::kLessEqual: lo0_[k] = -kInf; up0_[k] = r.rhs; break;
        case Sense::kGreaterEqual: lo0_[k] = r.rhs; up0_[k] = kInf; break;
        case Sense::kEqual: lo0_[k] = r.rhs; up0_[k] = r.rhs; break;
      }
    }
    lo_ = lo0_;
    up_ = up0_;
    x_.assign(static_cast<std::size_t>(total_), 0.0);
    status_.assign(static_cast<std::size_t>(total_), VarStatus::kAtLower);
    head_.assign(static_cast<std::size_t>(m_), 0);
    y_.assign(static_cast<std::size_t>(m_), 0.0);
    d_.assign(static_cast<std::size_t>(total_), 0.0);
    set_slack_basis();
  }

  int rows() const { return m_; }
  int columns() const { return n_; }

  void set_bounds(int j, double lo, double up) {
    lo_[static_cast<std::size_t>(j)] = lo;
    up_[static_cast<std::size_t>(j)] = up;
  }
  void reset_bounds() {
    std::copy(lo0_.begin(), lo0_.begin() + n_, lo_.begin());
    std::copy(up0_.begin(), up0_.begin() + n_, up_.begin());
  }
  double lower(int j) const { return lo_[static_cast<std::size_t>(j)]; }
  double upper(int j) const { return up_[static_cast<std::size_t>(j)]; }

  void set_slack_basis() {
    for (int i = 0; i < m_; ++i) {
      head_[static_cast<std::size_t>(i)] = n_ + i;
      status_[static_cast<std::size_t>(n_ + i)] = VarStatus::kBasic;
    }
    for (int j = 0; j < n_; ++j) status_[static_cast<std::size_t>(j)] = default_status(j);
    factor_valid_ = false;
  }

  // Installs a basis previously obtained from basis(). Returns false when the
  // snapshot does not describe m basic variables.
  bool set_basis(const std::vector<VarStatus>& snapshot) {
    if (static_cast<int>(snapshot.size()) != total_) return false;
    int k = 0;
    for (int j = 0; j < total_; ++j) {
      if (snapshot[static_cast<std::size_t>(j)] == VarStatus::kBasic) {
        if (k == m_) return false;
        head_[static_cast<std::size_t>(k++)] = j;
      }
    }
    if (k != m_) return false;
    status_ = snapshot;
    factor_valid_ = false;
    return true;
  }

  const std::vector<VarStatus>& basis() const { return status_; }

  // Solves from the current basis. A warm start tries the dual method first.
  Result solve(bool warm, long max_iterations = -1) {
    if (max_iterations < 0) max_iterations = 50L * (total_ + 10);
    iteration_budget_ = max_iterations;
    iterations_ = 0;
    fix_nonbasic_values();
    Result r = Result::kIterationLimit;
    if (warm) {
      const Outcome o = run_dual();
      if (o == Outcome::kOptimal) {
        r = Result::kOptimal;
      } else if (o == Outcome::kInfeasible) {
        return Result::kInfeasible;
      } else if (o == Outcome::kLimit) {
        return Result::kIterationLimit;
      } else {
        r = primal_result(run_primal());
      }
    } else {
      r = primal_result(run_primal());
    }
    // Cleanup: a fresh factorization must confirm feasibility and optimality.
    for (int attempt = 0; attempt < 3 && r == Result::kOptimal; ++attempt) {
      refactor();
      compute_primal();
      compute_duals(false);
      if (max_primal_infeasibility() <= kReportTol && dual_infeasibility() <= kReportTol) break;
      r = primal_result(run_primal());
    }
    return r;
  }

  long iterations() const { return iterations_; }

  double objective() const {
    double z = lp_->objective_constant();
    for (int j = 0; j < n_; ++j) z += cost_[static_cast<std::size_t>(j)] * x_[static_cast<std::size_t>(j)];
    return z;
  }

  std::vector<double> primal_values() const {
    return {x_.begin(), x_.begin() + n_};
  }
  double value(int j) const { return x_[static_cast<std::size_t>(j)]; }

  // Raw multipliers y = d(objective)/d(row bound); see Solution for the
  // normalized convention.
  const std::vector<double>& row_prices() const { return y_; }
  std::vector<double> reduced_costs() const { return {d_.begin(), d_.begin() + n_}; }
  double reduced_cost(int j) const { return d_[static_cast<std::size_t>(j)]; }
  VarStatus status(int j) const { return status_[static_cast<std::size_t>(j)]; }

 private:
  enum class Outcome : std::uint8_t { kOptimal, kInfeasible, kUnbounded, kLimit, kNotDualFeasible };

  static constexpr double kReportTol = 1e-8;
  static constexpr int kRefactorInterval = 80;
  static constexpr int kStallLimit = 40;

  static Result primal_result(Outcome o) {
    switch (o) {
      case Outcome::kOptimal: return Result::kOptimal;
      case Outcome::kInfeasible: return Result::kInfeasible;
      case Outcome::kUnbounded: return Result::kUnbounded;
      default: return Result::kIterationLimit;
    }
  }

  VarStatus default_status(int j) const {
    const double lo = lo_[static_cast<std::size_t>(j)];
    const double up = up_[static_cast<std::size_t>(j)];
    if (std::isfinite(lo)) return VarStatus::kAtLower;
    if (std::isfinite(up)) return VarStatus::kAtUpper;
    return VarStatus::kAtZero;
  }

  bool is_fixed(int j) const { return lo_[static_cast<std::size_t>(j)] == up_[static_cast<std::size_t>(j)]; }

  // Nonbasic variables sit exactly at the bound named by their status.
  void fix_nonbasic_values() {
    for (int j = 0; j < total_; ++j) {
      auto& st = status_[static_cast<std::size_t>(j)];
      if (st == VarStatus::kBasic) continue;
      const double lo = lo_[static_cast<std::size_t>(j)];
      const double up = up_[static_cast<std::size_t>(j)];
      if (st == VarStatus::kAtLower && !std::isfinite(lo)) st = default_status(j);
      if (st == VarStatus::kAtUpper && !std::isfinite(up)) st = default_status(j);
      if (st == VarStatus::kAtZero && (std::isfinite(lo) || std::isfinite(up))) st = default_status(j);
      switch (st) {
        case VarStatus::kAtLower: x_[static_cast<std::size_t>(j)] = lo; break;
        case VarStatus::kAtUpper: x_[static_cast<std::size_t>(j)] = up; break;
        default: x_[static_cast<std::size_t>(j)] = 0.0; break;
      }
    }
  }

  template <class Fn>
  void for_column(int j, Fn&& fn) const {
    if (j < n_) {
      for (int e = cstart_[static_cast<std::size_t>(j)]; e < cstart_[static_cast<std::size_t>(j) + 1]; ++e) {
        fn(crow_[static_cast<std::size_t>(e)], cval_[static_cast<std::size_t>(e)]);
      }
    } else {
      fn(j - n_, -1.0);
    }
  }

  double column_dot(int j, const std::vector<double>& v) const {
    if (j >= n_) return -v[static_cast<std::size_t>(j - n_)];
    double s = 0.0;
    for (int e = cstart_[static_cast<std::size_t>(j)]; e < cstart_[static_cast<std::size_t>(j) + 1]; ++e) {
      s += cval_[static_cast<std::size_t>(e)] * v[static_cast<std::size_t>(crow_[static_cast<std::size_t>(e)])];
    }
    return s;
  }

  void refactor() {
    std::vector<int> bad;
    std::vector<int> free_rows;
    for (int attempt = 0; attempt < 4; ++attempt) {
      factor_.factorize(
          m_,
          [&](int k, std::vector<int>& rows, std::vector<double>& vals) {
            for_column(head_[static_cast<std::size_t>(k)], [&](int i, double v) {
              rows.push_back(i);
              vals.push_back(v);
            });
          },
          bad, free_rows);
      if (bad.empty()) break;
      // Replace dependent columns by logicals of the uncovered rows.
      for (std::size_t k = 0; k < bad.size(); ++k) {
        const int pos = bad[k];
        const int leaving = head_[static_cast<std::size_t>(pos)];
        const int logical = n_ + free_rows[k];
        status_[static_cast<std::size_t>(leaving)] = default_status(leaving);
        const double lo = lo_[static_cast<std::size_t>(leaving)];
        const double up = up_[static_cast<std::size_t>(leaving)];
        const double xv = x_[static_cast<std::size_t>(leaving)];
        if (std::isfinite(lo) && std::isfinite(up)) {
          status_[static_cast<std::size_t>(leaving)] = (std::abs(xv - up) < std::abs(xv - lo)) ? VarStatus::kAtUpper : VarStatus::kAtLower;
        }
        head_[static_cast<std::size_t>(pos)] = logical;
        status_[static_cast<std::size_t>(logical)] = VarStatus::kBasic;
      }
      fix_nonbasic_values();
    }
    factor_valid_ = true;
  }

  void ensure_factor() {
    if (!factor_valid_ || factor_.eta_count() >= kRefactorInterval ||
        factor_.eta_nonzeros() > 4 * factor_.factor_nonzeros() + 4 * static_cast<std::size_t>(m_)) {
      refactor();
    }
  }

  void compute_primal() {
    std::vector<double>& rhs = work_row_;
    rhs.assign(static_cast<std::size_t>(m_), 0.0);
    for (int j = 0; j < total_; ++j) {
      if (status_[static_cast<std::size_t>(j)] == VarStatus::kBasic) continue;
      const double xv = x_[static_cast<std::size_t>(j)];
      if (xv == 0.0) continue;
      for_column(j, [&](int i, double v) { rhs[static_cast<std::size_t>(i)] -= v * xv; });
    }
    factor_.ftran(rhs);
    for (int k = 0; k < m_; ++k) x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(k)])] = rhs[static_cast<std::size_t>(k)];
  }

  double infeasibility(int j) const {
    const double v = x_[static_cast<std::size_t>(j)];
    const double lo = lo_[static_cast<std::size_t>(j)];
    const double up = up_[static_cast<std::size_t>(j)];
    if (v < lo) return lo - v;
    if (v > up) return v - up;
    return 0.0;
  }

  double max_primal_infeasibility() const {
    double worst = 0.0;
    for (int k = 0; k < m_; ++k) worst = std::max(worst, infeasibility(head_[static_cast<std::size_t>(k)]));
    return worst;
  }

  // phase1: basic costs are the signs of bound violations; nonbasic costs 0.
  void compute_duals(bool phase1) {
    std::vector<double>& cb = work_pos_;
    cb.assign(static_cast<std::size_t>(m_), 0.0);
    for (int k = 0; k < m_; ++k) {
      const int j = head_[static_cast<std::size_t>(k)];
      if (phase1) {
        const double v = x_[static_cast<std::size_t>(j)];
        if (v < lo_[static_cast<std::size_t>(j)] - tol_.primal) cb[static_cast<std::size_t>(k)] = -1.0;
        else if (v > up_[static_cast<std::size_t>(j)] + tol_.primal) cb[static_cast<std::size_t>(k)] = 1.0;
      } else {
        cb[static_cast<std::size_t>(k)] = cost_[static_cast<std::size_t>(j)];
      }
    }
    factor_.btran(cb);
    y_ = cb;
    for (int j = 0; j < total_; ++j) {
      if (status_[static_cast<std::size_t>(j)] == VarStatus::kBasic) {
        d_[static_cast<std::size_t>(j)] = 0.0;
        continue;
      }
      const double c = phase1 ? 0.0 : cost_[static_cast<std::size_t>(j)];
      d_[static_cast<std::size_t>(j)] = c - column_dot(j, y_);
    }
  }

  double dual_infeasibility() const {
    double worst = 0.0;
    for (int j = 0; j < total_; ++j) {
      const auto st = status_[static_cast<std::size_t>(j)];
      if (st == VarStatus::kBasic || is_fixed(j)) continue;
      const double dj = d_[static_cast<std::size_t>(j)];
      if (st == VarStatus::kAtLower) worst = std::max(worst, -dj);
      else if (st == VarStatus::kAtUpper) worst = std::max(worst, dj);
      else worst = std::max(worst, std::abs(dj));
    }
    return worst;
  }

  void pivot(int r, int entering, const std::vector<double>& alpha, VarStatus leaving_status) {
    const int leaving = head_[static_cast<std::size_t>(r)];
    status_[static_cast<std::size_t>(leaving)] = leaving_status;
    x_[static_cast<std::size_t>(leaving)] = leaving_status == VarStatus::kAtUpper ? up_[static_cast<std::size_t>(leaving)]
                                         : leaving_status == VarStatus::kAtLower ? lo_[static_cast<std::size_t>(leaving)]
                                                                                 : 0.0;
    status_[static_cast<std::size_t>(entering)] = VarStatus::kBasic;
    head_[static_cast<std::size_t>(r)] = entering;
    factor_.push_eta(r, alpha);
  }

  void ftran_column(int j, std::vector<double>& out) {
    out.assign(static_cast<std::size_t>(m_), 0.0);
    for_column(j, [&](int i, double v) { out[static_cast<std::size_t>(i)] += v; });
    factor_.ftran(out);
  }

  Outcome run_primal() {
    bool bland = false;
    int stall = 0;
    double last_measure = kInf;
    std::vector<double> alpha;
    for (;;) {
      if (iterations_ >= iteration_budget_) return Outcome::kLimit;
      ensure_factor();
      compute_primal();
      double sinf = 0.0;
      for (int k = 0; k < m_; ++k) {
        const double v = infeasibility(head_[static_cast<std::size_t>(k)]);
        if (v > tol_.primal) sinf += v;
      }
      const bool phase1 = sinf > 0.0;
      compute_duals(phase1);
      const double measure = phase1 ? sinf : objective();
      if (measure < last_measure - 1e-12 * (1.0 + std::abs(measure))) {
        stall = 0;
        bland = false;
      } else if (++stall > kStallLimit) {
        bland = true;
      }
      last_measure = std::min(last_measure, measure);

      // Pricing.
      int q = -1;
      double best = 0.0;
      for (int j = 0; j < total_; ++j) {
        const auto st = status_[static_cast<std::size_t>(j)];
        if (st == VarStatus::kBasic || is_fixed(j)) continue;
        const double dj = d_[static_cast<std::size_t>(j)];
        const bool up_ok = (st != VarStatus::kAtUpper) && dj < -tol_.dual;
        const bool down_ok = (st != VarStatus::kAtLower) && dj > tol_.dual;
        if (!up_ok && !down_ok) continue;
        if (bland) {
          q = j;
          break;
        }
        if (std::abs(dj) > best) {
          best = std::abs(dj);
          q = j;
        }
      }
      if (q < 0 && phase1 && factor_.eta_count() > 0) {
        refactor();  // confirm on a fresh factorization before giving up
        continue;
      }
      if (q < 0) return phase1 ? Outcome::kInfeasible : Outcome::kOptimal;

      const double dir = d_[static_cast<std::size_t>(q)] < 0.0 ? 1.0 : -1.0;
      ftran_column(q, alpha);

      // Ratio test (two-pass Harris); basic k moves at rate -dir*alpha_k.
      auto limit = [&](int k, double slack_tol, double& ratio) -> bool {
        const int j = head_[static_cast<std::size_t>(k)];
        const double rate = -dir * alpha[static_cast<std::size_t>(k)];
        if (std::abs(rate) <= tol_.pivot) return false;
        const double v = x_[static_cast<std::size_t>(j)];
        const double lo = lo_[static_cast<std::size_t>(j)];
        const double up = up_[static_cast<std::size_t>(j)];
        if (phase1 && v < lo - tol_.primal) {
          if (rate <= 0.0) return false;
          ratio = (lo - v + slack_tol) / rate;
          return true;
        }
        if (phase1 && v > up + tol_.primal) {
          if (rate >= 0.0) return false;
          ratio = (up - v - slack_tol) / rate;
          return true;
        }
        if (rate < 0.0) {
          if (!std::isfinite(lo)) return false;
          ratio = (v - lo + slack_tol) / -rate;
        } else {
          if (!std::isfinite(up)) return false;
          ratio = (up - v + slack_tol) / rate;
        }
        ratio = std::max(ratio, 0.0);
        return true;
      };

      double theta_max = kInf;
      for (int k = 0; k < m_; ++k) {
        double ratio;
        if (limit(k, tol_.primal, ratio)) theta_max = std::min(theta_max, ratio);
      }
      const double range = up_[static_cast<std::size_t>(q)] - lo_[static_cast<std::size_t>(q)];
      int r = -1;
      double theta = kInf;
      if (std::isfinite(theta_max)) {
        double best_rate = 0.0;
        for (int k = 0; k < m_; ++k) {
          double ratio;
          if (!limit(k, 0.0, ratio) || ratio > theta_max) continue;
          const double rate = std::abs(alpha[static_cast<std::size_t>(k)]);
          const bool better = bland ? (r < 0 || head_[static_cast<std::size_t>(k)] < head_[static_cast<std::size_t>(r)])
                                    : rate > best_rate;
          if (better) {
            best_rate = rate;
            r = k;
            theta = ratio;
          }
        }
      }
      if (std::isfinite(range) && range <= theta) {
        // Bound flip of the entering variable.
        auto& st = status_[static_cast<std::size_t>(q)];
        st = (dir > 0.0) ? VarStatus::kAtUpper : VarStatus::kAtLower;
        x_[static_cast<std::size_t>(q)] = (dir > 0.0) ? up_[static_cast<std::size_t>(q)] : lo_[static_cast<std::size_t>(q)];
        ++iterations_;
        continue;
      }
      if (r < 0 && factor_.eta_count() > 0) {
        refactor();
        continue;
      }
      if (r < 0) {
        if (phase1) return Outcome::kInfeasible;  // cannot happen with exact arithmetic
        return Outcome::kUnbounded;
      }
      const int leaving = head_[static_cast<std::size_t>(r)];
      const double rate = -dir * alpha[static_cast<std::size_t>(r)];
      const double v = x_[static_cast<std::size_t>(leaving)];
      VarStatus leave_status;
      if (phase1 && v < lo_[static_cast<std::size_t>(leaving)] - tol_.primal) {
        leave_status = VarStatus::kAtLower;
      } else if (phase1 && v > up_[static_cast<std::size_t>(leaving)] + tol_.primal) {
        leave_status = VarStatus::kAtUpper;
      } else {
        leave_status = rate < 0.0 ? VarStatus::kAtLower : VarStatus::kAtUpper;
      }
      if (!std::isfinite(leave_status == VarStatus::kAtLower ? lo_[static_cast<std::size_t>(leaving)] : up_[static_cast<std::size_t>(leaving)])) {
        leave_status = VarStatus::kAtZero;  // free variable leaving at zero
      }
      x_[static_cast<std::size_t>(q)] += dir * std::max(theta, 0.0);
      pivot(r, q, alpha, leave_status);
      ++iterations_;
    }
  }

  Outcome run_dual() {
    bool bland = false;
    int stall = 0;
    double last_objective = -kInf;
    std::vector<double> rho;
    std::vector<double> row_alpha(static_cast<std::size_t>(total_), 0.0);
    std::vector<double> alpha;
    for (;;) {
      if (iterations_ >= iteration_budget_) return Outcome::kLimit;
      ensure_factor();
      compute_primal();
      compute_duals(false);
      if (dual_infeasibility() > 1e-7) return Outcome::kNotDualFeasible;
      const double z = objective();
      if (z > last_objective + 1e-12 * (1.0 + std::abs(z))) {
        stall = 0;
        bland = false;
        last_objective = z;
      } else if (++stall > kStallLimit) {
        bland = true;
      }

      int r = -1;
      double worst = tol_.primal;
      for (int k = 0; k < m_; ++k) {
        const int j = head_[static_cast<std::size_t>(k)];
        const double inf = infeasibility(j);
        if (inf <= tol_.primal) continue;
        if (bland) {
          if (r < 0 || j < head_[static_cast<std::size_t>(r)]) r = k;
        } else if (inf > worst) {
          worst = inf;
          r = k;
        }
      }
      if (r < 0) return Outcome::kOptimal;

      const int leaving = head_[static_cast<std::size_t>(r)];
      const bool increase = x_[static_cast<std::size_t>(leaving)] < lo_[static_cast<std::size_t>(leaving)];
      rho.assign(static_cast<std::size_t>(m_), 0.0);
      rho[static_cast<std::size_t>(r)] = 1.0;
      factor_.btran(rho);

      // Candidates: moving j in its feasible direction must push x_leaving
      // toward the violated bound. x_B row r changes by -alpha_rj * delta_j.
      auto eligible = [&](int j, double a) -> bool {
        const auto st = status_[static_cast<std::size_t>(j)];
        if (st == VarStatus::kBasic || is_fixed(j) || std::abs(a) <= tol_.pivot) return false;
        const bool can_up = st != VarStatus::kAtUpper;
        const bool can_down = st != VarStatus::kAtLower;
        if (increase) return (can_up && a < 0.0) || (can_down && a > 0.0);
        return (can_up && a > 0.0) || (can_down && a < 0.0);
      };
      double theta_max = kInf;
      for (int j = 0; j < total_; ++j) {
        if (status_[static_cast<std::size_t>(j)] == VarStatus::kBasic) continue;
        const double a = column_dot(j, rho);
        row_alpha[static_cast<std::size_t>(j)] = a;
        if (!eligible(j, a)) continue;
        theta_max = std::min(theta_max, (std::abs(d_[static_cast<std::size_t>(j)]) + tol_.dual) / std::abs(a));
      }
      if (!std::isfinite(theta_max)) {
        if (factor_.eta_count() == 0) return Outcome::kInfeasible;
        refactor();
        continue;
      }
      int q = -1;
      double best_a = 0.0;
      for (int j = 0; j < total_; ++j) {
        if (status_[static_cast<std::size_t>(j)] == VarStatus::kBasic) continue;
        const double a = row_alpha[static_cast<std::size_t>(j)];
        if (!eligible(j, a)) continue;
        const double ratio = std::abs(d_[static_cast<std::size_t>(j)]) / std::abs(a);
        if (ratio > theta_max) continue;
        if (bland ? q < 0 : std::abs(a) > best_a) {
          best_a = std::abs(a);
          q = j;
          if (bland) break;
        }
      }
      if (q < 0) {
        if (factor_.eta_count() == 0) return Outcome::kInfeasible;
        refactor();
        continue;
      }
      ftran_column(q, alpha);
      const double a_col = alpha[static_cast<std::size_t>(r)];
      const double a_row = row_alpha[static_cast<std::size_t>(q)];
      if (std::abs(a_col) <= tol_.pivot ||
          (factor_.eta_count() > 0 && std::abs(a_col - a_row) > 1e-7 * (1.0 + std::abs(a_col)))) {
        factor_valid_ = false;  // numerical drift; refactor and retry
        ++iterations_;
        continue;
      }
      pivot(r, q, alpha, increase ? VarStatus::kAtLower : VarStatus::kAtUpper);
      ++iterations_;
    }
  }

  const LinearProgram* lp_;
  int m_ = 0;
  int n_ = 0;
  int total_ = 0;
  std::vector<int> cstart_;
  std::vector<int> crow_;
  std::vector<double> cval_;
  std::vector<double> cost_;
  std::vector<double> lo0_, up0_;
  std::vector<double> lo_, up_;
  std::vector<double> x_;
  std::vector<VarStatus> status_;
  std::vector<int> head_;
  std::vector<double> y_;
  std::vector<double> d_;
  std::vector<double> work_row_;
  std::vector<double> work_pos_;
  detail::BasisFactor factor_;
  bool factor_valid_ = false;
  SimplexTolerances tol_;
  long iterations_ = 0;
  long iteration_budget_ = 0;
};

// Normalizes raw row prices into the Solution sign convention.
inline std::vector<double> normalized_duals(const LinearProgram& lp, const std::vector<double>& y) {
  std::vector<double> out(y.size());
  for (int i = 0; i < lp.num_constraints(); ++i) {
    const double v = y[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = lp.constraint(i).sense == Sense::kLessEqual ? -v : v;
    if (out[static_cast<std::size_t>(i)] == 0.0) out[static_cast<std::size_t>(i)] = 0.0;  // no -0
  }
  return out;
}

inline Solution solve_lp(const LinearProgram& lp) {
  lp.validate();
  Solution sol;
  for (const Variable& v : lp.variables()) {
    if (v.lower > v.upper) return sol;
  }
  Simplex sx(lp);
  const auto r = sx.solve(false);
  sol.iterations = sx.iterations();
  switch (r) {
    case Simplex::Result::kOptimal: sol.status = SolveStatus::kOptimal; break;
    case Simplex::Result::kInfeasible: sol.status = SolveStatus::kInfeasible; return sol;
    case Simplex::Result::kUnbounded: sol.status = SolveStatus::kUnbounded; return sol;
    case Simplex::Result::kIterationLimit: sol.status = SolveStatus::kIterationLimit; return sol;
  }
  sol.values = sx.primal_values();
  sol.objective_value = sx.objective();
  sol.duals = normalized_duals(lp, sx.row_prices());
  sol.reduced_costs = sx.reduced_costs();
  return sol;
}

}  // namespace clearing
