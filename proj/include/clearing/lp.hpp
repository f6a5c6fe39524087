#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "clearing/errors.hpp"

namespace clearing {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense : std::uint8_t { kLessEqual, kEqual, kGreaterEqual };

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  bool integer = false;
};

struct Term {
  int var;
  double coef;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;  // merged, one entry per variable
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
};

// A minimization problem: min c'x + c0  s.t. rows, bounds, integrality.
class LinearProgram {
 public:
  int add_variable(std::string name, double lower, double upper, bool integer = false,
                   double cost = 0.0) {
    const int index = static_cast<int>(vars_.size());
    if (!var_index_.emplace(name, index).second) {
      throw InternalError("duplicate variable name '" + name + "'");
    }
    vars_.push_back({std::move(name), lower, upper, integer});
    cost_.push_back(cost);
    return index;
  }

  int add_binary(std::string name, double cost = 0.0) {
    return add_variable(std::move(name), 0.0, 1.0, true, cost);
  }

  // Duplicate references to a variable are summed; exact zeros are dropped.
  int add_constraint(std::string name, std::vector<Term> terms, Sense sense, double rhs) {
    const int index = static_cast<int>(rows_.size());
    if (!row_index_.emplace(name, index).second) {
      throw InternalError("duplicate constraint name '" + name + "'");
    }
    std::sort(terms.begin(), terms.end(),
              [](const Term& a, const Term& b) { return a.var < b.var; });
    std::vector<Term> merged;
    merged.reserve(terms.size());
    for (const Term& t : terms) {
      if (!merged.empty() && merged.back().var == t.var) {
        merged.back().coef += t.coef;
      } else {
        merged.push_back(t);
      }
    }
    std::erase_if(merged, [](const Term& t) { return t.coef == 0.0; });
    rows_.push_back({std::move(name), std::move(merged), sense, rhs});
    return index;
  }

  void set_cost(int var, double c) { cost_.at(static_cast<std::size_t>(var)) = c; }
  void add_cost(int var, double c) { cost_.at(static_cast<std::size_t>(var)) += c; }
  void set_objective_constant(double c) { constant_ = c; }
  void add_objective_constant(double c) { constant_ += c; }

  void set_bounds(int var, double lower, double upper) {
    auto& v = vars_.at(static_cast<std::size_t>(var));
    v.lower = lower;
    v.upper = upper;
  }
  void set_rhs(int row, double rhs) { rows_.at(static_cast<std::size_t>(row)).rhs = rhs; }
  void set_integer(int var, bool integer) {
    vars_.at(static_cast<std::size_t>(var)).integer = integer;
  }

  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_constraints() const { return static_cast<int>(rows_.size()); }
  const Variable& variable(int j) const { return vars_[static_cast<std::size_t>(j)]; }
  const Constraint& constraint(int i) const { return rows_[static_cast<std::size_t>(i)]; }
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }
  const std::vector<double>& costs() const { return cost_; }
  double cost(int j) const { return cost_[static_cast<std::size_t>(j)]; }
  double objective_constant() const { return constant_; }

  int num_integer_variables() const {
    return static_cast<int>(
        std::count_if(vars_.begin(), vars_.end(), [](const Variable& v) { return v.integer; }));
  }

  std::optional<int> find_variable(std::string_view name) const {
    auto it = var_index_.find(std::string(name));
    if (it == var_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<int> find_constraint(std::string_view name) const {
    auto it = row_index_.find(std::string(name));
    if (it == row_index_.end()) return std::nullopt;
    return it->second;
  }

  double objective_at(const std::vector<double>& x) const {
    double z = constant_;
    for (std::size_t j = 0; j < cost_.size(); ++j) z += cost_[j] * x[j];
    return z;
  }

  double row_activity(int i, const std::vector<double>& x) const {
    double s = 0.0;
    for (const Term& t : rows_[static_cast<std::size_t>(i)].terms) {
      s += t.coef * x[static_cast<std::size_t>(t.var)];
    }
    return s;
  }

  // Largest violation of any row or bound at x.
  double max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      worst = std::max({worst, vars_[j].lower - x[j], x[j] - vars_[j].upper});
    }
    for (int i = 0; i < num_constraints(); ++i) {
      const double a = row_activity(i, x);
      const Constraint& r = rows_[static_cast<std::size_t>(i)];
      switch (r.sense) {
        case Sense::kLessEqual: worst = std::max(worst, a - r.rhs); break;
        case Sense::kGreaterEqual: worst = std::max(worst, r.rhs - a); break;
        case Sense::kEqual: worst = std::max(worst, std::abs(a - r.rhs)); break;
      }
    }
    return worst;
  }

  // Throws InternalError when a structural invariant does not hold.
  void validate() const {
    const int n = num_variables();
    for (const Variable& v : vars_) {
      if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper) {
        throw InternalError("variable '" + v.name + "' has inconsistent bounds");
      }
    }
    for (double c : cost_) {
      if (!std::isfinite(c)) throw InternalError("non-finite objective coefficient");
    }
    for (const Constraint& r : rows_) {
      if (!std::isfinite(r.rhs)) throw InternalError("row '" + r.name + "' has non-finite rhs");
      for (const Term& t : r.terms) {
        if (t.var < 0 || t.var >= n) {
          throw InternalError("row '" + r.name + "' references an undeclared variable");
        }
        if (!std::isfinite(t.coef)) {
          throw InternalError("row '" + r.name + "' has a non-finite coefficient");
        }
      }
    }
  }

 private:
  std::vector<Variable> vars_;
  std::vector<double> cost_;
  double constant_ = 0.0;
  std::vector<Constraint> rows_;
  std::unordered_map<std::string, int> var_index_;
  std::unordered_map<std::string, int> row_index_;
};

enum class SolveStatus : std::uint8_t { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "Optimal";
    case SolveStatus::kInfeasible: return "Infeasible";
    case SolveStatus::kUnbounded: return "Unbounded";
    case SolveStatus::kIterationLimit: return "IterationLimit";
  }
  return "?";
}

// Row multipliers follow one convention: for an inequality written g(x) <= 0
// (a <= row is a'x - b <= 0, a >= row is b - a'x <= 0) the reported multiplier
// is non-negative and enters the Lagrangian as +mu*g. Equality rows report
// d(objective)/d(rhs).
struct Solution {
  SolveStatus status = SolveStatus::kInfeasible;
  double objective_value = 0.0;
  std::vector<double> values;
  std::vector<double> duals;           // per constraint; empty for MIP solves
  std::vector<double> reduced_costs;   // per variable; empty for MIP solves
  long iterations = 0;
  long nodes = 0;
  bool has_values() const { return !values.empty(); }
  bool has_duals() const { return !duals.empty(); }

  double value(const LinearProgram& lp, std::string_view name) const {
    auto j = lp.find_variable(name);
    if (!j) throw InternalError("unknown variable '" + std::string(name) + "'");
    return values.at(static_cast<std::size_t>(*j));
  }
  double dual(const LinearProgram& lp, std::string_view name) const {
    auto i = lp.find_constraint(name);
    if (!i) throw InternalError("unknown constraint '" + std::string(name) + "'");
    return duals.at(static_cast<std::size_t>(*i));
  }
};

struct MipOptions {
  double absolute_gap = 1e-6;
  double relative_gap = 0.0;
  long node_limit = 200000;
  double integrality_tolerance = 1e-6;
  int dive_frequency = 50;  // nodes between diving heuristics; 0 disables
};

}  // namespace clearing
