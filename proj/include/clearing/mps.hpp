#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "clearing/lp.hpp"

namespace clearing {

// Fixed-column MPS. Model names are often longer than the 8-character name
// fields, so rows and columns get positional names (R0000001, C0000001); the
// original names are listed in leading comment lines.
inline void write_mps(std::ostream& os, const LinearProgram& lp, const std::string& name = "CLEARING") {
  auto row_name = [](int i) { return fmt::format("R{:07d}", i + 1); };
  auto col_name = [](int j) { return fmt::format("C{:07d}", j + 1); };
  auto num = [](double v) {
    std::string s = fmt::format("{:.12g}", v);
    if (s.size() > 12) s = fmt::format("{:.6e}", v);
    return s;
  };

  for (int i = 0; i < lp.num_constraints(); ++i) os << "* " << row_name(i) << ' ' << lp.constraint(i).name << '\n';
  for (int j = 0; j < lp.num_variables(); ++j) os << "* " << col_name(j) << ' ' << lp.variable(j).name << '\n';

  os << fmt::format("{:<14}{}\n", "NAME", name.substr(0, 8));
  os << "ROWS\n";
  os << " N  COST\n";
  for (int i = 0; i < lp.num_constraints(); ++i) {
    const char* t = "L";
    if (lp.constraint(i).sense == Sense::kEqual) t = "E";
    if (lp.constraint(i).sense == Sense::kGreaterEqual) t = "G";
    os << fmt::format(" {:<2} {}\n", t, row_name(i));
  }

  std::vector<std::vector<std::pair<int, double>>> cols(static_cast<std::size_t>(lp.num_variables()));
  for (int i = 0; i < lp.num_constraints(); ++i) {
    for (const Term& t : lp.constraint(i).terms) cols[static_cast<std::size_t>(t.var)].emplace_back(i, t.coef);
  }

  os << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (int j = 0; j < lp.num_variables(); ++j) {
    const bool is_int = lp.variable(j).integer;
    if (is_int != in_int) {
      os << fmt::format("    {:<8}  {:<8}  {:<12}   {}\n", fmt::format("M{:07d}", ++marker), "'MARKER'", "",
                        is_int ? "'INTORG'" : "'INTEND'");
      in_int = is_int;
    }
    std::vector<std::pair<std::string, double>> entries;
    if (lp.cost(j) != 0.0) entries.emplace_back("COST", lp.cost(j));
    for (auto [i, a] : cols[static_cast<std::size_t>(j)]) entries.emplace_back(row_name(i), a);
    if (entries.empty()) entries.emplace_back("COST", 0.0);  // keep the column declared
    for (const auto& [r, a] : entries) {
      os << fmt::format("    {:<8}  {:<8}  {:>12}\n", col_name(j), r, num(a));
    }
  }
  if (in_int) {
    os << fmt::format("    {:<8}  {:<8}  {:<12}   {}\n", fmt::format("M{:07d}", ++marker), "'MARKER'", "", "'INTEND'");
  }

  os << "RHS\n";
  if (lp.objective_constant() != 0.0) {
    os << fmt::format("    {:<8}  {:<8}  {:>12}\n", "RHS", "COST", num(-lp.objective_constant()));
  }
  for (int i = 0; i < lp.num_constraints(); ++i) {
    if (lp.constraint(i).rhs != 0.0) {
      os << fmt::format("    {:<8}  {:<8}  {:>12}\n", "RHS", row_name(i), num(lp.constraint(i).rhs));
    }
  }

  os << "BOUNDS\n";
  for (int j = 0; j < lp.num_variables(); ++j) {
    const Variable& v = lp.variable(j);
    const std::string c = col_name(j);
    auto line = [&](const char* type, double value) {
      os << fmt::format(" {:<2} {:<8}  {:<8}  {:>12}\n", type, "BND", c, num(value));
    };
    if (v.integer && v.lower == 0.0 && v.upper == 1.0) {
      line("BV", 1.0);
      continue;
    }
    if (v.lower == v.upper) {
      line("FX", v.lower);
      continue;
    }
    if (!std::isfinite(v.lower) && !std::isfinite(v.upper)) {
      os << fmt::format(" {:<2} {:<8}  {}\n", "FR", "BND", c);
      continue;
    }
    if (!std::isfinite(v.lower)) os << fmt::format(" {:<2} {:<8}  {}\n", "MI", "BND", c);
    else if (v.lower != 0.0) line("LO", v.lower);
    if (std::isfinite(v.upper)) line("UP", v.upper);
  }
  os << "ENDATA\n";
}

}  // namespace clearing
