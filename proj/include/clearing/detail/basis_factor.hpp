#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace clearing::detail {

// Sparse LU factorization of a simplex basis with Markowitz pivoting and a
// product-form eta file for rank-one basis updates.
//
// Vectors passed to ftran() are indexed by row on input and by basis position
// on output; btran() goes the other way.
class BasisFactor {
 public:
  struct Entry {
    int index;
    double value;
  };

  // `column(k, rows, vals)` fills the nonzeros of basis position k. On return
  // `bad_positions` and `free_rows` have equal length; a non-empty result means
  // the basis was singular and the caller must swap in logicals and refactor.
  template <class ColumnFn>
  void factorize(int m, ColumnFn&& column, std::vector<int>& bad_positions,
                 std::vector<int>& free_rows) {
    m_ = m;
    prow_.clear();
    pcol_.clear();
    diag_.clear();
    l_start_.assign(1, 0);
    l_.clear();
    u_start_.assign(1, 0);
    u_.clear();
    clear_etas();
    bad_positions.clear();
    free_rows.clear();

    std::vector<std::vector<Entry>> rows(static_cast<std::size_t>(m));
    std::vector<std::vector<int>> cols(static_cast<std::size_t>(m));
    std::vector<int> ri;
    std::vector<double> rv;
    for (int k = 0; k < m; ++k) {
      ri.clear();
      rv.clear();
      column(k, ri, rv);
      for (std::size_t e = 0; e < ri.size(); ++e) {
        if (rv[e] == 0.0) continue;
        rows[static_cast<std::size_t>(ri[e])].push_back({k, rv[e]});
        cols[static_cast<std::size_t>(k)].push_back(ri[e]);
      }
    }

    std::vector<char> row_done(static_cast<std::size_t>(m), 0);
    std::vector<char> col_done(static_cast<std::size_t>(m), 0);
    std::vector<int> mark(static_cast<std::size_t>(m), -1);

    auto value_at = [&](int i, int c) -> double {
      for (const Entry& e : rows[static_cast<std::size_t>(i)]) {
        if (e.index == c) return e.value;
      }
      return 0.0;
    };
    auto erase_from_col = [&](int c, int i) {
      auto& v = cols[static_cast<std::size_t>(c)];
      auto it = std::find(v.begin(), v.end(), i);
      if (it != v.end()) {
        *it = v.back();
        v.pop_back();
      }
    };
    auto erase_from_row = [&](int i, int c) {
      auto& v = rows[static_cast<std::size_t>(i)];
      for (std::size_t e = 0; e < v.size(); ++e) {
        if (v[e].index == c) {
          v[e] = v.back();
          v.pop_back();
          return;
        }
      }
    };

    std::vector<int> col_stack;
    std::vector<int> row_stack;
    std::vector<int> active;
    for (int k = 0; k < m; ++k) {
      if (cols[static_cast<std::size_t>(k)].size() == 1) col_stack.push_back(k);
      if (rows[static_cast<std::size_t>(k)].size() == 1) row_stack.push_back(k);
      active.push_back(k);
    }
    std::reverse(col_stack.begin(), col_stack.end());
    std::reverse(row_stack.begin(), row_stack.end());

    int remaining = m;
    auto pivot_on = [&](int p, int q, double piv) {
      prow_.push_back(p);
      pcol_.push_back(q);
      diag_.push_back(piv);
      auto& prow_entries = rows[static_cast<std::size_t>(p)];
      for (const Entry& e : prow_entries) {
        if (e.index != q) u_.push_back(e);
        auto& c = cols[static_cast<std::size_t>(e.index)];
        erase_from_col(e.index, p);
        if (e.index != q && c.size() == 1) col_stack.push_back(e.index);
      }
      u_start_.push_back(static_cast<int>(u_.size()));

      const std::vector<int> targets = cols[static_cast<std::size_t>(q)];
      for (int i : targets) {
        auto& row = rows[static_cast<std::size_t>(i)];
        const double a = value_at(i, q);
        erase_from_row(i, q);
        if (a != 0.0) {
          const double l = a / piv;
          l_.push_back({i, l});
          for (std::size_t e = 0; e < row.size(); ++e) mark[static_cast<std::size_t>(row[e].index)] = static_cast<int>(e);
          for (const Entry& pe : prow_entries) {
            if (pe.index == q) continue;
            const int slot = mark[static_cast<std::size_t>(pe.index)];
            if (slot >= 0) {
              row[static_cast<std::size_t>(slot)].value -= l * pe.value;
            } else {
              row.push_back({pe.index, -l * pe.value});
              cols[static_cast<std::size_t>(pe.index)].push_back(i);
            }
          }
          for (const Entry& e : row) mark[static_cast<std::size_t>(e.index)] = -1;
        }
        if (row.size() == 1) row_stack.push_back(i);
      }
      l_start_.push_back(static_cast<int>(l_.size()));
      cols[static_cast<std::size_t>(q)].clear();
      prow_entries.clear();
      row_done[static_cast<std::size_t>(p)] = 1;
      col_done[static_cast<std::size_t>(q)] = 1;
      --remaining;
    };
    auto column_max = [&](int c) {
      double cmax = 0.0;
      for (int i : cols[static_cast<std::size_t>(c)]) cmax = std::max(cmax, std::abs(value_at(i, c)));
      return cmax;
    };

    while (remaining > 0) {
      // Singletons first: they pivot without fill-in.
      if (!col_stack.empty()) {
        const int c = col_stack.back();
        col_stack.pop_back();
        if (col_done[static_cast<std::size_t>(c)] || cols[static_cast<std::size_t>(c)].size() != 1) continue;
        const int i = cols[static_cast<std::size_t>(c)][0];
        const double v = value_at(i, c);
        if (std::abs(v) < kSingularTol) continue;
        pivot_on(i, c, v);
        continue;
      }
      if (!row_stack.empty()) {
        const int i = row_stack.back();
        row_stack.pop_back();
        if (row_done[static_cast<std::size_t>(i)] || rows[static_cast<std::size_t>(i)].size() != 1) continue;
        const int c = rows[static_cast<std::size_t>(i)][0].index;
        const double v = rows[static_cast<std::size_t>(i)][0].value;
        const double cmax = column_max(c);
        if (cmax < kSingularTol || std::abs(v) < kThreshold * cmax) continue;
        pivot_on(i, c, v);
        continue;
      }

      std::erase_if(active, [&](int c) { return col_done[static_cast<std::size_t>(c)] != 0; });
      // Pivot search: columns with the fewest active entries, plus row singletons.
      int min_count = std::numeric_limits<int>::max();
      for (int c : active) {
        min_count = std::min(min_count, static_cast<int>(cols[static_cast<std::size_t>(c)].size()));
      }
      if (min_count == 0) {
        for (int c : active) {
          if (!col_done[static_cast<std::size_t>(c)] && cols[static_cast<std::size_t>(c)].empty()) {
            col_done[static_cast<std::size_t>(c)] = 1;
            bad_positions.push_back(c);
            --remaining;
          }
        }
        continue;
      }

      int best_r = -1;
      int best_c = -1;
      double best_v = 0.0;
      long best_cost = std::numeric_limits<long>::max();
      std::vector<int> zero_cols;

      auto consider_column = [&](int c, int only_row) {
        const auto& pattern = cols[static_cast<std::size_t>(c)];
        const double cmax = column_max(c);
        if (cmax < kSingularTol) {
          zero_cols.push_back(c);
          return;
        }
        const long ccount = static_cast<long>(pattern.size()) - 1;
        for (int i : pattern) {
          if (only_row >= 0 && i != only_row) continue;
          const double v = value_at(i, c);
          if (std::abs(v) < kThreshold * cmax) continue;
          const long cost = (static_cast<long>(rows[static_cast<std::size_t>(i)].size()) - 1) * ccount;
          if (cost < best_cost || (cost == best_cost && std::abs(v) > std::abs(best_v))) {
            best_cost = cost;
            best_r = i;
            best_c = c;
            best_v = v;
          }
        }
      };

      int examined = 0;
      for (int c : active) {
        if (examined >= kSearchColumns) break;
        if (static_cast<int>(cols[static_cast<std::size_t>(c)].size()) != min_count) continue;
        consider_column(c, -1);
        ++examined;
        if (best_cost == 0) break;
      }
      if (best_cost != 0 && min_count > 1) {
        for (int i = 0; i < m; ++i) {
          if (row_done[static_cast<std::size_t>(i)]) continue;
          if (rows[static_cast<std::size_t>(i)].size() != 1) continue;
          consider_column(rows[static_cast<std::size_t>(i)][0].index, i);
          if (best_cost == 0) break;
        }
      }
      if (best_r < 0 && best_cost == std::numeric_limits<long>::max()) {
        // Widen the search to every active column before declaring trouble.
        for (int c : active) consider_column(c, -1);
      }
      if (best_r < 0) {
        // Every remaining column is numerically zero.
        std::sort(zero_cols.begin(), zero_cols.end());
        zero_cols.erase(std::unique(zero_cols.begin(), zero_cols.end()), zero_cols.end());
        for (int c : zero_cols) {
          if (col_done[static_cast<std::size_t>(c)]) continue;
          for (int i : cols[static_cast<std::size_t>(c)]) erase_from_row(i, c);
          cols[static_cast<std::size_t>(c)].clear();
          col_done[static_cast<std::size_t>(c)] = 1;
          bad_positions.push_back(c);
          --remaining;
        }
        continue;
      }
      pivot_on(best_r, best_c, best_v);
    }

    for (int i = 0; i < m; ++i) {
      if (!row_done[static_cast<std::size_t>(i)]) free_rows.push_back(i);
    }
    std::sort(bad_positions.begin(), bad_positions.end());
    work_.assign(static_cast<std::size_t>(m), 0.0);
  }

  void ftran(std::span<double> b) const {
    const int rank = static_cast<int>(prow_.size());
    for (int k = 0; k < rank; ++k) {
      const double z = b[static_cast<std::size_t>(prow_[static_cast<std::size_t>(k)])];
      if (z == 0.0) continue;
      for (int e = l_start_[static_cast<std::size_t>(k)]; e < l_start_[static_cast<std::size_t>(k) + 1]; ++e) {
        b[static_cast<std::size_t>(l_[static_cast<std::size_t>(e)].index)] -= l_[static_cast<std::size_t>(e)].value * z;
      }
    }
    std::vector<double>& x = work_;
    std::fill(x.begin(), x.end(), 0.0);
    for (int k = rank - 1; k >= 0; --k) {
      double s = b[static_cast<std::size_t>(prow_[static_cast<std::size_t>(k)])];
      for (int e = u_start_[static_cast<std::size_t>(k)]; e < u_start_[static_cast<std::size_t>(k) + 1]; ++e) {
        s -= u_[static_cast<std::size_t>(e)].value * x[static_cast<std::size_t>(u_[static_cast<std::size_t>(e)].index)];
      }
      x[static_cast<std::size_t>(pcol_[static_cast<std::size_t>(k)])] = s / diag_[static_cast<std::size_t>(k)];
    }
    for (const Eta& eta : etas_) {
      const double xr = x[static_cast<std::size_t>(eta.r)] / eta.pivot;
      x[static_cast<std::size_t>(eta.r)] = xr;
      if (xr == 0.0) continue;
      for (int e = eta.start; e < eta.end; ++e) {
        x[static_cast<std::size_t>(eta_entries_[static_cast<std::size_t>(e)].index)] -= eta_entries_[static_cast<std::size_t>(e)].value * xr;
      }
    }
    std::copy(x.begin(), x.end(), b.begin());
  }

  void btran(std::span<double> c) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = c[static_cast<std::size_t>(it->r)];
      for (int e = it->start; e < it->end; ++e) {
        s -= eta_entries_[static_cast<std::size_t>(e)].value * c[static_cast<std::size_t>(eta_entries_[static_cast<std::size_t>(e)].index)];
      }
      c[static_cast<std::size_t>(it->r)] = s / it->pivot;
    }
    const int rank = static_cast<int>(prow_.size());
    std::vector<double>& v = work_;
    for (int k = 0; k < rank; ++k) {
      const double vk = c[static_cast<std::size_t>(pcol_[static_cast<std::size_t>(k)])] / diag_[static_cast<std::size_t>(k)];
      v[static_cast<std::size_t>(k)] = vk;
      if (vk == 0.0) continue;
      for (int e = u_start_[static_cast<std::size_t>(k)]; e < u_start_[static_cast<std::size_t>(k) + 1]; ++e) {
        c[static_cast<std::size_t>(u_[static_cast<std::size_t>(e)].index)] -= u_[static_cast<std::size_t>(e)].value * vk;
      }
    }
    std::fill(c.begin(), c.end(), 0.0);
    for (int k = rank - 1; k >= 0; --k) {
      double s = v[static_cast<std::size_t>(k)];
      for (int e = l_start_[static_cast<std::size_t>(k)]; e < l_start_[static_cast<std::size_t>(k) + 1]; ++e) {
        s -= l_[static_cast<std::size_t>(e)].value * c[static_cast<std::size_t>(l_[static_cast<std::size_t>(e)].index)];
      }
      c[static_cast<std::size_t>(prow_[static_cast<std::size_t>(k)])] = s;
    }
  }

  // Basis position r is replaced by a column whose ftran image is alpha.
  void push_eta(int r, std::span<const double> alpha) {
    Eta eta{r, alpha[static_cast<std::size_t>(r)], static_cast<int>(eta_entries_.size()), 0};
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (static_cast<int>(i) == r) continue;
      if (std::abs(alpha[i]) > kDropTol) eta_entries_.push_back({static_cast<int>(i), alpha[i]});
    }
    eta.end = static_cast<int>(eta_entries_.size());
    etas_.push_back(eta);
  }

  int eta_count() const { return static_cast<int>(etas_.size()); }
  std::size_t eta_nonzeros() const { return eta_entries_.size(); }
  std::size_t factor_nonzeros() const { return l_.size() + u_.size() + diag_.size(); }

 private:
  struct Eta {
    int r;
    double pivot;
    int start;
    int end;
  };

  void clear_etas() {
    etas_.clear();
    eta_entries_.clear();
  }

  static constexpr double kThreshold = 0.01;
  static constexpr double kSingularTol = 1e-11;
  static constexpr double kDropTol = 1e-14;
  static constexpr int kSearchColumns = 4;

  int m_ = 0;
  std::vector<int> prow_;
  std::vector<int> pcol_;
  std::vector<double> diag_;
  std::vector<int> l_start_;
  std::vector<Entry> l_;
  std::vector<int> u_start_;
  std::vector<Entry> u_;
  std::vector<Eta> etas_;
  std::vector<Entry> eta_entries_;
  mutable std::vector<double> work_;
};

}  // namespace clearing::detail
