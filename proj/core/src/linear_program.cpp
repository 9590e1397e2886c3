#include "rio/linear_program.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace rio {
namespace {

constexpr double kPivotTol = 1e-7;  // rows are scaled to unit norm
constexpr double kReducedCostTol = 1e-9;
constexpr double kFeasTol = 1e-8;
constexpr int kDegeneratePivotLimit = 50;

// Dense tableau with an explicit basis. Column layout:
//   [0, num_cols)            structural + slack columns
//   [num_cols, total_cols)   artificials (phase 1 only)
// Row `rows` holds the active objective; column `total_cols` the rhs.
struct Tableau {
  int rows = 0;
  int cols = 0;        // structural + slack
  int total_cols = 0;  // + artificials
  std::vector<double> t;
  std::vector<int> basis;

  double& at(int r, int c) { return t[static_cast<std::size_t>(r) * (total_cols + 1) + c]; }
  double at(int r, int c) const { return t[static_cast<std::size_t>(r) * (total_cols + 1) + c]; }
  double& rhs(int r) { return at(r, total_cols); }

  void pivot(int pr, int pc) {
    const int width = total_cols + 1;
    double* prow = &t[static_cast<std::size_t>(pr) * width];
    const double inv = 1.0 / prow[pc];
    for (int c = 0; c < width; ++c) prow[c] *= inv;
    prow[pc] = 1.0;
    for (int r = 0; r <= rows; ++r) {
      if (r == pr) continue;
      double* row = &t[static_cast<std::size_t>(r) * width];
      const double factor = row[pc];
      if (factor == 0.0) continue;
      for (int c = 0; c < width; ++c) row[c] -= factor * prow[c];
      row[pc] = 0.0;
    }
    basis[pr] = pc;
  }
};

enum class PivotResult { Optimal, Unbounded, Stalled };

// Runs the simplex loop on the active objective row. `allowed` marks columns
// that may enter the basis.
PivotResult run_simplex(Tableau& tb, const std::vector<char>& allowed) {
  int degenerate_streak = 0;
  bool bland = false;
  const long iteration_cap = 200L * (tb.rows + tb.total_cols) + 2000;
  for (long iteration = 0;; ++iteration) {
    if (iteration > iteration_cap) return PivotResult::Stalled;
    int entering = -1;
    if (!bland) {
      double best = -kReducedCostTol;
      for (int c = 0; c < tb.total_cols; ++c) {
        if (!allowed[c]) continue;
        const double rc = tb.at(tb.rows, c);
        if (rc < best) {
          best = rc;
          entering = c;
        }
      }
    } else {
      for (int c = 0; c < tb.total_cols; ++c) {
        if (allowed[c] && tb.at(tb.rows, c) < -kReducedCostTol) {
          entering = c;
          break;
        }
      }
    }
    if (entering < 0) return PivotResult::Optimal;

    int leaving = -1;
    double best_ratio = 0.0;
    for (int r = 0; r < tb.rows; ++r) {
      const double a = tb.at(r, entering);
      if (a <= kPivotTol) continue;
      const double ratio = tb.rhs(r) / a;
      if (leaving < 0 || ratio < best_ratio - 1e-12 ||
          (std::abs(ratio - best_ratio) <= 1e-12 && tb.basis[r] < tb.basis[leaving])) {
        leaving = r;
        best_ratio = ratio;
      }
    }
    if (leaving < 0) return PivotResult::Unbounded;

    if (best_ratio < 1e-12) {
      if (++degenerate_streak >= kDegeneratePivotLimit) bland = true;  // latches on
    } else {
      degenerate_streak = 0;
    }
    tb.pivot(leaving, entering);
  }
}

struct Substitution {
  // x_orig[j] = offset[j] + sign[j] * z[col[j]] (+ optionally - z[neg_col[j]])
  std::vector<double> offset;
  std::vector<double> sign;
  std::vector<int> col;
  std::vector<int> neg_col;  // -1 unless the variable is free (split)
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp) {
  const int n = lp.num_vars();
  for (const LpRow& row : lp.rows) {
    if (static_cast<int>(row.coeffs.size()) != n) {
      throw std::invalid_argument("solve_lp: row dimension mismatch");
    }
    for (double v : row.coeffs) {
      if (!std::isfinite(v)) throw std::invalid_argument("solve_lp: non-finite coefficient");
    }
  }

  LpSolution out;

  // Substitute every variable by nonnegative ones. Finite upper bounds that
  // cannot be folded into the shift become explicit rows.
  Substitution sub;
  sub.offset.assign(n, 0.0);
  sub.sign.assign(n, 1.0);
  sub.col.assign(n, -1);
  sub.neg_col.assign(n, -1);
  int z_count = 0;
  struct ExtraUpper {
    int z = 0;
    double bound = 0.0;
  };
  std::vector<ExtraUpper> extra_upper;
  for (int j = 0; j < n; ++j) {
    const double lo = lp.lower[j];
    const double hi = lp.upper[j];
    if (lo > hi) {
      out.status = LpStatus::Infeasible;
      return out;
    }
    if (std::isfinite(lo)) {
      sub.offset[j] = lo;
      sub.sign[j] = 1.0;
      sub.col[j] = z_count++;
      if (std::isfinite(hi)) extra_upper.push_back({sub.col[j], hi - lo});
    } else if (std::isfinite(hi)) {
      sub.offset[j] = hi;
      sub.sign[j] = -1.0;
      sub.col[j] = z_count++;
    } else {
      sub.col[j] = z_count++;
      sub.neg_col[j] = z_count++;
    }
  }

  // Assemble rows in z-space: coeffs, relation, rhs.
  struct WorkRow {
    std::vector<double> a;
    Relation rel;
    double b;
  };
  std::vector<WorkRow> work;
  work.reserve(lp.rows.size() + extra_upper.size());
  for (const LpRow& row : lp.rows) {
    WorkRow w{std::vector<double>(z_count, 0.0), row.rel, row.rhs};
    for (int j = 0; j < n; ++j) {
      const double c = row.coeffs[j];
      if (c == 0.0) continue;
      w.b -= c * sub.offset[j];
      w.a[sub.col[j]] += c * sub.sign[j];
      if (sub.neg_col[j] >= 0) w.a[sub.neg_col[j]] -= c;
    }
    work.push_back(std::move(w));
  }
  for (const ExtraUpper& eu : extra_upper) {
    WorkRow w{std::vector<double>(z_count, 0.0), Relation::LessEq, eu.bound};
    w.a[eu.z] = 1.0;
    work.push_back(std::move(w));
  }

  // Column equilibration: polynomial-constraint columns span many orders of
  // magnitude, which destabilizes pivoting. Substituting z_j = z'_j / s_j
  // (s_j > 0, so sign bounds are preserved) rescales each column to unit max.
  std::vector<double> col_scale(z_count, 1.0);
  for (int j = 0; j < z_count; ++j) {
    double mx = 0.0;
    for (const WorkRow& w : work) mx = std::max(mx, std::abs(w.a[j]));
    if (mx > 0.0) col_scale[j] = mx;
  }
  for (WorkRow& w : work) {
    for (int j = 0; j < z_count; ++j) w.a[j] /= col_scale[j];
  }

  // Rows scaled to unit infinity norm so one pivot tolerance fits all.
  {
    std::vector<WorkRow> kept;
    kept.reserve(work.size());
    for (WorkRow& w : work) {
      double norm = 0.0;
      for (double v : w.a) norm = std::max(norm, std::abs(v));
      if (norm > 0.0) {
        const double inv = 1.0 / norm;
        for (double& v : w.a) v *= inv;
        w.b *= inv;
        kept.push_back(std::move(w));
        continue;
      }
      // 0 ~ b row: either trivially true or infeasible.
      const bool ok = (w.rel == Relation::LessEq && w.b >= -kFeasTol) ||
                      (w.rel == Relation::GreaterEq && w.b <= kFeasTol) ||
                      (w.rel == Relation::Equal && std::abs(w.b) <= kFeasTol);
      if (!ok) {
        out.status = LpStatus::Infeasible;
        return out;
      }
    }
    work = std::move(kept);
  }

  const int m = static_cast<int>(work.size());
  // Slack per inequality row.
  int slack_count = 0;
  for (const WorkRow& w : work) {
    if (w.rel != Relation::Equal) ++slack_count;
  }
  const int cols = z_count + slack_count;

  // Count artificials: rows whose slack cannot start basic.
  std::vector<int> slack_col(m, -1);
  std::vector<char> negated(m, 0);
  {
    int s = z_count;
    for (int i = 0; i < m; ++i) {
      if (work[i].rel != Relation::Equal) slack_col[i] = s++;
    }
  }
  int art_count = 0;
  std::vector<int> art_col(m, -1);
  for (int i = 0; i < m; ++i) {
    WorkRow& w = work[i];
    double slack_sign = (w.rel == Relation::LessEq) ? 1.0 : (w.rel == Relation::GreaterEq ? -1.0 : 0.0);
    if (w.b < 0.0) {
      for (double& v : w.a) v = -v;
      w.b = -w.b;
      slack_sign = -slack_sign;
      negated[i] = 1;
    }
    if (slack_sign != 1.0) art_col[i] = 1;  // placeholder, resolved below
  }
  {
    int a = cols;
    for (int i = 0; i < m; ++i) {
      if (art_col[i] == 1) {
        art_col[i] = a++;
        ++art_count;
      } else {
        art_col[i] = -1;
      }
    }
  }

  Tableau tb;
  tb.rows = m;
  tb.cols = cols;
  tb.total_cols = cols + art_count;
  tb.t.assign(static_cast<std::size_t>(m + 1) * (tb.total_cols + 1), 0.0);
  tb.basis.assign(m, -1);

  for (int i = 0; i < m; ++i) {
    const WorkRow& w = work[i];
    for (int j = 0; j < z_count; ++j) tb.at(i, j) = w.a[j];
    if (slack_col[i] >= 0) {
      double sign = (w.rel == Relation::LessEq) ? 1.0 : -1.0;
      if (negated[i]) sign = -sign;
      tb.at(i, slack_col[i]) = sign;
    }
    tb.rhs(i) = w.b;
    if (art_col[i] >= 0) {
      tb.at(i, art_col[i]) = 1.0;
      tb.basis[i] = art_col[i];
    } else {
      tb.basis[i] = slack_col[i];
    }
  }

  std::vector<char> allowed(tb.total_cols, 1);

  // Phase 1: minimize the sum of artificials, priced out over the basis.
  if (art_count > 0) {
    for (int i = 0; i < m; ++i) {
      if (art_col[i] < 0) continue;
      for (int c = 0; c <= tb.total_cols; ++c) tb.at(m, c) -= tb.at(i, c);
    }
    for (int i = 0; i < m; ++i) {
      if (art_col[i] >= 0) tb.at(m, art_col[i]) = 0.0;
    }
    // Phase 1 objective is bounded below by 0; a stall reads as infeasible.
    if (run_simplex(tb, allowed) == PivotResult::Stalled || -tb.rhs(m) > kFeasTol) {
      out.status = LpStatus::Infeasible;
      return out;
    }
    // Pivot out any artificial stuck in the basis at level zero.
    for (int i = 0; i < m; ++i) {
      if (tb.basis[i] < cols) continue;
      int pc = -1;
      for (int c = 0; c < cols; ++c) {
        if (std::abs(tb.at(i, c)) > kPivotTol) {
          pc = c;
          break;
        }
      }
      if (pc >= 0) tb.pivot(i, pc);
      // Otherwise the row is redundant; the artificial stays basic at zero.
    }
    for (int c = cols; c < tb.total_cols; ++c) allowed[c] = 0;
  }

  // Phase 2: install the real objective (in z-space) and price out the basis.
  for (int c = 0; c <= tb.total_cols; ++c) tb.at(m, c) = 0.0;
  std::vector<double> zcost(tb.total_cols, 0.0);
  for (int j = 0; j < n; ++j) {
    const double c = lp.objective[j];
    if (c == 0.0) continue;
    zcost[sub.col[j]] += c * sub.sign[j] / col_scale[sub.col[j]];
    if (sub.neg_col[j] >= 0) zcost[sub.neg_col[j]] -= c / col_scale[sub.neg_col[j]];
  }
  for (int c = 0; c < tb.total_cols; ++c) tb.at(m, c) = zcost[c];
  for (int i = 0; i < m; ++i) {
    const double cb = zcost[tb.basis[i]];
    if (cb == 0.0) continue;
    for (int c = 0; c <= tb.total_cols; ++c) tb.at(m, c) -= cb * tb.at(i, c);
  }

  // A stalled phase 2 falls through to the audit: its basis is returned only
  // if it satisfies the constraints (then merely possibly suboptimal).
  if (run_simplex(tb, allowed) == PivotResult::Unbounded) {
    out.status = LpStatus::Unbounded;
    return out;
  }

  std::vector<double> z(tb.total_cols, 0.0);
  for (int i = 0; i < m; ++i) z[tb.basis[i]] = tb.rhs(i);
  out.values.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double v = sub.offset[j] + sub.sign[j] * z[sub.col[j]] / col_scale[sub.col[j]];
    if (sub.neg_col[j] >= 0) v -= z[sub.neg_col[j]] / col_scale[sub.neg_col[j]];
    out.values[j] = v;
  }
  out.objective = 0.0;
  for (int j = 0; j < n; ++j) out.objective += lp.objective[j] * out.values[j];

  // Ill-conditioned systems can drift through the pivot tolerances and land
  // on a grossly infeasible basis; audit the result rather than trust it.
  if (max_constraint_violation(lp, out.values) > 1e-5) {
    out.status = LpStatus::Infeasible;
    out.values.clear();
    out.objective = 0.0;
    return out;
  }
  out.status = LpStatus::Optimal;
  return out;
}

double max_constraint_violation(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (const LpRow& row : lp.rows) {
    double lhs = 0.0;
    double norm = 0.0;
    for (int j = 0; j < lp.num_vars(); ++j) {
      lhs += row.coeffs[j] * x[j];
      norm = std::max(norm, std::abs(row.coeffs[j]));
    }
    double viol = 0.0;
    switch (row.rel) {
      case Relation::LessEq: viol = lhs - row.rhs; break;
      case Relation::GreaterEq: viol = row.rhs - lhs; break;
      case Relation::Equal: viol = std::abs(lhs - row.rhs); break;
    }
    worst = std::max(worst, viol / (1.0 + norm));
  }
  for (int j = 0; j < lp.num_vars(); ++j) {
    worst = std::max(worst, lp.lower[j] - x[j]);
    worst = std::max(worst, x[j] - lp.upper[j]);
  }
  return worst;
}

}  // namespace rio
