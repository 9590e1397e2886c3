#pragma once

#include <limits>
#include <vector>

namespace rio {

inline constexpr double kLpInf = std::numeric_limits<double>::infinity();

enum class Relation { LessEq, Equal, GreaterEq };

struct LpRow {
  std::vector<double> coeffs;
  Relation rel = Relation::LessEq;
  double rhs = 0.0;
};

/// min c.x subject to row constraints and per-variable box bounds.
/// Bounds may be +-infinity; variables default to free.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<LpRow> rows;
  std::vector<double> lower;  // per variable, -inf allowed
  std::vector<double> upper;  // per variable, +inf allowed

  explicit LinearProgram(int num_vars = 0) { resize(num_vars); }

  void resize(int num_vars) {
    objective.assign(num_vars, 0.0);
    lower.assign(num_vars, -kLpInf);
    upper.assign(num_vars, kLpInf);
  }

  int num_vars() const { return static_cast<int>(objective.size()); }

  void add_row(std::vector<double> coeffs, Relation rel, double rhs) {
    rows.push_back(LpRow{std::move(coeffs), rel, rhs});
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> values;
  double objective = 0.0;
};

/// Two-phase primal simplex on the dense tableau. Rows are scaled to unit
/// infinity norm before solving; pivoting is Dantzig with a switch to Bland's
/// rule after 50 consecutive degenerate pivots. Deterministic: identical
/// input yields an identical pivot path and solution. A result that fails
/// the final feasibility audit (severely ill-conditioned input) is reported
/// as infeasible rather than returned.
LpSolution solve_lp(const LinearProgram& lp);

/// Largest row-relative constraint violation of a candidate point.
double max_constraint_violation(const LinearProgram& lp, const std::vector<double>& x);

}  // namespace rio
