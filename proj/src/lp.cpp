#include "blocknas/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace blocknas {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kNumerical: return "numerical";
  }
  return "unknown";
}

namespace {

enum class PivotOutcome { kOptimal, kUnbounded, kIterationCap };

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_((rows + 1) * (cols + 1), 0.0), basis_(rows, 0) {}

  double& at(std::size_t r, std::size_t c) { return data_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  // Row `rows_` holds reduced costs; its rhs is the objective value.
  double& cost(std::size_t c) { return at(rows_, c); }
  double& value() { return at(rows_, cols_); }
  std::vector<std::size_t>& basis() { return basis_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const std::size_t w = cols_ + 1;
    double* prow = &data_[pr * w];
    const double inv = 1.0 / prow[pc];
    for (std::size_t c = 0; c < w; ++c) prow[c] *= inv;
    prow[pc] = 1.0;
    for (std::size_t r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      double* row = &data_[r * w];
      const double f = row[pc];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < w; ++c) row[c] -= f * prow[c];
      row[pc] = 0.0;
    }
    basis_[pr] = pc;
  }

  // Maximizes over columns [0, usable). Reduced costs must already be priced.
  PivotOutcome optimize(std::size_t usable, const LpOptions& opt, std::size_t& iterations) {
    std::size_t degenerate = 0;
    bool bland = false;
    const double tol = opt.tolerance;
    while (true) {
      std::size_t enter = usable;
      double best = -tol;
      for (std::size_t c = 0; c < usable; ++c) {
        const double d = cost(c);
        if (d < best) {
          enter = c;
          if (bland) break;
          best = d;
        }
      }
      if (enter == usable) return PivotOutcome::kOptimal;

      std::size_t leave = rows_;
      double ratio = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows_; ++r) {
        const double a = at(r, enter);
        if (a <= tol) continue;
        const double q = rhs(r) / a;
        if (q < ratio - tol || (q <= ratio + tol && leave < rows_ && basis_[r] < basis_[leave])) {
          ratio = std::min(ratio, q);
          leave = r;
        }
      }
      if (leave == rows_) return PivotOutcome::kUnbounded;
      if (++iterations > opt.max_iterations) return PivotOutcome::kIterationCap;

      if (rhs(leave) <= tol) {
        if (++degenerate >= opt.degenerate_limit) bland = true;
      } else {
        degenerate = 0;
      }
      pivot(leave, enter);
    }
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
  std::vector<std::size_t> basis_;
};

bool satisfies(const LinearProgram& lp, const std::vector<double>& x, double tol) {
  for (double v : x) {
    if (!(v >= -tol)) return false;
  }
  for (const auto& row : lp.rows) {
    double lhs = 0.0, scale = std::abs(row.rhs);
    for (std::size_t k = 0; k < lp.num_vars; ++k) {
      lhs += row.coef[k] * x[k];
      scale = std::max(scale, std::abs(row.coef[k] * x[k]));
    }
    const double slack = tol * std::max(1.0, scale);
    switch (row.sense) {
      case RowSense::kLe:
        if (lhs > row.rhs + slack) return false;
        break;
      case RowSense::kGe:
        if (lhs < row.rhs - slack) return false;
        break;
      case RowSense::kEq:
        if (std::abs(lhs - row.rhs) > slack) return false;
        break;
    }
  }
  return true;
}

}  // namespace

LpResult solve_lp(const LinearProgram& lp, const LpOptions& options) {
  LpResult result;
  const std::size_t n = lp.num_vars;
  const std::size_t m = lp.rows.size();

  // Normalize to rhs >= 0 and lay out columns: structural, slack/surplus, artificial.
  std::vector<RowSense> sense(m);
  std::vector<double> sign(m, 1.0);
  std::size_t num_slack = 0, num_art = 0;
  for (std::size_t r = 0; r < m; ++r) {
    sense[r] = lp.rows[r].sense;
    if (lp.rows[r].rhs < 0.0) {
      sign[r] = -1.0;
      if (sense[r] == RowSense::kLe) sense[r] = RowSense::kGe;
      else if (sense[r] == RowSense::kGe) sense[r] = RowSense::kLe;
    }
    if (sense[r] != RowSense::kEq) ++num_slack;
    if (sense[r] != RowSense::kLe) ++num_art;
  }
  const std::size_t art_begin = n + num_slack;
  const std::size_t cols = art_begin + num_art;
  Tableau t(m, cols);

  std::size_t next_slack = n, next_art = art_begin;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t k = 0; k < n; ++k) t.at(r, k) = sign[r] * lp.rows[r].coef[k];
    t.rhs(r) = sign[r] * lp.rows[r].rhs;
    if (sense[r] == RowSense::kLe) {
      t.at(r, next_slack) = 1.0;
      t.basis()[r] = next_slack++;
    } else {
      if (sense[r] == RowSense::kGe) t.at(r, next_slack++) = -1.0;
      t.at(r, next_art) = 1.0;
      t.basis()[r] = next_art++;
    }
  }

  // Phase 1: maximize -sum(artificials).
  if (num_art > 0) {
    for (std::size_t r = 0; r < m; ++r) {
      if (t.basis()[r] < art_begin) continue;
      for (std::size_t c = 0; c <= cols; ++c) t.at(m, c) -= t.at(r, c);
    }
    for (std::size_t c = art_begin; c < cols; ++c) t.cost(c) = 0.0;
    switch (t.optimize(cols, options, result.iterations)) {
      case PivotOutcome::kOptimal: break;
      case PivotOutcome::kUnbounded:
      case PivotOutcome::kIterationCap:
        result.status = LpStatus::kNumerical;
        return result;
    }
    double infeasibility = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      if (t.basis()[r] >= art_begin) infeasibility += t.rhs(r);
    }
    if (infeasibility > 1e-9) {
      result.status = LpStatus::kInfeasible;
      return result;
    }
    // Drive zero-valued artificials out; rows with no eligible pivot are redundant.
    for (std::size_t r = 0; r < m; ++r) {
      if (t.basis()[r] < art_begin) continue;
      for (std::size_t c = 0; c < art_begin; ++c) {
        if (std::abs(t.at(r, c)) > 1e-9) {
          t.pivot(r, c);
          break;
        }
      }
    }
  }

  // Phase 2: price the real objective against the current basis.
  for (std::size_t c = 0; c <= cols; ++c) t.at(m, c) = 0.0;
  for (std::size_t k = 0; k < n; ++k) t.cost(k) = -lp.objective[k];
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t b = t.basis()[r];
    const double cb = b < n ? lp.objective[b] : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t c = 0; c <= cols; ++c) t.at(m, c) += cb * t.at(r, c);
  }
  for (std::size_t r = 0; r < m; ++r) t.cost(t.basis()[r]) = 0.0;

  switch (t.optimize(art_begin, options, result.iterations)) {
    case PivotOutcome::kOptimal: break;
    case PivotOutcome::kUnbounded:
      result.status = LpStatus::kUnbounded;
      return result;
    case PivotOutcome::kIterationCap:
      result.status = LpStatus::kNumerical;
      return result;
  }

  result.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    if (t.basis()[r] < n) result.x[t.basis()[r]] = std::max(0.0, t.rhs(r));
  }
  result.objective = 0.0;
  for (std::size_t k = 0; k < n; ++k) result.objective += lp.objective[k] * result.x[k];
  result.status = satisfies(lp, result.x, 1e-7) ? LpStatus::kOptimal : LpStatus::kNumerical;
  return result;
}

}  // namespace blocknas
