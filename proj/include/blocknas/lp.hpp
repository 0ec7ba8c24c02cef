#pragma once

#include <cstddef>
#include <vector>

namespace blocknas {

enum class RowSense { kLe, kGe, kEq };

struct LpRow {
  std::vector<double> coef;  // dense, one entry per variable
  RowSense sense = RowSense::kLe;
  double rhs = 0.0;
};

// maximize objective . x  subject to rows, x >= 0.
struct LinearProgram {
  std::size_t num_vars = 0;
  std::vector<double> objective;
  std::vector<LpRow> rows;

  void add_row(std::vector<double> coef, RowSense sense, double rhs) {
    rows.push_back({std::move(coef), sense, rhs});
  }
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kNumerical };

const char* to_string(LpStatus status);

struct LpResult {
  LpStatus status = LpStatus::kNumerical;
  double objective = 0.0;
  std::vector<double> x;
  std::size_t iterations = 0;
};

struct LpOptions {
  std::size_t max_iterations = 50'000;
  double tolerance = 1e-10;
  // Consecutive degenerate pivots before switching to Bland's rule for good.
  std::size_t degenerate_limit = 20;
};

// Dense two-phase primal simplex. Solutions are re-checked against the
// original rows; a violated row reports kNumerical rather than a wrong answer.
LpResult solve_lp(const LinearProgram& lp, const LpOptions& options = {});

}  // namespace blocknas
