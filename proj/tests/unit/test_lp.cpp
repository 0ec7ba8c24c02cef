#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "blocknas/hashing.hpp"
#include "blocknas/lp.hpp"

using namespace blocknas;

namespace {

// Max over all basic feasible points: every choice of n tight constraints
// among rows and x >= 0 bounds. Only valid for bounded LPs.
std::optional<double> vertex_max(const LinearProgram& lp) {
  const std::size_t n = lp.num_vars;
  std::vector<std::pair<std::vector<double>, double>> planes;
  for (const auto& r : lp.rows) planes.push_back({r.coef, r.rhs});
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> e(n, 0.0);
    e[k] = 1.0;
    planes.push_back({e, 0.0});
  }
  std::optional<double> best;
  std::vector<std::size_t> pick(n);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t depth, std::size_t from) {
    if (depth == n) {
      Eigen::MatrixXd a(n, n);
      Eigen::VectorXd b(n);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) a(r, c) = planes[pick[r]].first[c];
        b(r) = planes[pick[r]].second;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
      if (lu.rank() < static_cast<Eigen::Index>(n)) return;
      const Eigen::VectorXd x = lu.solve(b);
      for (std::size_t k = 0; k < n; ++k) {
        if (x(k) < -1e-9) return;
      }
      for (const auto& r : lp.rows) {
        double v = 0.0;
        for (std::size_t k = 0; k < n; ++k) v += r.coef[k] * x(k);
        if (r.sense == RowSense::kLe && v > r.rhs + 1e-9) return;
        if (r.sense == RowSense::kGe && v < r.rhs - 1e-9) return;
        if (r.sense == RowSense::kEq && std::abs(v - r.rhs) > 1e-9) return;
      }
      double obj = 0.0;
      for (std::size_t k = 0; k < n; ++k) obj += lp.objective[k] * x(k);
      if (!best || obj > *best) best = obj;
      return;
    }
    for (std::size_t p = from; p < planes.size(); ++p) {
      pick[depth] = p;
      rec(depth + 1, p + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST(Simplex, TextbookProblem) {
  // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6).
  LinearProgram lp{2, {3, 5}, {}};
  lp.add_row({1, 0}, RowSense::kLe, 4);
  lp.add_row({0, 2}, RowSense::kLe, 12);
  lp.add_row({3, 2}, RowSense::kLe, 18);
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::kOptimal);
  EXPECT_NEAR(r.objective, 36.0, 1e-9);
  EXPECT_NEAR(r.x[0], 2.0, 1e-9);
  EXPECT_NEAR(r.x[1], 6.0, 1e-9);
}

TEST(Simplex, EqualityAndGreaterRows) {
  // max x + y, x + y = 3, x >= 1, y >= 0.5 -> 3.
  LinearProgram lp{2, {1, 1}, {}};
  lp.add_row({1, 1}, RowSense::kEq, 3);
  lp.add_row({1, 0}, RowSense::kGe, 1);
  lp.add_row({0, 1}, RowSense::kGe, 0.5);
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::kOptimal);
  EXPECT_NEAR(r.objective, 3.0, 1e-9);
}

TEST(Simplex, Infeasible) {
  LinearProgram lp{1, {1}, {}};
  lp.add_row({1}, RowSense::kLe, 1);
  lp.add_row({1}, RowSense::kGe, 2);
  EXPECT_EQ(solve_lp(lp).status, LpStatus::kInfeasible);
}

TEST(Simplex, Unbounded) {
  LinearProgram lp{2, {1, 1}, {}};
  lp.add_row({1, -1}, RowSense::kLe, 1);
  EXPECT_EQ(solve_lp(lp).status, LpStatus::kUnbounded);
}

TEST(Simplex, NegativeRhsIsNormalized) {
  // -x <= -2 means x >= 2; max -x -> -2.
  LinearProgram lp{1, {-1}, {}};
  lp.add_row({-1}, RowSense::kLe, -2);
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::kOptimal);
  EXPECT_NEAR(r.objective, -2.0, 1e-9);
}

TEST(Simplex, BealeCyclingExampleTerminates) {
  // Cycles under plain Dantzig pricing without anti-cycling.
  LinearProgram lp{4, {0.75, -150, 0.02, -6}, {}};
  lp.add_row({0.25, -60, -0.04, 9}, RowSense::kLe, 0);
  lp.add_row({0.5, -90, -0.02, 3}, RowSense::kLe, 0);
  lp.add_row({0, 0, 1, 0}, RowSense::kLe, 1);
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::kOptimal);
  EXPECT_NEAR(r.objective, 0.05, 1e-9);
}

TEST(Simplex, RandomBoundedLpsMatchVertexEnumeration) {
  Rng rng(2024);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(2);
    LinearProgram lp{n, {}, {}};
    for (std::size_t k = 0; k < n; ++k) lp.objective.push_back(rng.uniform(-2, 3));
    const std::size_t rows = 2 + rng.uniform_index(3);
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<double> c;
      for (std::size_t k = 0; k < n; ++k) c.push_back(rng.uniform(-1, 2));
      const double u = rng.uniform01();
      const RowSense sense = u < 0.6 ? RowSense::kLe : (u < 0.85 ? RowSense::kGe : RowSense::kEq);
      lp.add_row(c, sense, rng.uniform(-1, 4));
    }
    std::vector<double> box(n, 1.0);
    lp.add_row(box, RowSense::kLe, 10.0);  // keeps the LP bounded
    const auto expected = vertex_max(lp);
    const auto r = solve_lp(lp);
    if (!expected) {
      EXPECT_EQ(r.status, LpStatus::kInfeasible) << trial;
    } else {
      ASSERT_EQ(r.status, LpStatus::kOptimal) << trial;
      EXPECT_NEAR(r.objective, *expected, 1e-7) << trial;
    }
  }
}
