#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "blocknas/error.hpp"
#include "blocknas/estimator.hpp"
#include "blocknas/ilp.hpp"
#include "blocknas/presets.hpp"
#include "fixtures.hpp"

using namespace blocknas;

namespace {

// Brute-force argmax with the same tie rule as the solvers (smaller config wins).
std::optional<NetworkConfig> brute_force(const SearchProblem& p, double* best_out = nullptr) {
  std::optional<NetworkConfig> best;
  double best_v = -std::numeric_limits<double>::infinity();
  for_each_config(*p.space, [&](const NetworkConfig& c) {
    if (!p.feasible(c)) return;
    const double v = p.objective(c);
    if (v > best_v) {
      best_v = v;
      best = c;
    }
  });
  if (best_out) *best_out = best_v;
  return best;
}

SearchOptions lat_options(double budget) {
  SearchOptions o;
  o.device = "gpu";
  o.lat_budget = budget;
  return o;
}

SearchOptions unconstrained() {
  SearchOptions o;
  o.device = "gpu";
  o.unconstrained = true;
  return o;
}

}  // namespace

TEST(BuildProblem, RequiresBudgetOrFlag) {
  const auto s = fixtures::random_space(3, 3, 1);
  const auto t = fixtures::random_table(s, 1);
  SearchOptions o;
  o.device = "gpu";
  EXPECT_THROW(build_problem(s, t, o), Error);
  o.lat_budget = -1.0;
  EXPECT_THROW(build_problem(s, t, o), Error);
  o.lat_budget = 10.0;
  o.time_limit = 0.0;
  EXPECT_THROW(build_problem(s, t, o), Error);
  EXPECT_NO_THROW(build_problem(s, t, unconstrained()));
}

TEST(BuildProblem, RejectsMissingEnergyAndUnknownDevice) {
  const auto s = fixtures::random_space(3, 3, 1);
  const auto t = fixtures::random_table(s, 1);
  SearchOptions o;
  o.device = "cpu";
  o.eng_budget = 5.0;
  EXPECT_THROW(build_problem(s, t, o), Error);
  o.device = "tpu";
  o.eng_budget.reset();
  o.unconstrained = true;
  EXPECT_THROW(build_problem(s, t, o), Error);
}

TEST(BuildProblem, BudgetBelowGreedyMinimumIsInfeasible) {
  const auto s = fixtures::random_space(4, 3, 2);
  const auto t = fixtures::random_table(s, 2);
  double min_lat = t.base_perf.latency[0];
  for (std::size_t i = 0; i < s.num_nodes(); ++i) {
    min_lat -= *std::max_element(t.latency[0][i].begin(), t.latency[0][i].end());
  }
  const auto p = build_problem(s, t, lat_options(min_lat - 0.01));
  EXPECT_TRUE(p.trivially_infeasible);
  const auto r = solve(p);
  EXPECT_EQ(r.status, SearchStatus::kInfeasible);
  EXPECT_FALSE(r.config.has_value());
  EXPECT_EQ(exit_code(r.status), 3);
  EXPECT_FALSE(build_problem(s, t, lat_options(min_lat + 0.01)).trivially_infeasible);
}

TEST(BuildProblem, BaseLatencyBudgetIsFeasibleOnNb201) {
  const auto s = nb201_space(0);
  const SyntheticOracle o(s, default_model(s, 0));
  const auto t = estimate_single(s, o);
  const auto p = build_problem(s, t, lat_options(t.base_perf.latency[0]));
  EXPECT_FALSE(p.trivially_infeasible);
  EXPECT_TRUE(p.feasible(t.base_config));
  const auto r = solve(p);
  ASSERT_EQ(r.status, SearchStatus::kOptimal);
  EXPECT_GE(r.objective_value, p.objective(t.base_config));
}

TEST(CharnesCooper, LiteralScaleGivesReciprocalFlops) {
  // Two nodes whose chosen blocks sum to 50 FLOPs.
  std::vector<BlockNode> nodes(2);
  for (auto& n : nodes) {
    for (double f : {20.0, 30.0}) {
      Block b;
      b.flops = f;
      b.latency = {1.0, 1.0};
      b.energy = {1.0, std::nan("")};
      n.blocks.push_back(b);
    }
  }
  const SearchSpace s("cc", {"gpu", "cpu"}, nodes);
  const auto t = fixtures::random_table(s, 4);
  const auto p = build_problem(s, t, unconstrained());
  const auto lp = charnes_cooper_transform(p, {}, 1.0);
  const NetworkConfig c({0, 1});
  const auto pt = lp.embed(p, c);
  EXPECT_NEAR(pt[lp.z_column], 0.02, 1e-15);
  EXPECT_NEAR(pt[lp.column[0][0]], 0.02, 1e-15);
  EXPECT_NEAR(pt[lp.column[1][1]], 0.02, 1e-15);
  EXPECT_EQ(pt[lp.column[0][1]], 0.0);
  EXPECT_EQ(lp.recover(pt), c);

  const auto base_pt = lp.embed(p, t.base_config);
  EXPECT_NEAR(base_pt[lp.z_column], 1.0 / network_flops(s, t.base_config), 1e-15);
}

TEST(CharnesCooper, EmbedEvaluateMatchesObjective) {
  const auto s = fixtures::random_space(5, 4, 5);
  const auto t = fixtures::random_table(s, 5);
  for (auto form : {ObjectiveForm::kEq6GlobalMeanFlops, ObjectiveForm::kEq5PerBlock}) {
    auto o = lat_options(12.0);
    o.objective_form = form;
    const auto p = build_problem(s, t, o);
    const auto lp = charnes_cooper_transform(p);
    const auto configs = sample_configs(s, 100, 9);
    for (const auto& c : configs) {
      const auto pt = lp.embed(p, c);
      EXPECT_NEAR(lp.evaluate(pt), p.objective(c), 1e-9);
      EXPECT_EQ(lp.recover(pt), c);
      // Every row holds at the embedded point (budget rows only when feasible).
      for (std::size_t r = 0; r + 1 < lp.lp.rows.size(); ++r) {
        const auto& row = lp.lp.rows[r];
        double lhs = 0.0;
        for (std::size_t k = 0; k < pt.size(); ++k) lhs += row.coef[k] * pt[k];
        if (row.sense == RowSense::kEq) {
          EXPECT_NEAR(lhs, row.rhs, 1e-12);
        }
      }
    }
  }
}

TEST(LpRelaxation, RootBoundDominatesOptimum) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto s = fixtures::random_space(4, 4, seed);
    const auto t = fixtures::random_table(s, seed + 100);
    const auto p = build_problem(s, t, lat_options(9.0 + 0.1 * static_cast<double>(seed % 10)));
    double opt = 0.0;
    const auto best = brute_force(p, &opt);
    const auto bound = lp_relax_solve(charnes_cooper_transform(p));
    if (!best) {
      EXPECT_NE(bound.status, LpStatus::kUnbounded);
      continue;
    }
    ASSERT_EQ(bound.status, LpStatus::kOptimal) << "seed " << seed;
    EXPECT_GE(bound.bound, opt - 1e-9) << "seed " << seed;
  }
}

TEST(LpRelaxation, FullyFixedBranchEqualsObjective) {
  const auto s = fixtures::random_space(4, 3, 6);
  const auto t = fixtures::random_table(s, 6);
  const auto p = build_problem(s, t, unconstrained());
  for (const auto& c : sample_configs(s, 20, 3)) {
    std::vector<std::size_t> fixed(c.choices().begin(), c.choices().end());
    const auto b = lp_relax_solve(charnes_cooper_transform(p, fixed));
    ASSERT_EQ(b.status, LpStatus::kOptimal);
    EXPECT_NEAR(b.bound, p.objective(c), 1e-9);
  }
}

TEST(LpRelaxation, InfeasibleBranchIsCertified) {
  const auto s = fixtures::random_space(3, 3, 7);
  const auto t = fixtures::random_table(s, 7);
  const auto p = build_problem(s, t, lat_options(0.5));
  EXPECT_EQ(lp_relax_solve(charnes_cooper_transform(p)).status, LpStatus::kInfeasible);
}

TEST(Solve, TwoByTwoUnconstrainedMatchesBruteForce) {
  const auto s = fixtures::random_space(2, 2, 8);
  const SyntheticOracle o(s, fixtures::noiseless_model(s, 8));
  const auto t = estimate_full(s, o);
  const auto p = build_problem(s, t, unconstrained());
  const auto r = solve(p);
  ASSERT_EQ(r.status, SearchStatus::kOptimal);
  EXPECT_EQ(*r.config, *brute_force(p));
  EXPECT_EQ(*solve_dinkelbach(p).config, *r.config);
}

TEST(Solve, UnconstrainedConstantFlopsIsPerNodeArgmax) {
  const auto s = fixtures::random_space(5, 4, 9, true);
  const auto t = fixtures::random_table(s, 9);
  const auto r = solve(build_problem(s, t, unconstrained()));
  ASSERT_EQ(r.status, SearchStatus::kOptimal);
  for (std::size_t i = 0; i < s.num_nodes(); ++i) {
    const auto& row = t.accuracy[i];
    const auto best = std::min_element(row.begin(), row.end()) - row.begin();
    EXPECT_EQ((*r.config)[i], best) << "node " << i;
  }
}

TEST(Solve, MatchesExhaustiveOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const std::size_t m = 2 + seed % 4;
    const std::size_t n = 2 + (seed / 4) % 4;
    const auto s = fixtures::random_space(m, n, seed);
    const auto t = fixtures::random_table(s, seed * 7 + 1);
    auto o = lat_options(10.0 - 0.3 * static_cast<double>(seed % 7));
    if (seed % 3 == 0) o.eng_budget = 8.0;
    o.objective_form = seed % 2 ? ObjectiveForm::kEq5PerBlock : ObjectiveForm::kEq6GlobalMeanFlops;
    const auto p = build_problem(s, t, o);
    const auto bb = solve(p);
    const auto ex = solve_exhaustive(p);
    const auto dk = solve_dinkelbach(p);
    ASSERT_EQ(bb.status, ex.status) << "seed " << seed;
    ASSERT_EQ(dk.status, ex.status) << "seed " << seed;
    if (ex.status != SearchStatus::kOptimal) continue;
    EXPECT_EQ(*bb.config, *ex.config) << "seed " << seed;
    EXPECT_EQ(*dk.config, *ex.config) << "seed " << seed;
    EXPECT_NEAR(bb.objective_value, ex.objective_value, 1e-12);
    EXPECT_TRUE(p.feasible(*bb.config));
    EXPECT_LE(bb.prediction->latency, *o.lat_budget + kBudgetTolerance);
  }
}

TEST(Solve, Nb201LatencySweepMatchesExhaustive) {
  const auto s = nb201_space(1);
  const SyntheticOracle o(s, default_model(s, 1));
  const auto t = estimate_single(s, o);
  const auto base = build_problem(s, t, unconstrained());
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for_each_config(s, [&](const NetworkConfig& c) {
    lo = std::min(lo, base.predicted_latency(c));
    hi = std::max(hi, base.predicted_latency(c));
  });
  for (int k = 0; k < 20; ++k) {
    const double budget = lo + (hi - lo) * (k + 0.5) / 20.0;
    const auto p = build_problem(s, t, lat_options(budget));
    const auto r = solve(p);
    ASSERT_EQ(r.status, SearchStatus::kOptimal) << "budget " << budget;
    EXPECT_EQ(*r.config, *brute_force(p)) << "budget " << budget;
  }
}

TEST(Solve, RespectsAllowedMask) {
  const auto s = fixtures::random_space(4, 4, 10);
  const auto t = fixtures::random_table(s, 10);
  auto o = unconstrained();
  o.allowed.assign(4, std::vector<bool>(4, false));
  for (std::size_t i = 0; i < 4; ++i) {
    o.allowed[i][i % 4] = true;
    o.allowed[i][(i + 2) % 4] = true;
  }
  const auto p = build_problem(s, t, o);
  const auto r = solve(p);
  ASSERT_TRUE(r.config);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(o.allowed[i][(*r.config)[i]]);
  EXPECT_EQ(*r.config, *brute_force(p));

  o.allowed[1].assign(4, false);
  EXPECT_THROW(build_problem(s, t, o), Error);
}

TEST(Solve, ScaleInvarianceOfAccuracyDeltas) {
  const auto s = fixtures::random_space(4, 4, 11);
  auto t = fixtures::random_table(s, 11);
  const auto r1 = solve(build_problem(s, t, lat_options(10.0)));
  for (auto& row : t.accuracy) {
    for (double& v : row) v *= 3.5;
  }
  const auto r2 = solve(build_problem(s, t, lat_options(10.0)));
  ASSERT_TRUE(r1.config && r2.config);
  EXPECT_EQ(*r1.config, *r2.config);
}

TEST(Solve, DeterministicIncludingNodeCount) {
  const auto s = fixtures::random_space(6, 5, 12);
  const auto t = fixtures::random_table(s, 12);
  const auto p = build_problem(s, t, lat_options(9.5));
  const auto a = solve(p);
  const auto b = solve(p);
  EXPECT_EQ(a.config, b.config);
  EXPECT_EQ(a.stats.nodes, b.stats.nodes);
  EXPECT_EQ(a.stats.lp_iterations, b.stats.lp_iterations);
  EXPECT_EQ(a.objective_value, b.objective_value);
}

TEST(Solve, ObjectiveMatchesPredictionForBothForms) {
  const auto s = preset_space("custom:5x4", 13);
  const SyntheticOracle o(s, default_model(s, 13));
  const auto t = estimate_single(s, o);
  auto opts = lat_options(t.base_perf.latency[0]);
  const auto r6 = solve(build_problem(s, t, opts));
  ASSERT_TRUE(r6.config);
  double sum = 0.0;
  for (std::size_t i = 0; i < s.num_nodes(); ++i) sum += t.accuracy[i][(*r6.config)[i]];
  EXPECT_NEAR(r6.objective_value,
              t.base_perf.accuracy - sum * t.mean_space_flops / network_flops(s, *r6.config), 1e-9);
  opts.objective_form = ObjectiveForm::kEq5PerBlock;
  const auto r5 = solve(build_problem(s, t, opts));
  ASSERT_TRUE(r5.config);
  EXPECT_NEAR(r5.objective_value, predict(t, s, *r5.config, "gpu").accuracy_unclamped, 1e-9);
}

TEST(Dinkelbach, SingleNodeIsOneIteration) {
  const auto s = fixtures::random_space(1, 6, 14);
  const auto t = fixtures::random_table(s, 14);
  const auto p = build_problem(s, t, lat_options(10.5));
  const auto r = solve_dinkelbach(p);
  EXPECT_EQ(r.stats.dinkelbach_iterations, 1u);
  EXPECT_EQ(r.config, brute_force(p));
}

TEST(Search, DispatchesOnSolverKind) {
  const auto s = fixtures::random_space(3, 3, 15);
  const auto t = fixtures::random_table(s, 15);
  for (auto kind : {SolverKind::kAuto, SolverKind::kBranchAndBound, SolverKind::kDinkelbach,
                    SolverKind::kExhaustive}) {
    auto o = lat_options(10.0);
    o.solver = kind;
    const auto r = search(build_problem(s, t, o));
    EXPECT_EQ(r.solver, kind == SolverKind::kAuto ? SolverKind::kBranchAndBound : kind);
  }
  EXPECT_EQ(parse_solver_kind("dinkelbach"), SolverKind::kDinkelbach);
  EXPECT_THROW(parse_solver_kind("gurobi"), Error);
}

TEST(Search, ExhaustiveHonoursCap) {
  const auto s = fixtures::random_space(6, 4, 16);
  const auto t = fixtures::random_table(s, 16);
  auto o = unconstrained();
  o.cap = 100;
  try {
    solve_exhaustive(build_problem(s, t, o));
    FAIL() << "expected cap error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCapExceeded);
  }
}

TEST(Search, ResultJsonHasContractKeys) {
  const auto s = fixtures::random_space(3, 3, 17);
  const auto t = fixtures::random_table(s, 17);
  const auto j = solve(build_problem(s, t, lat_options(10.0))).to_json();
  for (const char* key : {"status", "config", "prediction", "objective", "gap", "stats"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}
