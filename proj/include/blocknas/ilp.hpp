#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blocknas/estimator.hpp"
#include "blocknas/lp.hpp"
#include "blocknas/predictor.hpp"
#include "blocknas/searchspace.hpp"
#include "json.hpp"

namespace blocknas {

enum class ObjectiveForm { kEq6GlobalMeanFlops, kEq5PerBlock };
enum class SolverKind { kAuto, kBranchAndBound, kDinkelbach, kExhaustive };

const char* to_string(ObjectiveForm form);
const char* to_string(SolverKind kind);
ObjectiveForm parse_objective_form(std::string_view text);
SolverKind parse_solver_kind(std::string_view text);

struct SearchOptions {
  std::string device;
  std::optional<double> lat_budget;  // ms
  std::optional<double> eng_budget;  // mJ
  // Must be set to search without any budget.
  bool unconstrained = false;
  double time_limit = 10.0;  // seconds
  ObjectiveForm objective_form = ObjectiveForm::kEq6GlobalMeanFlops;
  SolverKind solver = SolverKind::kAuto;
  std::uint64_t cap = enumeration_cap();  // exhaustive solver only
  // Per node, blocks the solver may pick; empty means all.
  std::vector<std::vector<bool>> allowed;
};

// Budget tolerance applied to predicted latency/energy.
inline constexpr double kBudgetTolerance = 1e-9;

// The fractional search problem, kept as per-block columns:
//   maximize acc(base) + sum(num * x) / sum(den * x)
//   s.t. sum(lat * x) <= lat_cap, sum(eng * x) <= eng_cap, one block per node
// with den = flops / mean_space_flops and lat = -dL (so predicted latency is
// base latency + sum(lat * x)).
struct SearchProblem {
  const SearchSpace* space = nullptr;
  const BlockDeltaTable* table = nullptr;
  SearchOptions options;
  std::size_t device = 0;

  std::vector<std::vector<double>> num;
  std::vector<std::vector<double>> den;
  std::vector<std::vector<double>> lat;
  std::vector<std::vector<double>> eng;
  std::optional<double> lat_cap;
  std::optional<double> eng_cap;
  bool trivially_infeasible = false;

  std::size_t num_nodes() const { return num.size(); }
  bool allowed(std::size_t node, int block) const;

  // Exact objective and budget check; every solver uses these two.
  double objective(const NetworkConfig& cfg) const;
  bool feasible(const NetworkConfig& cfg) const;
  double predicted_latency(const NetworkConfig& cfg) const;
  double predicted_energy(const NetworkConfig& cfg) const;
};

SearchProblem build_problem(const SearchSpace& space, const BlockDeltaTable& table,
                            const SearchOptions& options);

// Linear program over y = x * z, z = flops_scale / sum(flops * x), for the
// nodes not yet fixed. Fixed nodes (a prefix) fold into the z column.
struct TransformedLP {
  LinearProgram lp;
  std::vector<std::size_t> fixed;  // block index per fixed node
  std::vector<std::vector<std::size_t>> column;  // [free node][block] -> column
  std::size_t z_column = 0;
  double flops_scale = 1.0;
  double objective_offset = 0.0;  // acc(base)

  // Maps a full binary config consistent with `fixed` to its (y, z) point.
  std::vector<double> embed(const SearchProblem& problem, const NetworkConfig& cfg) const;
  // Inverse of embed for integral patterns; picks the largest y per node.
  NetworkConfig recover(const std::vector<double>& point) const;
  double evaluate(const std::vector<double>& point) const;
};

// `fixed` assigns blocks to nodes 0..fixed.size()-1. A non-positive
// `flops_scale` uses the problem's mean space FLOPs.
TransformedLP charnes_cooper_transform(const SearchProblem& problem,
                                       const std::vector<std::size_t>& fixed = {},
                                       double flops_scale = 0.0);

struct RelaxationBound {
  LpStatus status = LpStatus::kNumerical;
  double bound = 0.0;  // in objective units, includes objective_offset
  std::vector<double> point;
  std::size_t iterations = 0;
};

RelaxationBound lp_relax_solve(const TransformedLP& lp);

enum class SearchStatus { kOptimal, kTimeLimitIncumbent, kTimeLimitNoIncumbent, kInfeasible };

const char* to_string(SearchStatus status);
int exit_code(SearchStatus status);

struct SolverStats {
  std::uint64_t nodes = 0;
  std::uint64_t lp_iterations = 0;
  std::uint64_t fallback_bounds = 0;  // LP failures answered by the greedy bound
  std::uint64_t dinkelbach_iterations = 0;
  double wall_seconds = 0.0;
};

struct SearchResult {
  SearchStatus status = SearchStatus::kInfeasible;
  std::optional<NetworkConfig> config;
  std::optional<Prediction> prediction;
  double objective_value = 0.0;
  double gap = 0.0;  // upper bound minus incumbent; 0 when optimal
  ObjectiveForm objective_form = ObjectiveForm::kEq6GlobalMeanFlops;
  SolverKind solver = SolverKind::kBranchAndBound;
  SolverStats stats;

  nlohmann::json to_json() const;
};

// Dispatches on options.solver (auto means branch-and-bound).
SearchResult search(const SearchProblem& problem);

// Branch-and-bound over node assignments with the transformed LP as bound.
SearchResult solve(const SearchProblem& problem);
SearchResult solve_dinkelbach(const SearchProblem& problem);
SearchResult solve_exhaustive(const SearchProblem& problem);

}  // namespace blocknas
