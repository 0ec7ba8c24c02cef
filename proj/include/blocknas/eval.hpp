#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blocknas/estimator.hpp"
#include "blocknas/ilp.hpp"
#include "blocknas/oracle.hpp"
#include "blocknas/searchspace.hpp"
#include "json.hpp"

namespace blocknas {

// --- correlation ---------------------------------------------------------

// 1-based ranks; tied values share their average rank.
std::vector<double> average_ranks(const std::vector<double>& values);
double pearson(const std::vector<double>& x, const std::vector<double>& y);
double spearman(const std::vector<double>& x, const std::vector<double>& y);
// Tau-b in O(n log n) (Knight's merge-sort method).
double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y);

struct CorrelationReport {
  double spearman = 0.0;
  double kendall_tau = 0.0;
  double mse = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;

  nlohmann::json to_json() const;
};

// Correlations are NaN when either side is constant. Throws for n < 2.
CorrelationReport correlation(const std::vector<double>& predicted,
                              const std::vector<double>& actual);

// --- predictor validation ------------------------------------------------

struct ValidationReport {
  CorrelationReport accuracy;
  CorrelationReport latency;
  std::optional<CorrelationReport> energy;  // absent when the device has no energy
  std::size_t samples = 0;

  nlohmann::json to_json() const;
};

struct ValidationOptions {
  std::size_t sample_count = 1000;
  std::uint64_t seed = 0;
  // False reproduces the "without FLOPs info" predictor.
  bool flops_scaling = true;
};

ValidationReport validate_predictor(const SearchSpace& space, const Oracle& oracle,
                                    const BlockDeltaTable& table, std::string_view device,
                                    const ValidationOptions& options = {});

// Sampled (predicted, actual) accuracies, as used by validate_predictor.
std::pair<std::vector<double>, std::vector<double>> accuracy_pairs(
    const SearchSpace& space, const Oracle& oracle, const BlockDeltaTable& table,
    std::string_view device, const ValidationOptions& options);

// --- sampling convergence ------------------------------------------------

struct ConvergencePoint {
  std::size_t sample_count = 0;
  double host_fraction = 0.0;  // sample_count over the largest host population
  double spearman_mean = 0.0;
  double spearman_sd = 0.0;
  double rmse_mean = 0.0;  // predicted vs actual accuracy
  double rmse_sd = 0.0;
  double delta_rmse_mean = 0.0;  // dA vs full-mode dA; NaN without a full reference
  double delta_rmse_sd = 0.0;
};

struct ConvergenceReport {
  std::optional<ValidationReport> full;  // present when the space is enumerable
  std::vector<ConvergencePoint> points;

  nlohmann::json to_json() const;
};

// Partial-mode tables draw distinct hosts, so a count at the host population
// reproduces full mode.
ConvergenceReport sampling_convergence(const SearchSpace& space, const Oracle& oracle,
                                       const std::vector<std::size_t>& sample_counts,
                                       const std::vector<std::uint64_t>& seeds,
                                       std::string_view device,
                                       const ValidationOptions& validation = {});

// Host sample count that covers at least `fraction` of every node's host
// population (rounded up, at least 1).
std::size_t hosts_for_fraction(const SearchSpace& space, double fraction);

// --- delta law fits ------------------------------------------------------

enum class FitFamily { kLinear, kQuadratic, kReciprocal, kLog, kExp };

const char* to_string(FitFamily family);

struct FitReport {
  FitFamily family = FitFamily::kLinear;
  std::vector<double> params;  // see fit_delta_law
  double r2 = 0.0;             // -inf when the fit failed
  double mse = 0.0;
  double dc = 0.0;             // determination coefficient, same as r2
  bool converged = true;

  nlohmann::json to_json() const;
};

// Least-squares fit of every family, best r2 first:
//   linear a + b*F, quadratic a + b*F + c*F^2, reciprocal a + b/F,
//   log a + b*ln F, exp a*exp(b*F).
// For reciprocal, params[1] is the alpha of delta ~ alpha / F.
std::vector<FitReport> fit_delta_law(const std::vector<double>& flops,
                                     const std::vector<double>& delta);

// --- Pareto --------------------------------------------------------------

struct ParetoPoint {
  double latency = 0.0;
  double accuracy = 0.0;
  NetworkConfig config;
};

// Points not dominated in (min latency, max accuracy), sorted by latency.
// Exact duplicates keep the lexicographically smallest config.
std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> points);

// Best front accuracy at latency <= `latency`, minus `accuracy`.
double pareto_regret(const std::vector<ParetoPoint>& front, double latency, double accuracy);

struct SweepPoint {
  double budget = 0.0;
  SearchStatus status = SearchStatus::kInfeasible;
  std::optional<NetworkConfig> config;
  double latency = 0.0;    // oracle
  double accuracy = 0.0;   // oracle
  double predicted_accuracy = 0.0;
  double objective = 0.0;  // solver objective (form chosen in options)
  double eq5_eq6_gap = 0.0;  // eq5 minus eq6 objective on the found config
  double regret = 0.0;
};

struct ParetoReport {
  std::vector<ParetoPoint> true_front;
  std::vector<SweepPoint> searched;
  double mean_regret = 0.0;  // over feasible searched points
  std::size_t zero_regret_points = 0;
  std::size_t feasible_points = 0;
  // Random search with the same number of oracle evaluations as the table.
  std::optional<double> random_mean_regret;
  std::uint64_t random_evaluations = 0;

  nlohmann::json to_json() const;
};

struct ParetoOptions {
  ObjectiveForm objective_form = ObjectiveForm::kEq6GlobalMeanFlops;
  double time_limit = 10.0;
  std::size_t random_trials = 0;  // 0 disables the baseline
  std::uint64_t seed = 0;
  std::uint64_t cap = enumeration_cap();
};

// `budgets` empty means 20 points spread over the space's latency range.
ParetoReport pareto_sweep(const SearchSpace& space, const Oracle& oracle,
                          const BlockDeltaTable& table, std::vector<double> budgets,
                          std::string_view device, const ParetoOptions& options = {});

// --- ablation ------------------------------------------------------------

enum class AblationVariant { kComplete, kNoFlopsInfo, kRandomBasenet, kRandomBaseblock };

const char* to_string(AblationVariant variant);
AblationVariant parse_ablation_variant(std::string_view text);

struct AblationRow {
  AblationVariant variant = AblationVariant::kComplete;
  // Random variants report the field-wise mean over their draws.
  CorrelationReport accuracy;
  CorrelationReport latency;
  std::vector<NetworkConfig> hosts;  // random_basenet draws
  std::vector<NetworkConfig> bases;  // random_baseblock draws
};

struct AblationOptions {
  std::size_t sample_count = 1000;
  std::uint64_t seed = 0;
  std::size_t random_draws = 10;
};

// Every variant estimates in single mode and differs only in its inputs:
// no_flops_info drops the FLOPs ratio at prediction time, random_basenet
// hosts on seeded random configs, random_baseblock picks seeded random base
// blocks per node.
std::vector<AblationRow> ablation_suite(const SearchSpace& space, const Oracle& oracle,
                                        const std::vector<AblationVariant>& variants,
                                        std::string_view device,
                                        const AblationOptions& options = {});

nlohmann::json ablation_to_json(const std::vector<AblationRow>& rows);

// --- unbiasedness --------------------------------------------------------

struct BlockZScore {
  std::size_t node = 0;
  int block = 0;
  double full = 0.0;
  double mean = 0.0;
  double se = 0.0;
  double z = 0.0;  // NaN with a single seed
};

struct UnbiasednessReport {
  std::vector<BlockZScore> blocks;  // base blocks excluded
  std::size_t seeds = 0;
  std::size_t sample_count = 0;
  double fraction_within_3se = 0.0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

UnbiasednessReport unbiasedness_check(const SearchSpace& space, const Oracle& oracle,
                                      const std::vector<std::uint64_t>& seeds,
                                      std::size_t sample_count);

}  // namespace blocknas
