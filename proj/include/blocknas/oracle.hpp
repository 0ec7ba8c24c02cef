#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "blocknas/searchspace.hpp"
#include "json.hpp"

namespace blocknas {

// Measured or predicted performance of one network. Latency and energy follow
// the device order of the owning SearchSpace; NaN marks "not measured".
struct PerfTriple {
  double accuracy = 0.0;
  std::vector<double> latency;
  std::vector<double> energy;

  friend bool operator==(const PerfTriple&, const PerfTriple&) = default;
};

nlohmann::json perf_to_json(const PerfTriple& perf, const std::vector<std::string>& devices);
PerfTriple perf_from_json(const nlohmann::json& doc, const std::vector<std::string>& devices);

struct EvaluationRecord {
  NetworkConfig config;
  PerfTriple perf;
  std::optional<double> flops;
};

// Source of ground-truth performance. Implementations must be safe for
// concurrent evaluate() calls.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual PerfTriple evaluate(const NetworkConfig& cfg) const = 0;
};

// Pure lookup over loaded records; a miss is an error, never interpolated.
class TabularOracle final : public Oracle {
 public:
  TabularOracle(const SearchSpace& space, std::vector<EvaluationRecord> records);

  PerfTriple evaluate(const NetworkConfig& cfg) const override;
  std::size_t size() const { return table_.size(); }

 private:
  std::unordered_map<std::string, PerfTriple> table_;
};

// Reads a records CSV: header "config,accuracy,latency_<dev>...,energy_<dev>...[,flops]",
// configs dash-joined ("0-2-1"). Rows are validated against `space`.
std::vector<EvaluationRecord> load_records(const std::filesystem::path& path,
                                           const SearchSpace& space);
std::vector<EvaluationRecord> parse_records(std::istream& in, const SearchSpace& space,
                                            const std::string& source = "<stream>");
void save_records(const std::filesystem::path& path, const SearchSpace& space,
                  const std::vector<EvaluationRecord>& records);

// Seeded generative oracle. Accuracy follows the reciprocal-FLOPs law
//   acc(N) = base - sum_i a[i][c_i] * mean_space_flops / flops(N)
//            + interactions + noise
// and latency/energy are the summed block tables of the space plus noise.
// Noise is a hash of (seed, config), so results do not depend on query order.
struct SyntheticModel {
  std::uint64_t seed = 0;
  double base_accuracy = 0.7;
  std::vector<std::vector<double>> accuracy_coefficients;  // [node][block]
  double noise_sigma = 0.0;
  // Pairwise terms between adjacent nodes, N(0, sigma^2) per block pair.
  double interaction_sigma = 0.0;
  double latency_noise_sigma = 0.0;
  double energy_noise_sigma = 0.0;

  nlohmann::json to_json() const;
  // `space` fills in generated coefficients when the JSON omits them.
  static SyntheticModel from_json(const nlohmann::json& doc, const SearchSpace& space);
  static SyntheticModel load(const std::filesystem::path& path, const SearchSpace& space);
  void save(const std::filesystem::path& path) const;
};

struct CoefficientOptions {
  double scale = 0.02;
  // Share of each coefficient explained by relative block size; the rest is
  // seeded idiosyncratic quality.
  double size_weight = 0.6;
};

// Generates accuracy coefficients from the seed: larger blocks tend to raise
// accuracy, noop blocks lower it.
std::vector<std::vector<double>> generate_coefficients(const SearchSpace& space,
                                                       std::uint64_t seed,
                                                       const CoefficientOptions& options = {});

// Evaluates the synthetic law. `clamped` is set when accuracy left [0, 1].
PerfTriple synth_eval(const SyntheticModel& model, const SearchSpace& space,
                      const NetworkConfig& cfg, bool* clamped = nullptr);

class SyntheticOracle final : public Oracle {
 public:
  SyntheticOracle(const SearchSpace& space, SyntheticModel model);

  PerfTriple evaluate(const NetworkConfig& cfg) const override;
  const SyntheticModel& model() const { return model_; }
  std::uint64_t clamp_count() const { return clamps_.load(); }

 private:
  const SearchSpace* space_;
  SyntheticModel model_;
  mutable std::atomic<std::uint64_t> clamps_{0};
};

// Noise level that makes a noiseless-signal predictor reach roughly
// `target_correlation` against noisy accuracy: sigma = sd(signal) *
// sqrt(1/r^2 - 1). The signal sd is taken over all configs when enumerable,
// otherwise over `sample_count` seeded samples.
double calibrate_noise_sigma(const SyntheticModel& noiseless, const SearchSpace& space,
                             double target_correlation, std::size_t sample_count = 4096);

// Forwards to another oracle and counts calls.
class CountingOracle final : public Oracle {
 public:
  explicit CountingOracle(const Oracle& inner) : inner_(&inner) {}

  PerfTriple evaluate(const NetworkConfig& cfg) const override {
    calls_.fetch_add(1);
    return inner_->evaluate(cfg);
  }
  std::uint64_t calls() const { return calls_.load(); }

 private:
  const Oracle* inner_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

// Visits every (config, perf) in lexicographic order. Throws kCapExceeded
// when the space holds more than `cap` configs.
void enumerate_all(const SearchSpace& space, const Oracle& oracle,
                   const std::function<void(const NetworkConfig&, const PerfTriple&)>& visit,
                   std::uint64_t cap = enumeration_cap());

// Uniform i.i.d. choice per node; duplicates allowed.
std::vector<NetworkConfig> sample_configs(const SearchSpace& space, std::size_t count,
                                          std::uint64_t seed, bool allow_empty = false);

}  // namespace blocknas
