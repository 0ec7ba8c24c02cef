#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "blocknas/oracle.hpp"
#include "blocknas/searchspace.hpp"
#include "json.hpp"

namespace blocknas {

enum class EstimationMode { kFull, kPartial, kSingle };

const char* to_string(EstimationMode mode);
EstimationMode parse_estimation_mode(std::string_view text);

using Matrix = std::vector<std::vector<double>>;  // [node][block]

// Per-block performance deltas and everything the predictor needs. Deltas
// follow "base block value minus new block value", so base-block entries are
// exactly zero.
struct BlockDeltaTable {
  std::uint64_t fingerprint = 0;
  std::vector<std::string> devices;
  NetworkConfig base_config;
  PerfTriple base_perf;
  Matrix accuracy;              // raw, not FLOPs-normalized
  std::vector<Matrix> latency;  // [device][node][block]
  std::vector<Matrix> energy;   // NaN where the oracle has no energy data
  Matrix mean_flops_containing;
  double mean_space_flops = 0.0;

  EstimationMode mode = EstimationMode::kSingle;
  std::size_t sample_count = 0;  // partial mode
  std::uint64_t seed = 0;        // partial mode
  bool without_replacement = false;
  std::optional<NetworkConfig> host_network;  // single mode
  std::uint64_t evaluations = 0;              // distinct oracle calls made

  // Throws kFingerprintMismatch when the table was built for another space.
  void check_space(const SearchSpace& space) const;
  std::size_t device_index(std::string_view device) const;

  nlohmann::json to_json() const;
  static BlockDeltaTable from_json(const nlohmann::json& doc);
  static BlockDeltaTable load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct EstimateOptions {
  // Replaces every node's base block (the "--base-block" ablation).
  std::optional<NetworkConfig> base_override;
  // Single mode host instead of the average-FLOPs network.
  std::optional<NetworkConfig> host_override;
  std::uint64_t cap = enumeration_cap();
};

struct PartialSpec {
  std::size_t sample_count = 1;
  std::uint64_t seed = 0;
  // Draws distinct hosts; a count at or above the host population uses every
  // host exactly once, which reproduces full mode.
  bool without_replacement = false;
};

// Averages the switching difference over every host network that holds the
// base block at the switched node.
BlockDeltaTable estimate_full(const SearchSpace& space, const Oracle& oracle,
                              const EstimateOptions& options = {});

// Same estimator over `sample_count` uniformly sampled hosts per (node, block).
BlockDeltaTable estimate_partial(const SearchSpace& space, const Oracle& oracle,
                                 const PartialSpec& spec, const EstimateOptions& options = {});

// One switching difference per block, hosted on the average-FLOPs network.
BlockDeltaTable estimate_single(const SearchSpace& space, const Oracle& oracle,
                                const EstimateOptions& options = {});

// Exact number of distinct oracle calls the mode will make. `partial` is
// required for EstimationMode::kPartial.
std::uint64_t evaluation_budget(const SearchSpace& space, EstimationMode mode,
                                const EstimateOptions& options = {},
                                const std::optional<PartialSpec>& partial = std::nullopt);

}  // namespace blocknas
