#pragma once

#include <string>
#include <vector>

#include "blocknas/estimator.hpp"
#include "blocknas/searchspace.hpp"
#include "json.hpp"

namespace blocknas {

// What one node's chosen block subtracts from the base performance.
struct NodeContribution {
  double accuracy = 0.0;  // FLOPs-scaled when predict() produced it
  double latency = 0.0;
  double energy = 0.0;
};

struct Prediction {
  NetworkConfig config;
  std::string device;
  double accuracy = 0.0;  // clamped to [0, 1]
  double accuracy_unclamped = 0.0;
  bool clamped = false;
  double latency = 0.0;
  double energy = 0.0;  // NaN when the table has no energy for the device
  double flops = 0.0;
  std::vector<NodeContribution> components;

  nlohmann::json to_json() const;
};

// Closed-form prediction:
//   lat = lat(base) - sum_i dL[i][c_i]        (energy likewise)
//   acc = acc(base) - sum_i dA[i][c_i] * Fc[i][c_i] / F(cfg)
// where Fc is the mean FLOPs of configs holding that block.
Prediction predict(const BlockDeltaTable& table, const SearchSpace& space,
                   const NetworkConfig& cfg, std::string_view device);

// Same, but accuracy deltas are summed without the FLOPs ratio.
Prediction predict_no_flops_scaling(const BlockDeltaTable& table, const SearchSpace& space,
                                    const NetworkConfig& cfg, std::string_view device);

// Element-wise predict(); an error names the failing index.
std::vector<Prediction> predict_batch(const BlockDeltaTable& table, const SearchSpace& space,
                                      const std::vector<NetworkConfig>& configs,
                                      std::string_view device);

}  // namespace blocknas
