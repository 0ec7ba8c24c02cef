#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "blocknas/estimator.hpp"
#include "blocknas/hashing.hpp"
#include "blocknas/oracle.hpp"
#include "blocknas/searchspace.hpp"

namespace blocknas::fixtures {

// Random m x n space with devices "gpu" (energy) and "cpu" (no energy).
// With const_flops, all blocks share FLOPs, so every network has the same F.
inline SearchSpace random_space(std::size_t m, std::size_t n, std::uint64_t seed,
                                bool const_flops = false) {
  Rng rng(seed);
  std::vector<BlockNode> nodes(m);
  for (auto& node : nodes) {
    for (std::size_t j = 0; j < n; ++j) {
      Block b;
      b.flops = const_flops ? 10.0 : rng.uniform(1.0, 20.0);
      b.latency = {rng.uniform(0.5, 5.0), rng.uniform(1.0, 10.0)};
      b.energy = {rng.uniform(1.0, 8.0), std::numeric_limits<double>::quiet_NaN()};
      b.switch_cost = rng.uniform(0.1, 1.0);
      node.blocks.push_back(b);
    }
    node.base_block = static_cast<int>(rng.uniform_index(n));
  }
  return SearchSpace("random", {"gpu", "cpu"}, std::move(nodes));
}

inline SyntheticModel noiseless_model(const SearchSpace& space, std::uint64_t seed) {
  SyntheticModel m;
  m.seed = seed;
  m.accuracy_coefficients = generate_coefficients(space, seed);
  return m;
}

inline std::vector<NetworkConfig> all_configs(const SearchSpace& space) {
  std::vector<NetworkConfig> out;
  for_each_config(space, [&](const NetworkConfig& c) { out.push_back(c); });
  return out;
}

// Delta table with random entries (zero at base blocks) for solver tests.
// Latency deltas are drawn in [-2, 2] around a base latency of 10 ms.
inline BlockDeltaTable random_table(const SearchSpace& space, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t m = space.num_nodes();
  BlockDeltaTable t;
  t.fingerprint = space.fingerprint();
  t.devices = space.devices();
  std::vector<int> base;
  for (std::size_t i = 0; i < m; ++i) base.push_back(space.node(i).base_block);
  t.base_config = NetworkConfig(base);
  t.base_perf = {0.7, {10.0, 20.0}, {8.0, std::numeric_limits<double>::quiet_NaN()}};
  t.mean_space_flops = mean_space_flops(space);
  t.accuracy.resize(m);
  t.latency.assign(2, Matrix(m));
  t.energy.assign(2, Matrix(m));
  t.mean_flops_containing.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& node = space.node(i);
    double node_mean = 0.0;
    for (const auto& b : node.blocks) node_mean += b.flops / node.blocks.size();
    for (std::size_t j = 0; j < node.blocks.size(); ++j) {
      const bool is_base = static_cast<int>(j) == node.base_block;
      t.accuracy[i].push_back(is_base ? 0.0 : rng.uniform(-0.05, 0.05));
      t.latency[0][i].push_back(is_base ? 0.0 : rng.uniform(-2.0, 2.0));
      t.latency[1][i].push_back(is_base ? 0.0 : rng.uniform(-2.0, 2.0));
      t.energy[0][i].push_back(is_base ? 0.0 : rng.uniform(-1.0, 1.0));
      t.energy[1][i].push_back(std::numeric_limits<double>::quiet_NaN());
      t.mean_flops_containing[i].push_back(t.mean_space_flops - node_mean + node.blocks[j].flops);
    }
  }
  return t;
}

}  // namespace blocknas::fixtures
