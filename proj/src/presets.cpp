#include "blocknas/presets.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "blocknas/error.hpp"
#include "blocknas/hashing.hpp"

namespace blocknas {

namespace {

// Multiplicative jitter in [1 - spread, 1 + spread].
double jitter(Rng& rng, double spread) { return rng.uniform(1.0 - spread, 1.0 + spread); }

Block make_block(double flops, Rng& rng, double gpu_ms_per_mflop, double gpu_fixed,
                 double cpu_ms_per_mflop, double cpu_fixed) {
  Block b;
  b.flops = flops;
  const double gpu = (gpu_fixed + gpu_ms_per_mflop * flops) * jitter(rng, 0.1);
  const double cpu = (cpu_fixed + cpu_ms_per_mflop * flops) * jitter(rng, 0.1);
  b.latency = {gpu, cpu};
  b.energy = {gpu * 2.5 * jitter(rng, 0.05), cpu * 0.8 * jitter(rng, 0.05)};
  b.switch_cost = 0.2 + 0.05 * flops * jitter(rng, 0.2);
  return b;
}

// Base block = the non-noop block nearest the node's mean FLOPs, so the base
// network coincides with the average-FLOPs network.
void use_average_as_base(BlockNode& node) {
  double mean = 0.0;
  for (const auto& b : node.blocks) mean += b.flops;
  mean /= node.size();
  int best = -1;
  for (int j = 0; j < node.size(); ++j) {
    const Block& b = node.blocks[static_cast<std::size_t>(j)];
    if (b.is_noop) continue;
    if (best < 0 || std::abs(b.flops - mean) <
                        std::abs(node.blocks[static_cast<std::size_t>(best)].flops - mean)) {
      best = j;
    }
  }
  node.base_block = best;
}

Block noop_block() {
  Block b;
  b.is_noop = true;
  b.latency = {0.0, 0.0};
  b.energy = {0.0, 0.0};
  return b;
}

}  // namespace

SearchSpace nb201_space(std::uint64_t seed) {
  // none, skip, conv1x1, conv3x3, avgpool; every op also carries a share of
  // the stem and classifier cost, so no op is free.
  constexpr std::array<double, 5> kOpFlops{0.4, 0.4, 4.0, 12.0, 1.0};
  constexpr double kStemShare = 6.0;
  Rng rng(derive_seed(seed, "preset/nb201"));
  std::vector<BlockNode> nodes;
  for (int edge = 0; edge < 6; ++edge) {
    BlockNode node;
    for (double f : kOpFlops) {
      const double flops = kStemShare + f * jitter(rng, 0.15);
      node.blocks.push_back(make_block(flops, rng, 0.35, 0.5, 1.6, 1.0));
    }
    use_average_as_base(node);
    nodes.push_back(std::move(node));
  }
  return SearchSpace("nb201", {"gpu", "cpu"}, std::move(nodes));
}

SearchSpace mbv3_space(std::uint64_t seed) {
  constexpr std::array<double, 5> kStageScale{1.0, 1.6, 2.2, 3.0, 4.2};
  constexpr std::array<int, 3> kKernels{3, 5, 7};
  constexpr std::array<int, 3> kExpand{3, 4, 6};
  Rng rng(derive_seed(seed, "preset/mbv3"));
  std::vector<BlockNode> nodes;
  for (int stage = 0; stage < 5; ++stage) {
    for (int layer = 0; layer < 4; ++layer) {
      BlockNode node;
      for (int k : kKernels) {
        for (int e : kExpand) {
          // Pointwise convs scale with expand; depthwise with expand * k^2.
          const double flops =
              kStageScale[stage] * (2.0 * e + 0.12 * e * k * k) * jitter(rng, 0.05);
          node.blocks.push_back(make_block(flops, rng, 0.02, 0.05, 0.12, 0.2));
        }
      }
      if (layer >= 2) node.blocks.push_back(noop_block());
      use_average_as_base(node);
      nodes.push_back(std::move(node));
    }
  }
  return SearchSpace("mbv3", {"gpu", "cpu"}, std::move(nodes));
}

SearchSpace custom_space(std::size_t num_nodes, std::size_t num_blocks, std::uint64_t seed) {
  if (num_nodes == 0 || num_blocks == 0) {
    throw Error(ErrorCode::kInvalidArgument, "custom space needs at least one node and block");
  }
  Rng rng(derive_seed(seed, "preset/custom"));
  std::vector<BlockNode> nodes(num_nodes);
  for (auto& node : nodes) {
    for (std::size_t j = 0; j < num_blocks; ++j) {
      node.blocks.push_back(make_block(rng.uniform(1.0, 10.0), rng, 0.5, 0.2, 2.0, 0.5));
    }
    use_average_as_base(node);
  }
  return SearchSpace("custom", {"gpu", "cpu"}, std::move(nodes));
}

SearchSpace preset_space(const std::string& name, std::uint64_t seed) {
  if (name == "nb201") return nb201_space(seed);
  if (name == "mbv3") return mbv3_space(seed);
  if (name.rfind("custom:", 0) == 0) {
    const std::string dims = name.substr(7);
    const auto x = dims.find('x');
    try {
      if (x == std::string::npos) throw std::invalid_argument(dims);
      std::size_t used = 0;
      const auto m = std::stoul(dims.substr(0, x), &used);
      if (used != x) throw std::invalid_argument(dims);
      const auto n = std::stoul(dims.substr(x + 1), &used);
      if (used != dims.size() - x - 1) throw std::invalid_argument(dims);
      return custom_space(m, n, seed);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, "bad custom preset '" + name + "', want custom:MxN");
    }
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown preset '" + name + "' (nb201, mbv3, custom:MxN)");
}

SyntheticModel default_model(const SearchSpace& space, std::uint64_t seed) {
  SyntheticModel m;
  m.seed = seed;
  m.accuracy_coefficients = generate_coefficients(space, seed);
  return m;
}

}  // namespace blocknas
