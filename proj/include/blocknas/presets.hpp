#pragma once

#include <cstdint>
#include <string>

#include "blocknas/oracle.hpp"
#include "blocknas/searchspace.hpp"

namespace blocknas {

// NB201-style cell: 6 edge positions x 5 ops (none, skip, conv1x1, conv3x3,
// avgpool) = 15,625 configs, devices "gpu" and "cpu" with energy.
SearchSpace nb201_space(std::uint64_t seed);

// MobileNetV3-style supernet: 5 stages x 4 layers, 9 blocks per layer
// (kernel {3,5,7} x expand {3,4,6}); layers 3 and 4 of each stage can also
// be skipped. About 3.5e19 configs.
SearchSpace mbv3_space(std::uint64_t seed);

// `nodes` x `blocks` space with seeded block tables.
SearchSpace custom_space(std::size_t nodes, std::size_t blocks, std::uint64_t seed);

// Builds a preset by name: "nb201", "mbv3" or "custom:<m>x<n>".
SearchSpace preset_space(const std::string& name, std::uint64_t seed);

// Noiseless synthetic model with seeded coefficients for `space`.
SyntheticModel default_model(const SearchSpace& space, std::uint64_t seed);

}  // namespace blocknas
