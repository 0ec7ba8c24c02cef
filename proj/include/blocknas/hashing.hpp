#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace blocknas {

// 64-bit FNV-1a. Used for fingerprints and file hashes, where the value must
// be stable across platforms and runs (std::hash is not).
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream seed from a root seed and a textual label,
// e.g. derive_seed(seed, "estimate/partial/3/1").
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

std::string hex64(std::uint64_t value);

// Uniform double in [0, 1) from the top 53 bits of a 64-bit value.
inline double unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Standard normal deviate computed from a hash value (Box-Muller over two
// derived uniforms). Deterministic and independent of query order.
double hashed_normal(std::uint64_t key);

// Seeded generator with portable bounded sampling. std::uniform_int_distribution
// differs between standard libraries, so draws go through uniform_index.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Unbiased integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t uniform_index(std::uint64_t bound);

  double uniform01() { return unit_double(engine_()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace blocknas
