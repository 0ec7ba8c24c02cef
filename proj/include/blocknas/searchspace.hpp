#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace blocknas {

// One implementation option of a block node. Latency and energy are stored
// per device in the owning space's device order; NaN marks an absent entry.
struct Block {
  double flops = 0.0;  // MFLOPs
  std::vector<double> latency;  // ms
  std::vector<double> energy;   // mJ
  double switch_cost = 0.0;     // ms charged when this block is swapped in
  bool is_noop = false;
};

struct BlockNode {
  std::vector<Block> blocks;
  int base_block = 0;

  int size() const { return static_cast<int>(blocks.size()); }
};

// A candidate network: one block index per node.
class NetworkConfig {
 public:
  NetworkConfig() = default;
  explicit NetworkConfig(std::vector<int> choices) : choices_(std::move(choices)) {}

  const std::vector<int>& choices() const { return choices_; }
  int operator[](std::size_t i) const { return choices_[i]; }
  std::size_t size() const { return choices_.size(); }

  // Returns a copy with node `node` switched to block `block`.
  NetworkConfig with_choice(std::size_t node, int block) const;

  // Canonical form "0,2,1".
  std::string to_string() const;
  // Dash-joined form "0-2-1" used inside CSV files and on the command line.
  std::string to_dash_string() const;
  // Accepts either separator.
  static NetworkConfig parse(std::string_view text);

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
  friend auto operator<=>(const NetworkConfig&, const NetworkConfig&) = default;

 private:
  std::vector<int> choices_;
};

class SearchSpace {
 public:
  // Validates every structural invariant; throws Error(kValidation).
  SearchSpace(std::string name, std::vector<std::string> devices,
              std::vector<BlockNode> nodes);

  static SearchSpace from_json(const nlohmann::json& doc);
  static SearchSpace load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  const std::string& name() const { return name_; }
  const std::vector<std::string>& devices() const { return devices_; }
  const std::vector<BlockNode>& nodes() const { return nodes_; }
  const BlockNode& node(std::size_t i) const { return nodes_[i]; }
  const Block& block(std::size_t node, int block) const {
    return nodes_[node].blocks[static_cast<std::size_t>(block)];
  }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Throws Error(kUnknownDevice) for an unlisted id.
  std::size_t device_index(std::string_view device) const;
  // True when every non-noop block carries an energy entry for the device.
  bool has_energy(std::size_t device) const;

  // Product of node sizes in decimal, computed exactly.
  std::string candidate_count() const;
  // Same product saturated at UINT64_MAX.
  std::uint64_t candidate_count_saturating() const;

  // Stable hash of the canonical JSON form.
  std::uint64_t fingerprint() const;

  // Throws Error(kConfigInvalid) naming the offending position.
  void validate_config(const NetworkConfig& cfg) const;

 private:
  std::string name_;
  std::vector<std::string> devices_;
  std::vector<BlockNode> nodes_;
};

double network_flops(const SearchSpace& space, const NetworkConfig& cfg);

// Mean of network_flops over every configuration, computed per node since
// FLOPs are block-additive.
double mean_space_flops(const SearchSpace& space);

// Mean network FLOPs over all configurations that contain block (node, block).
double mean_flops_containing(const SearchSpace& space, std::size_t node, int block);

// Per node, the non-noop block whose FLOPs is nearest the node's mean block
// FLOPs; ties go to the lower index.
NetworkConfig select_average_flops_network(const SearchSpace& space);

NetworkConfig base_network(const SearchSpace& space);

// --- enumeration ---------------------------------------------------------

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

// Honors the BLOCKNAS_CAP environment variable; falls back to the default.
std::uint64_t enumeration_cap();

// Throws Error(kCapExceeded) when the space has more than `cap` configs.
void ensure_enumerable(const SearchSpace& space, std::uint64_t cap,
                       std::string_view what);

// Mixed-radix position of a config in lexicographic order (node 0 most
// significant). Only meaningful for enumerable spaces.
std::uint64_t config_index(const SearchSpace& space, const NetworkConfig& cfg);
NetworkConfig config_from_index(const SearchSpace& space, std::uint64_t index);

// Visits every config in lexicographic order.
void for_each_config(const SearchSpace& space,
                     const std::function<void(const NetworkConfig&)>& visit);

}  // namespace blocknas
