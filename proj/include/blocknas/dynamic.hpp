#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "blocknas/estimator.hpp"
#include "blocknas/ilp.hpp"
#include "blocknas/searchspace.hpp"
#include "json.hpp"

namespace blocknas {

// Blocks shipped to a device, per node (ascending indices).
struct DeploymentPlan {
  std::vector<std::vector<int>> blocks;
  std::vector<std::string> warnings;

  // Product of per-node block counts, in decimal.
  std::string reachable_count() const;
  std::uint64_t reachable_count_saturating() const;
  bool contains(const NetworkConfig& cfg) const;
  // Mask in the form SearchOptions::allowed expects.
  std::vector<std::vector<bool>> allowed_mask(const SearchSpace& space) const;

  nlohmann::json to_json() const;
};

// Per node: the base block plus the blocks non-dominated on (dA, -dL), thinned
// to at most k in total by hypervolume contribution (the least contributor is
// dropped first, the higher index on ties). k >= n_i deploys every block.
DeploymentPlan select_deployment_blocks(const SearchSpace& space, const BlockDeltaTable& table,
                                        std::string_view device, std::size_t k);

struct TraceEvent {
  double time_ms = 0.0;
  double budget_ms = 0.0;
  // Runtime slowdown applied to every predicted latency; 1 means none.
  double lat_scale = 1.0;
};

// CSV with header "time_ms,budget_ms[,lat_scale]"; times strictly increasing.
std::vector<TraceEvent> parse_trace(std::istream& in, const std::string& source = "<stream>");
std::vector<TraceEvent> load_trace(const std::filesystem::path& path);

enum class SwitchStatus { kSwitched, kDegraded };

const char* to_string(SwitchStatus status);

struct SwitchEvent {
  double time_ms = 0.0;
  double budget_ms = 0.0;
  NetworkConfig old_config;
  NetworkConfig new_config;
  std::vector<std::size_t> changed_nodes;
  double switch_cost_ms = 0.0;
  double search_ms = 0.0;  // wall time, excluded from determinism
  double predicted_latency = 0.0;  // new config, scaled
  SwitchStatus status = SwitchStatus::kSwitched;
};

struct SimulationReport {
  std::vector<SwitchEvent> events;
  NetworkConfig final_config;
  std::size_t violations = 0;
  std::size_t degraded = 0;
  double total_switch_cost_ms = 0.0;

  nlohmann::json to_json() const;
};

// Switch cost of moving between configs: the switch_cost of every block
// entered at a node that changed.
double switch_cost(const SearchSpace& space, const NetworkConfig& from, const NetworkConfig& to);
std::vector<std::size_t> changed_nodes(const NetworkConfig& from, const NetworkConfig& to);

struct SimulateOptions {
  ObjectiveForm objective_form = ObjectiveForm::kEq6GlobalMeanFlops;
  double time_limit = 10.0;
};

// Replays the trace. Whenever the current config's predicted latency exceeds
// the budget, re-searches within the plan; when nothing in the plan fits,
// falls back to the plan's minimum-latency config and marks it degraded.
SimulationReport simulate(const SearchSpace& space, const BlockDeltaTable& table,
                          std::string_view device, const DeploymentPlan& plan,
                          const std::vector<TraceEvent>& trace, const NetworkConfig& initial,
                          const SimulateOptions& options = {});

}  // namespace blocknas
