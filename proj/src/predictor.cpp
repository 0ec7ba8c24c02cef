#include "blocknas/predictor.hpp"

#include <algorithm>
#include <cmath>

#include "blocknas/error.hpp"

namespace blocknas {

using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

Prediction predict_impl(const BlockDeltaTable& table, const SearchSpace& space,
                        const NetworkConfig& cfg, std::string_view device, bool flops_scaling) {
  table.check_space(space);
  const std::size_t d = table.device_index(device);
  space.validate_config(cfg);

  Prediction p;
  p.config = cfg;
  p.device = std::string(device);
  p.flops = network_flops(space, cfg);
  p.components.resize(cfg.size());

  double acc = table.base_perf.accuracy;
  double lat = table.base_perf.latency[d];
  double eng = table.base_perf.energy[d];
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const auto j = static_cast<std::size_t>(cfg[i]);
    NodeContribution& c = p.components[i];
    c.accuracy = table.accuracy[i][j];
    if (flops_scaling) c.accuracy *= table.mean_flops_containing[i][j] / p.flops;
    c.latency = table.latency[d][i][j];
    c.energy = table.energy[d][i][j];
    acc -= c.accuracy;
    lat -= c.latency;
    eng -= c.energy;
  }
  p.accuracy_unclamped = acc;
  p.accuracy = std::clamp(acc, 0.0, 1.0);
  p.clamped = p.accuracy != acc;
  p.latency = lat;
  p.energy = eng;
  return p;
}

}  // namespace

json Prediction::to_json() const {
  json comps = json::array();
  for (const auto& c : components) {
    comps.push_back({{"accuracy", c.accuracy},
                     {"latency", c.latency},
                     {"energy", number_or_null(c.energy)}});
  }
  return json{{"config", config.to_string()},
              {"device", device},
              {"accuracy", accuracy},
              {"accuracy_unclamped", accuracy_unclamped},
              {"clamped", clamped},
              {"latency", latency},
              {"energy", number_or_null(energy)},
              {"flops", flops},
              {"components", comps}};
}

Prediction predict(const BlockDeltaTable& table, const SearchSpace& space,
                   const NetworkConfig& cfg, std::string_view device) {
  return predict_impl(table, space, cfg, device, true);
}

Prediction predict_no_flops_scaling(const BlockDeltaTable& table, const SearchSpace& space,
                                    const NetworkConfig& cfg, std::string_view device) {
  return predict_impl(table, space, cfg, device, false);
}

std::vector<Prediction> predict_batch(const BlockDeltaTable& table, const SearchSpace& space,
                                      const std::vector<NetworkConfig>& configs,
                                      std::string_view device) {
  std::vector<Prediction> out;
  out.reserve(configs.size());
  for (std::size_t k = 0; k < configs.size(); ++k) {
    try {
      out.push_back(predict(table, space, configs[k], device));
    } catch (const Error& e) {
      throw Error(e.code(), "config #" + std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace blocknas
