#include "blocknas/estimator.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "blocknas/error.hpp"
#include "blocknas/hashing.hpp"

namespace blocknas {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr const char* kFormat = "blocknas.deltas/1";

struct SwitchPair {
  std::size_t node;
  int block;
  NetworkConfig host;
  NetworkConfig variant;
};

struct Plan {
  NetworkConfig base;
  std::vector<SwitchPair> pairs;
};

NetworkConfig resolve_base(const SearchSpace& space, const EstimateOptions& options) {
  if (!options.base_override) return base_network(space);
  const NetworkConfig& base = *options.base_override;
  space.validate_config(base);
  for (std::size_t i = 0; i < space.num_nodes(); ++i) {
    if (space.block(i, base[i]).is_noop) {
      throw Error(ErrorCode::kInvalidArgument,
                  "base block override selects a noop at node " + std::to_string(i));
    }
  }
  return base;
}

Matrix zero_matrix(const SearchSpace& space) {
  Matrix m(space.num_nodes());
  for (std::size_t i = 0; i < space.num_nodes(); ++i) m[i].assign(space.node(i).blocks.size(), 0.0);
  return m;
}

BlockDeltaTable init_table(const SearchSpace& space, const NetworkConfig& base) {
  BlockDeltaTable t;
  t.fingerprint = space.fingerprint();
  t.devices = space.devices();
  t.base_config = base;
  t.accuracy = zero_matrix(space);
  t.latency.assign(space.devices().size(), zero_matrix(space));
  t.energy.assign(space.devices().size(), zero_matrix(space));
  t.mean_flops_containing = zero_matrix(space);
  for (std::size_t i = 0; i < space.num_nodes(); ++i) {
    for (int j = 0; j < space.node(i).size(); ++j) {
      t.mean_flops_containing[i][static_cast<std::size_t>(j)] = mean_flops_containing(space, i, j);
    }
  }
  t.mean_space_flops = mean_space_flops(space);
  return t;
}

class EvaluationCache {
 public:
  explicit EvaluationCache(const Oracle& oracle) : oracle_(&oracle) {}

  const PerfTriple& get(const NetworkConfig& cfg) {
    auto key = cfg.to_dash_string();
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(std::move(key), oracle_->evaluate(cfg)).first;
    return it->second;
  }
  std::size_t size() const { return cache_.size(); }

 private:
  const Oracle* oracle_;
  std::unordered_map<std::string, PerfTriple> cache_;
};

// Visits every host of node `node` (all configs holding `base_block` there)
// in lexicographic order.
template <typename Visit>
void for_each_host(const SearchSpace& space, std::size_t node, int base_block, Visit&& visit) {
  const std::size_t m = space.num_nodes();
  std::vector<int> choices(m, 0);
  choices[node] = base_block;
  while (true) {
    visit(NetworkConfig(choices));
    std::size_t k = m;
    bool done = true;
    while (k > 0) {
      --k;
      if (k == node) continue;
      if (++choices[k] < space.node(k).size()) {
        done = false;
        break;
      }
      choices[k] = 0;
    }
    if (done) return;
  }
}

std::uint64_t host_population(const SearchSpace& space, std::size_t node) {
  std::uint64_t pop = 1;
  for (std::size_t k = 0; k < space.num_nodes(); ++k) {
    if (k == node) continue;
    const auto n = static_cast<std::uint64_t>(space.node(k).size());
    if (pop > UINT64_MAX / n) return UINT64_MAX;
    pop *= n;
  }
  return pop;
}

std::vector<NetworkConfig> sample_hosts(const SearchSpace& space, std::size_t node, int base_block,
                                        int block, const PartialSpec& spec) {
  std::vector<NetworkConfig> hosts;
  const std::uint64_t pop = host_population(space, node);
  if (spec.without_replacement && spec.sample_count >= pop) {
    for_each_host(space, node, base_block, [&](const NetworkConfig& h) { hosts.push_back(h); });
    return hosts;
  }
  Rng rng(derive_seed(spec.seed, "partial/" + std::to_string(node) + "/" + std::to_string(block)));
  std::unordered_set<std::string> drawn;
  std::vector<int> choices(space.num_nodes());
  while (hosts.size() < spec.sample_count) {
    for (std::size_t k = 0; k < space.num_nodes(); ++k) {
      choices[k] = k == node ? base_block
                             : static_cast<int>(rng.uniform_index(
                                   static_cast<std::uint64_t>(space.node(k).size())));
    }
    NetworkConfig host(choices);
    if (spec.without_replacement && !drawn.insert(host.to_dash_string()).second) continue;
    hosts.push_back(std::move(host));
  }
  return hosts;
}

Plan partial_plan(const SearchSpace& space, const NetworkConfig& base, const PartialSpec& spec) {
  if (spec.sample_count < 1) throw Error(ErrorCode::kInvalidArgument, "sample_count must be >= 1");
  Plan plan{base, {}};
  for (std::size_t i = 0; i < space.num_nodes(); ++i) {
    for (int j = 0; j < space.node(i).size(); ++j) {
      if (j == base[i]) continue;
      for (auto& host : sample_hosts(space, i, base[i], j, spec)) {
        NetworkConfig variant = host.with_choice(i, j);
        plan.pairs.push_back({i, j, std::move(host), std::move(variant)});
      }
    }
  }
  return plan;
}

Plan single_plan(const SearchSpace& space, const NetworkConfig& base, const EstimateOptions& options) {
  NetworkConfig avg = options.host_override ? *options.host_override
                                            : select_average_flops_network(space);
  space.validate_config(avg);
  Plan plan{base, {}};
  for (std::size_t i = 0; i < space.num_nodes(); ++i) {
    NetworkConfig host = avg.with_choice(i, base[i]);
    for (int j = 0; j < space.node(i).size(); ++j) {
      if (j == base[i]) continue;
      plan.pairs.push_back({i, j, host, avg.with_choice(i, j)});
    }
  }
  return plan;
}

std::uint64_t distinct_configs(const Plan& plan) {
  std::unordered_set<std::string> seen;
  seen.insert(plan.base.to_dash_string());
  for (const auto& p : plan.pairs) {
    seen.insert(p.host.to_dash_string());
    seen.insert(p.variant.to_dash_string());
  }
  return seen.size();
}

void accumulate(BlockDeltaTable& t, std::size_t i, std::size_t j, const PerfTriple& host,
                const PerfTriple& variant) {
  t.accuracy[i][j] += host.accuracy - variant.accuracy;
  for (std::size_t d = 0; d < t.devices.size(); ++d) {
    t.latency[d][i][j] += host.latency[d] - variant.latency[d];
    t.energy[d][i][j] += host.energy[d] - variant.energy[d];
  }
}

void scale_entry(BlockDeltaTable& t, std::size_t i, std::size_t j, double count) {
  t.accuracy[i][j] /= count;
  for (std::size_t d = 0; d < t.devices.size(); ++d) {
    t.latency[d][i][j] /= count;
    t.energy[d][i][j] /= count;
  }
}

BlockDeltaTable run_plan(const SearchSpace& space, const Oracle& oracle, const Plan& plan) {
  BlockDeltaTable t = init_table(space, plan.base);
  EvaluationCache cache(oracle);
  t.base_perf = cache.get(plan.base);
  Matrix counts = zero_matrix(space);
  for (const auto& p : plan.pairs) {
    const PerfTriple host = cache.get(p.host);
    const PerfTriple& variant = cache.get(p.variant);
    accumulate(t, p.node, static_cast<std::size_t>(p.block), host, variant);
    counts[p.node][static_cast<std::size_t>(p.block)] += 1.0;
  }
  for (std::size_t i = 0; i < space.num_nodes(); ++i) {
    for (std::size_t j = 0; j < counts[i].size(); ++j) {
      if (counts[i][j] > 0.0) scale_entry(t, i, j, counts[i][j]);
    }
  }
  t.evaluations = cache.size();
  return t;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (const auto& row : m) {
    json jr = json::array();
    for (double v : row) jr.push_back(std::isnan(v) ? json(nullptr) : json(v));
    out.push_back(std::move(jr));
  }
  return out;
}

Matrix matrix_from_json(const json& j) {
  Matrix m;
  for (const auto& row : j) {
    std::vector<double> r;
    for (const auto& v : row) r.push_back(v.is_null() ? kNaN : v.get<double>());
    m.push_back(std::move(r));
  }
  return m;
}

}  // namespace

const char* to_string(EstimationMode mode) {
  switch (mode) {
    case EstimationMode::kFull: return "full";
    case EstimationMode::kPartial: return "partial";
    case EstimationMode::kSingle: return "single";
  }
  return "unknown";
}

EstimationMode parse_estimation_mode(std::string_view text) {
  if (text == "full") return EstimationMode::kFull;
  if (text == "partial") return EstimationMode::kPartial;
  if (text == "single") return EstimationMode::kSingle;
  throw Error(ErrorCode::kInvalidArgument, "unknown estimation mode '" + std::string(text) + "'");
}

// --- estimators ----------------------------------------------------------

BlockDeltaTable estimate_full(const SearchSpace& space, const Oracle& oracle,
                              const EstimateOptions& options) {
  ensure_enumerable(space, options.cap, "estimate_full");
  const NetworkConfig base = resolve_base(space, options);
  BlockDeltaTable t = init_table(space, base);
  t.mode = EstimationMode::kFull;

  std::vector<PerfTriple> perf;
  perf.reserve(space.candidate_count_saturating());
  for_each_config(space, [&](const NetworkConfig& cfg) { perf.push_back(oracle.evaluate(cfg)); });
  t.base_perf = perf[config_index(space, base)];

  const std::size_t m = space.num_nodes();
  std::vector<std::uint64_t> stride(m, 1);
  for (std::size_t i = m - 1; i-- > 0;) {
    stride[i] = stride[i + 1] * static_cast<std::uint64_t>(space.node(i + 1).size());
  }
  for (std::size_t i = 0; i < m; ++i) {
    const int b = base[i];
    const double hosts = static_cast<double>(host_population(space, i));
    for (int j = 0; j < space.node(i).size(); ++j) {
      if (j == b) continue;
      for_each_host(space, i, b, [&](const NetworkConfig& host) {
        const std::uint64_t h = config_index(space, host);
        const std::uint64_t v = h + static_cast<std::uint64_t>(j - b) * stride[i];
        accumulate(t, i, static_cast<std::size_t>(j), perf[h], perf[v]);
      });
      scale_entry(t, i, static_cast<std::size_t>(j), hosts);
    }
  }
  t.evaluations = perf.size();
  return t;
}

BlockDeltaTable estimate_partial(const SearchSpace& space, const Oracle& oracle,
                                 const PartialSpec& spec, const EstimateOptions& options) {
  const NetworkConfig base = resolve_base(space, options);
  BlockDeltaTable t = run_plan(space, oracle, partial_plan(space, base, spec));
  t.mode = EstimationMode::kPartial;
  t.sample_count = spec.sample_count;
  t.seed = spec.seed;
  t.without_replacement = spec.without_replacement;
  return t;
}

BlockDeltaTable estimate_single(const SearchSpace& space, const Oracle& oracle,
                                const EstimateOptions& options) {
  const NetworkConfig base = resolve_base(space, options);
  BlockDeltaTable t = run_plan(space, oracle, single_plan(space, base, options));
  t.mode = EstimationMode::kSingle;
  t.host_network = options.host_override ? *options.host_override
                                         : select_average_flops_network(space);
  return t;
}

std::uint64_t evaluation_budget(const SearchSpace& space, EstimationMode mode,
                                const EstimateOptions& options,
                                const std::optional<PartialSpec>& partial) {
  const NetworkConfig base = resolve_base(space, options);
  switch (mode) {
    case EstimationMode::kFull:
      return space.candidate_count_saturating();
    case EstimationMode::kSingle:
      return distinct_configs(single_plan(space, base, options));
    case EstimationMode::kPartial:
      if (!partial) throw Error(ErrorCode::kInvalidArgument, "partial mode needs a PartialSpec");
      return distinct_configs(partial_plan(space, base, *partial));
  }
  return 0;
}

// --- table I/O -----------------------------------------------------------

void BlockDeltaTable::check_space(const SearchSpace& space) const {
  if (fingerprint != space.fingerprint()) {
    throw Error(ErrorCode::kFingerprintMismatch,
                "delta table fingerprint " + hex64(fingerprint) + " does not match space " +
                    hex64(space.fingerprint()));
  }
}

std::size_t BlockDeltaTable::device_index(std::string_view device) const {
  for (std::size_t d = 0; d < devices.size(); ++d) {
    if (devices[d] == device) return d;
  }
  throw Error(ErrorCode::kUnknownDevice,
              "delta table has no device '" + std::string(device) + "'");
}

json BlockDeltaTable::to_json() const {
  json mode_doc{{"kind", blocknas::to_string(mode)}};
  if (mode == EstimationMode::kPartial) {
    mode_doc["sample_count"] = sample_count;
    mode_doc["seed"] = seed;
    mode_doc["without_replacement"] = without_replacement;
  }
  json lat = json::object(), eng = json::object();
  for (std::size_t d = 0; d < devices.size(); ++d) {
    lat[devices[d]] = matrix_to_json(latency[d]);
    eng[devices[d]] = matrix_to_json(energy[d]);
  }
  json base_perf_doc{{"accuracy", base_perf.accuracy}};
  json bl = json::object(), be = json::object();
  for (std::size_t d = 0; d < devices.size(); ++d) {
    bl[devices[d]] = std::isnan(base_perf.latency[d]) ? json(nullptr) : json(base_perf.latency[d]);
    be[devices[d]] = std::isnan(base_perf.energy[d]) ? json(nullptr) : json(base_perf.energy[d]);
  }
  base_perf_doc["latency"] = bl;
  base_perf_doc["energy"] = be;
  return json{{"format", kFormat},
              {"fingerprint", hex64(fingerprint)},
              {"devices", devices},
              {"mode", mode_doc},
              {"host_network", host_network ? json(host_network->to_string()) : json(nullptr)},
              {"base_config", base_config.to_string()},
              {"base_perf", base_perf_doc},
              {"mean_space_flops", mean_space_flops},
              {"mean_flops_containing", matrix_to_json(mean_flops_containing)},
              {"accuracy", matrix_to_json(accuracy)},
              {"latency", lat},
              {"energy", eng},
              {"evaluations", evaluations}};
}

BlockDeltaTable BlockDeltaTable::from_json(const json& doc) {
  try {
    if (doc.at("format") != kFormat) {
      throw Error(ErrorCode::kParse, "unsupported delta table format");
    }
    BlockDeltaTable t;
    t.fingerprint = std::stoull(doc.at("fingerprint").get<std::string>(), nullptr, 16);
    t.devices = doc.at("devices").get<std::vector<std::string>>();
    const json& md = doc.at("mode");
    t.mode = parse_estimation_mode(md.at("kind").get<std::string>());
    t.sample_count = md.value("sample_count", std::size_t{0});
    t.seed = md.value("seed", std::uint64_t{0});
    t.without_replacement = md.value("without_replacement", false);
    if (!doc.at("host_network").is_null()) {
      t.host_network = NetworkConfig::parse(doc["host_network"].get<std::string>());
    }
    t.base_config = NetworkConfig::parse(doc.at("base_config").get<std::string>());
    const json& bp = doc.at("base_perf");
    t.base_perf.accuracy = bp.at("accuracy").get<double>();
    for (const auto& dev : t.devices) {
      const json& l = bp.at("latency").at(dev);
      const json& e = bp.at("energy").at(dev);
      t.base_perf.latency.push_back(l.is_null() ? kNaN : l.get<double>());
      t.base_perf.energy.push_back(e.is_null() ? kNaN : e.get<double>());
      t.latency.push_back(matrix_from_json(doc.at("latency").at(dev)));
      t.energy.push_back(matrix_from_json(doc.at("energy").at(dev)));
    }
    t.mean_space_flops = doc.at("mean_space_flops").get<double>();
    t.mean_flops_containing = matrix_from_json(doc.at("mean_flops_containing"));
    t.accuracy = matrix_from_json(doc.at("accuracy"));
    t.evaluations = doc.value("evaluations", std::uint64_t{0});
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed delta table: ") + e.what());
  }
}

BlockDeltaTable BlockDeltaTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open delta table " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void BlockDeltaTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

}  // namespace blocknas
