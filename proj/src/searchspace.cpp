#include "blocknas/searchspace.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "blocknas/error.hpp"
#include "blocknas/hashing.hpp"

namespace blocknas {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::kValidation, path + ": " + msg);
}

void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(path + "." + key, "unknown key");
    }
  }
}

double positive_number(const json& v, const std::string& path, bool allow_zero = false) {
  if (!v.is_number()) fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x) || x < 0.0 || (x == 0.0 && !allow_zero)) {
    fail(path, "must be a positive finite number");
  }
  return x;
}

// Noop blocks may carry zero cost.
std::vector<double> device_map(const json& obj, const std::string& path,
                               const std::vector<std::string>& devices, bool allow_zero) {
  std::vector<double> out(devices.size(), kNaN);
  if (!obj.is_object()) fail(path, "expected an object keyed by device id");
  for (const auto& [key, value] : obj.items()) {
    auto it = std::find(devices.begin(), devices.end(), key);
    if (it == devices.end()) fail(path + "." + key, "device not listed in $.devices");
    out[static_cast<std::size_t>(it - devices.begin())] =
        positive_number(value, path + "." + key, allow_zero);
  }
  return out;
}

json device_map_to_json(const std::vector<double>& values,
                        const std::vector<std::string>& devices) {
  json out = json::object();
  for (std::size_t d = 0; d < devices.size(); ++d) {
    if (!std::isnan(values[d])) out[devices[d]] = values[d];
  }
  return out;
}

}  // namespace

// --- NetworkConfig -------------------------------------------------------

NetworkConfig NetworkConfig::with_choice(std::size_t node, int block) const {
  NetworkConfig out = *this;
  out.choices_.at(node) = block;
  return out;
}

std::string NetworkConfig::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < choices_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(choices_[i]);
  }
  return out;
}

std::string NetworkConfig::to_dash_string() const {
  std::string out;
  for (std::size_t i = 0; i < choices_.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(choices_[i]);
  }
  return out;
}

NetworkConfig NetworkConfig::parse(std::string_view text) {
  std::vector<int> choices;
  std::size_t pos = 0;
  while (true) {
    std::size_t end = text.find_first_of(",-", pos);
    std::string_view tok = text.substr(pos, end == std::string_view::npos ? end : end - pos);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    int value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw Error(ErrorCode::kParse,
                  "cannot parse config '" + std::string(text) + "'");
    }
    choices.push_back(value);
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return NetworkConfig(std::move(choices));
}

// --- SearchSpace ---------------------------------------------------------

SearchSpace::SearchSpace(std::string name, std::vector<std::string> devices,
                         std::vector<BlockNode> nodes)
    : name_(std::move(name)), devices_(std::move(devices)), nodes_(std::move(nodes)) {
  if (nodes_.empty()) fail("$.nodes", "at least one node is required");
  std::set<std::string> seen(devices_.begin(), devices_.end());
  if (seen.size() != devices_.size()) fail("$.devices", "duplicate device id");

  bool some_node_without_noop = false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    BlockNode& node = nodes_[i];
    const std::string npath = "$.nodes[" + std::to_string(i) + "]";
    if (node.blocks.empty()) fail(npath + ".blocks", "at least one block is required");
    if (node.base_block < 0 || node.base_block >= node.size()) {
      fail(npath + ".base_block", "out of range");
    }
    int noops = 0;
    for (std::size_t j = 0; j < node.blocks.size(); ++j) {
      Block& b = node.blocks[j];
      const std::string bpath = npath + ".blocks[" + std::to_string(j) + "]";
      b.latency.resize(devices_.size(), kNaN);
      b.energy.resize(devices_.size(), kNaN);
      if (b.switch_cost < 0.0 || !std::isfinite(b.switch_cost)) {
        fail(bpath + ".switch_cost", "must be non-negative");
      }
      if (b.is_noop) {
        ++noops;
        if (b.flops != 0.0) fail(bpath + ".flops", "noop block must have zero flops");
        if (static_cast<int>(j) == node.base_block) {
          fail(npath + ".base_block", "base block cannot be a noop");
        }
        // A skipped node costs nothing unless measured otherwise.
        for (auto& v : b.latency) if (std::isnan(v)) v = 0.0;
        for (auto& v : b.energy) if (std::isnan(v)) v = 0.0;
        continue;
      }
      if (!(b.flops > 0.0) || !std::isfinite(b.flops)) {
        fail(bpath + ".flops", "must be a positive finite number");
      }
      for (std::size_t d = 0; d < devices_.size(); ++d) {
        if (std::isnan(b.latency[d])) {
          fail(bpath + ".latency", "missing device '" + devices_[d] + "'");
        }
      }
    }
    if (noops > 1) fail(npath, "at most one noop block per node");
    if (noops == 0) some_node_without_noop = true;
  }
  // With a noop at every node the all-skip config would have zero FLOPs.
  if (!some_node_without_noop) fail("$.nodes", "at least one node must have no noop block");
}

SearchSpace SearchSpace::from_json(const json& doc) {
  reject_unknown_keys(doc, "$", {"name", "devices", "nodes"});
  std::string name;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) fail("$.name", "expected a string");
    name = doc["name"].get<std::string>();
  }
  if (!doc.contains("devices") || !doc["devices"].is_array()) {
    fail("$.devices", "expected an array of device ids");
  }
  std::vector<std::string> devices;
  for (std::size_t d = 0; d < doc["devices"].size(); ++d) {
    const auto& v = doc["devices"][d];
    if (!v.is_string()) fail("$.devices[" + std::to_string(d) + "]", "expected a string");
    devices.push_back(v.get<std::string>());
  }
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) {
    fail("$.nodes", "expected an array");
  }
  std::vector<BlockNode> nodes;
  for (std::size_t i = 0; i < doc["nodes"].size(); ++i) {
    const json& jn = doc["nodes"][i];
    const std::string npath = "$.nodes[" + std::to_string(i) + "]";
    reject_unknown_keys(jn, npath, {"base_block", "blocks"});
    BlockNode node;
    if (jn.contains("base_block")) {
      if (!jn["base_block"].is_number_integer()) fail(npath + ".base_block", "expected an integer");
      node.base_block = jn["base_block"].get<int>();
    }
    if (!jn.contains("blocks") || !jn["blocks"].is_array()) {
      fail(npath + ".blocks", "expected an array");
    }
    for (std::size_t j = 0; j < jn["blocks"].size(); ++j) {
      const json& jb = jn["blocks"][j];
      const std::string bpath = npath + ".blocks[" + std::to_string(j) + "]";
      reject_unknown_keys(jb, bpath, {"flops", "latency", "energy", "switch_cost", "noop"});
      Block b;
      if (jb.contains("noop")) {
        if (!jb["noop"].is_boolean()) fail(bpath + ".noop", "expected a boolean");
        b.is_noop = jb["noop"].get<bool>();
      }
      if (jb.contains("flops")) {
        if (!jb["flops"].is_number()) fail(bpath + ".flops", "expected a number");
        b.flops = jb["flops"].get<double>();
      } else if (!b.is_noop) {
        fail(bpath + ".flops", "required");
      }
      b.latency = jb.contains("latency")
                      ? device_map(jb["latency"], bpath + ".latency", devices, b.is_noop)
                      : std::vector<double>(devices.size(), kNaN);
      b.energy = jb.contains("energy")
                     ? device_map(jb["energy"], bpath + ".energy", devices, b.is_noop)
                     : std::vector<double>(devices.size(), kNaN);
      if (jb.contains("switch_cost")) {
        if (!jb["switch_cost"].is_number()) fail(bpath + ".switch_cost", "expected a number");
        b.switch_cost = jb["switch_cost"].get<double>();
      }
      node.blocks.push_back(std::move(b));
    }
    nodes.push_back(std::move(node));
  }
  return SearchSpace(std::move(name), std::move(devices), std::move(nodes));
}

SearchSpace SearchSpace::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open space file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return from_json(doc);
}

json SearchSpace::to_json() const {
  json nodes = json::array();
  for (const auto& node : nodes_) {
    json blocks = json::array();
    for (const auto& b : node.blocks) {
      json jb;
      jb["flops"] = b.flops;
      jb["latency"] = device_map_to_json(b.latency, devices_);
      jb["energy"] = device_map_to_json(b.energy, devices_);
      if (b.switch_cost != 0.0) jb["switch_cost"] = b.switch_cost;
      if (b.is_noop) jb["noop"] = true;
      blocks.push_back(std::move(jb));
    }
    json jn;
    jn["base_block"] = node.base_block;
    jn["blocks"] = std::move(blocks);
    nodes.push_back(std::move(jn));
  }
  return json{{"name", name_}, {"devices", devices_}, {"nodes", std::move(nodes)}};
}

void SearchSpace::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

std::size_t SearchSpace::device_index(std::string_view device) const {
  auto it = std::find(devices_.begin(), devices_.end(), device);
  if (it == devices_.end()) {
    throw Error(ErrorCode::kUnknownDevice, "unknown device '" + std::string(device) + "'");
  }
  return static_cast<std::size_t>(it - devices_.begin());
}

bool SearchSpace::has_energy(std::size_t device) const {
  for (const auto& node : nodes_) {
    for (const auto& b : node.blocks) {
      if (std::isnan(b.energy.at(device))) return false;
    }
  }
  return true;
}

std::string SearchSpace::candidate_count() const {
  boost::multiprecision::cpp_int count = 1;
  for (const auto& node : nodes_) count *= node.size();
  return count.str();
}

std::uint64_t SearchSpace::candidate_count_saturating() const {
  std::uint64_t count = 1;
  for (const auto& node : nodes_) {
    const auto n = static_cast<std::uint64_t>(node.size());
    if (count > UINT64_MAX / n) return UINT64_MAX;
    count *= n;
  }
  return count;
}

std::uint64_t SearchSpace::fingerprint() const { return fnv1a64(to_json().dump()); }

void SearchSpace::validate_config(const NetworkConfig& cfg) const {
  if (cfg.size() != nodes_.size()) {
    throw Error(ErrorCode::kConfigInvalid,
                "config '" + cfg.to_string() + "' has " + std::to_string(cfg.size()) +
                    " entries, space has " + std::to_string(nodes_.size()) + " nodes");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (cfg[i] < 0 || cfg[i] >= nodes_[i].size()) {
      throw Error(ErrorCode::kConfigInvalid,
                  "config '" + cfg.to_string() + "': choice " + std::to_string(cfg[i]) +
                      " out of range at node " + std::to_string(i));
    }
  }
}

// --- FLOPs arithmetic ----------------------------------------------------

double network_flops(const SearchSpace& space, const NetworkConfig& cfg) {
  space.validate_config(cfg);
  double total = 0.0;
  for (std::size_t i = 0; i < space.num_nodes(); ++i) total += space.block(i, cfg[i]).flops;
  return total;
}

namespace {
double node_mean_flops(const BlockNode& node) {
  double s = 0.0;
  for (const auto& b : node.blocks) s += b.flops;
  return s / static_cast<double>(node.blocks.size());
}
}  // namespace

double mean_space_flops(const SearchSpace& space) {
  double total = 0.0;
  for (const auto& node : space.nodes()) total += node_mean_flops(node);
  return total;
}

double mean_flops_containing(const SearchSpace& space, std::size_t node, int block) {
  if (node >= space.num_nodes() || block < 0 || block >= space.node(node).size()) {
    throw Error(ErrorCode::kConfigInvalid, "block (" + std::to_string(node) + "," +
                                               std::to_string(block) + ") out of range");
  }
  double total = space.block(node, block).flops;
  for (std::size_t k = 0; k < space.num_nodes(); ++k) {
    if (k != node) total += node_mean_flops(space.node(k));
  }
  return total;
}

NetworkConfig select_average_flops_network(const SearchSpace& space) {
  std::vector<int> choices;
  choices.reserve(space.num_nodes());
  for (std::size_t i = 0; i < space.num_nodes(); ++i) {
    const BlockNode& node = space.node(i);
    const double mean = node_mean_flops(node);
    int best = -1;
    double best_dist = 0.0;
    for (int j = 0; j < node.size(); ++j) {
      const Block& b = node.blocks[static_cast<std::size_t>(j)];
      if (b.is_noop) continue;
      const double dist = std::abs(b.flops - mean);
      if (best < 0 || dist < best_dist) {
        best = j;
        best_dist = dist;
      }
    }
    if (best < 0) {
      throw Error(ErrorCode::kDegenerateNode,
                  "node " + std::to_string(i) + " has no non-noop block");
    }
    choices.push_back(best);
  }
  return NetworkConfig(std::move(choices));
}

NetworkConfig base_network(const SearchSpace& space) {
  std::vector<int> choices;
  for (const auto& node : space.nodes()) choices.push_back(node.base_block);
  return NetworkConfig(std::move(choices));
}

// --- enumeration ---------------------------------------------------------

std::uint64_t enumeration_cap() {
  if (const char* env = std::getenv("BLOCKNAS_CAP")) {
    std::uint64_t value = 0;
    std::string_view s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec == std::errc() && ptr == s.data() + s.size() && value > 0) return value;
    throw Error(ErrorCode::kInvalidArgument, "BLOCKNAS_CAP must be a positive integer");
  }
  return kDefaultEnumerationCap;
}

void ensure_enumerable(const SearchSpace& space, std::uint64_t cap, std::string_view what) {
  if (space.candidate_count_saturating() > cap) {
    throw Error(ErrorCode::kCapExceeded,
                std::string(what) + ": space has " + space.candidate_count() +
                    " configs, above the enumeration cap of " + std::to_string(cap) +
                    "; sample instead (or raise BLOCKNAS_CAP)");
  }
}

std::uint64_t config_index(const SearchSpace& space, const NetworkConfig& cfg) {
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < space.num_nodes(); ++i) {
    idx = idx * static_cast<std::uint64_t>(space.node(i).size()) +
          static_cast<std::uint64_t>(cfg[i]);
  }
  return idx;
}

NetworkConfig config_from_index(const SearchSpace& space, std::uint64_t index) {
  std::vector<int> choices(space.num_nodes());
  for (std::size_t i = space.num_nodes(); i-- > 0;) {
    const auto n = static_cast<std::uint64_t>(space.node(i).size());
    choices[i] = static_cast<int>(index % n);
    index /= n;
  }
  return NetworkConfig(std::move(choices));
}

void for_each_config(const SearchSpace& space,
                     const std::function<void(const NetworkConfig&)>& visit) {
  std::vector<int> choices(space.num_nodes(), 0);
  while (true) {
    visit(NetworkConfig(choices));
    std::size_t i = space.num_nodes();
    while (i > 0) {
      --i;
      if (++choices[i] < space.node(i).size()) break;
      choices[i] = 0;
      if (i == 0) return;
    }
  }
}

}  // namespace blocknas
