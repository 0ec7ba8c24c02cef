#include "blocknas/dynamic.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "blocknas/error.hpp"

namespace blocknas {

using nlohmann::json;

namespace {

struct Point {
  double x;  // dA, lower is better
  double y;  // -dL, lower is better
  int block;
};

bool dominates(const Point& a, const Point& b) {
  return a.x <= b.x && a.y <= b.y && (a.x < b.x || a.y < b.y);
}

std::vector<Point> nondominated(const std::vector<Point>& pts) {
  std::vector<Point> out;
  for (const auto& p : pts) {
    if (std::none_of(pts.begin(), pts.end(), [&](const Point& q) { return dominates(q, p); })) {
      out.push_back(p);
    }
  }
  return out;
}

// Exclusive 2-D hypervolume contribution of each point of a mutually
// non-dominated set, against reference point (rx, ry).
std::vector<double> hv_contributions(const std::vector<Point>& layer, double rx, double ry) {
  std::vector<std::size_t> order(layer.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (layer[a].x != layer[b].x) return layer[a].x < layer[b].x;
    return layer[a].block < layer[b].block;
  });
  std::vector<double> contrib(layer.size(), 0.0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Point& p = layer[order[k]];
    const double next_x = k + 1 < order.size() ? layer[order[k + 1]].x : rx;
    const double prev_y = k > 0 ? layer[order[k - 1]].y : ry;
    contrib[order[k]] = std::max(0.0, next_x - p.x) * std::max(0.0, prev_y - p.y);
  }
  return contrib;
}

// Keeps `slots` points of a layer by repeatedly dropping the smallest
// hypervolume contributor (the higher block index on ties).
std::vector<Point> thin_layer(std::vector<Point> layer, std::size_t slots, double rx, double ry) {
  while (layer.size() > slots) {
    const auto c = hv_contributions(layer, rx, ry);
    std::size_t worst = 0;
    for (std::size_t k = 1; k < layer.size(); ++k) {
      if (c[k] < c[worst] || (c[k] == c[worst] && layer[k].block > layer[worst].block)) worst = k;
    }
    layer.erase(layer.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  return layer;
}

double parse_field(const std::string& text, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::kParse, where + ": cannot parse number '" + text + "'");
  }
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

// --- plan ----------------------------------------------------------------

std::string DeploymentPlan::reachable_count() const {
  boost::multiprecision::cpp_int n = 1;
  for (const auto& b : blocks) n *= b.size();
  return n.str();
}

std::uint64_t DeploymentPlan::reachable_count_saturating() const {
  std::uint64_t n = 1;
  for (const auto& b : blocks) {
    const auto k = static_cast<std::uint64_t>(b.size());
    if (k != 0 && n > UINT64_MAX / k) return UINT64_MAX;
    n *= k;
  }
  return n;
}

bool DeploymentPlan::contains(const NetworkConfig& cfg) const {
  if (cfg.size() != blocks.size()) return false;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    if (!std::binary_search(blocks[i].begin(), blocks[i].end(), cfg[i])) return false;
  }
  return true;
}

std::vector<std::vector<bool>> DeploymentPlan::allowed_mask(const SearchSpace& space) const {
  std::vector<std::vector<bool>> mask(space.num_nodes());
  for (std::size_t i = 0; i < space.num_nodes(); ++i) {
    mask[i].assign(space.node(i).blocks.size(), false);
    for (int j : blocks[i]) mask[i][static_cast<std::size_t>(j)] = true;
  }
  return mask;
}

json DeploymentPlan::to_json() const {
  return json{{"blocks", blocks},
              {"reachable_count", reachable_count()},
              {"warnings", warnings}};
}

DeploymentPlan select_deployment_blocks(const SearchSpace& space, const BlockDeltaTable& table,
                                        std::string_view device, std::size_t k) {
  table.check_space(space);
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  const std::size_t d = table.device_index(device);
  DeploymentPlan plan;
  for (std::size_t i = 0; i < space.num_nodes(); ++i) {
    const int n = space.node(i).size();
    const int base = table.base_config[i];
    std::size_t ki = k;
    if (k > static_cast<std::size_t>(n)) {
      ki = static_cast<std::size_t>(n);
      plan.warnings.push_back("node " + std::to_string(i) + ": k=" + std::to_string(k) +
                              " exceeds its " + std::to_string(n) + " blocks; using " +
                              std::to_string(n));
    }
    std::vector<int> chosen;
    if (ki == static_cast<std::size_t>(n)) {
      for (int j = 0; j < n; ++j) chosen.push_back(j);
      plan.blocks.push_back(chosen);
      continue;
    }
    chosen.push_back(base);
    std::vector<Point> all;
    double rx = -std::numeric_limits<double>::infinity(), ry = rx;
    double lx = std::numeric_limits<double>::infinity(), ly = lx;
    for (int j = 0; j < n; ++j) {
      const Point p{table.accuracy[i][static_cast<std::size_t>(j)],
                    -table.latency[d][i][static_cast<std::size_t>(j)], j};
      rx = std::max(rx, p.x);
      ry = std::max(ry, p.y);
      lx = std::min(lx, p.x);
      ly = std::min(ly, p.y);
      all.push_back(p);
    }
    // Reference point a tenth of the range beyond the worst corner.
    rx += 0.1 * (rx - lx) + 1e-12;
    ry += 0.1 * (ry - ly) + 1e-12;
    auto front = nondominated(all);
    front.erase(std::remove_if(front.begin(), front.end(),
                               [&](const Point& p) { return p.block == base; }),
                front.end());
    for (const auto& p : thin_layer(std::move(front), ki - 1, rx, ry)) chosen.push_back(p.block);
    std::sort(chosen.begin(), chosen.end());
    plan.blocks.push_back(std::move(chosen));
  }
  return plan;
}

// --- trace ---------------------------------------------------------------

std::vector<TraceEvent> parse_trace(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  bool has_scale = false, header = false;
  std::vector<TraceEvent> out;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(trim(cell));
    const std::string where = source + ":" + std::to_string(lineno);
    if (!header) {
      if (f.size() < 2 || f[0] != "time_ms" || f[1] != "budget_ms" ||
          (f.size() == 3 && f[2] != "lat_scale") || f.size() > 3) {
        throw Error(ErrorCode::kParse, where + ": expected header time_ms,budget_ms[,lat_scale]");
      }
      has_scale = f.size() == 3;
      header = true;
      continue;
    }
    if (f.size() != (has_scale ? 3u : 2u)) {
      throw Error(ErrorCode::kParse, where + ": wrong number of fields");
    }
    TraceEvent e;
    e.time_ms = parse_field(f[0], where);
    e.budget_ms = parse_field(f[1], where);
    if (has_scale) e.lat_scale = parse_field(f[2], where);
    if (!(e.budget_ms > 0.0) || !(e.lat_scale > 0.0)) {
      throw Error(ErrorCode::kParse, where + ": budget and lat_scale must be positive");
    }
    if (!out.empty() && !(e.time_ms > out.back().time_ms)) {
      throw Error(ErrorCode::kParse, where + ": times must be strictly increasing");
    }
    out.push_back(e);
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, source + ": trace is empty");
  return out;
}

std::vector<TraceEvent> load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open trace " + path.string());
  return parse_trace(in, path.string());
}

// --- simulation ----------------------------------------------------------

const char* to_string(SwitchStatus status) {
  return status == SwitchStatus::kSwitched ? "switched" : "degraded";
}

std::vector<std::size_t> changed_nodes(const NetworkConfig& from, const NetworkConfig& to) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i] != to[i]) out.push_back(i);
  }
  return out;
}

double switch_cost(const SearchSpace& space, const NetworkConfig& from, const NetworkConfig& to) {
  double cost = 0.0;
  for (std::size_t i : changed_nodes(from, to)) cost += space.block(i, to[i]).switch_cost;
  return cost;
}

SimulationReport simulate(const SearchSpace& space, const BlockDeltaTable& table,
                          std::string_view device, const DeploymentPlan& plan,
                          const std::vector<TraceEvent>& trace, const NetworkConfig& initial,
                          const SimulateOptions& options) {
  table.check_space(space);
  const std::size_t d = table.device_index(device);
  if (trace.empty()) throw Error(ErrorCode::kInvalidArgument, "trace is empty");
  space.validate_config(initial);
  if (!plan.contains(initial)) {
    throw Error(ErrorCode::kInvalidArgument,
                "initial config " + initial.to_string() + " is outside the deployment plan");
  }

  auto predicted = [&](const NetworkConfig& cfg) {
    double v = table.base_perf.latency[d];
    for (std::size_t i = 0; i < cfg.size(); ++i) {
      v -= table.latency[d][i][static_cast<std::size_t>(cfg[i])];
    }
    return v;
  };
  // Min-latency reachable config: per node the largest dL in the plan.
  std::vector<int> fastest;
  for (std::size_t i = 0; i < space.num_nodes(); ++i) {
    int best = plan.blocks[i].front();
    for (int j : plan.blocks[i]) {
      if (table.latency[d][i][static_cast<std::size_t>(j)] >
          table.latency[d][i][static_cast<std::size_t>(best)]) {
        best = j;
      }
    }
    fastest.push_back(best);
  }
  const NetworkConfig min_latency_config(fastest);

  SearchOptions so;
  so.device = std::string(device);
  so.objective_form = options.objective_form;
  so.time_limit = options.time_limit;
  so.allowed = plan.allowed_mask(space);

  SimulationReport report;
  NetworkConfig current = initial;
  for (const auto& ev : trace) {
    if (ev.lat_scale * predicted(current) <= ev.budget_ms + kBudgetTolerance) continue;
    ++report.violations;
    SwitchEvent se;
    se.time_ms = ev.time_ms;
    se.budget_ms = ev.budget_ms;
    se.old_config = current;
    so.lat_budget = ev.budget_ms / ev.lat_scale;
    const SearchResult res = solve(build_problem(space, table, so));
    se.search_ms = res.stats.wall_seconds * 1000.0;
    if (res.config) {
      se.new_config = *res.config;
      se.status = SwitchStatus::kSwitched;
    } else {
      se.new_config = min_latency_config;
      se.status = SwitchStatus::kDegraded;
      ++report.degraded;
    }
    se.changed_nodes = changed_nodes(current, se.new_config);
    se.switch_cost_ms = switch_cost(space, current, se.new_config);
    se.predicted_latency = ev.lat_scale * predicted(se.new_config);
    report.total_switch_cost_ms += se.switch_cost_ms;
    current = se.new_config;
    report.events.push_back(std::move(se));
  }
  report.final_config = current;
  return report;
}

json SimulationReport::to_json() const {
  json evs = json::array();
  for (const auto& e : events) {
    evs.push_back({{"time_ms", e.time_ms},
                   {"budget_ms", e.budget_ms},
                   {"old_config", e.old_config.to_string()},
                   {"new_config", e.new_config.to_string()},
                   {"changed_nodes", e.changed_nodes},
                   {"switch_cost_ms", e.switch_cost_ms},
                   {"search_ms", e.search_ms},
                   {"predicted_latency", e.predicted_latency},
                   {"status", to_string(e.status)}});
  }
  return json{{"events", evs},
              {"final_config", final_config.to_string()},
              {"violations", violations},
              {"degraded", degraded},
              {"total_switch_cost_ms", total_switch_cost_ms}};
}

}  // namespace blocknas
