#include "blocknas/oracle.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "blocknas/error.hpp"
#include "blocknas/hashing.hpp"

namespace blocknas {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kParse, where + ": cannot parse number '" + text + "'");
  }
  return value;
}

json device_values(const std::vector<double>& values, const std::vector<std::string>& devices) {
  json out = json::object();
  for (std::size_t d = 0; d < devices.size() && d < values.size(); ++d) {
    if (!std::isnan(values[d])) out[devices[d]] = values[d];
  }
  return out;
}

std::vector<double> device_vector(const json& obj, const std::vector<std::string>& devices) {
  std::vector<double> out(devices.size(), kNaN);
  if (obj.is_null()) return out;
  for (std::size_t d = 0; d < devices.size(); ++d) {
    if (obj.contains(devices[d])) out[d] = obj[devices[d]].get<double>();
  }
  return out;
}

}  // namespace

json perf_to_json(const PerfTriple& perf, const std::vector<std::string>& devices) {
  return json{{"accuracy", perf.accuracy},
              {"latency", device_values(perf.latency, devices)},
              {"energy", device_values(perf.energy, devices)}};
}

PerfTriple perf_from_json(const json& doc, const std::vector<std::string>& devices) {
  PerfTriple p;
  p.accuracy = doc.at("accuracy").get<double>();
  p.latency = device_vector(doc.value("latency", json()), devices);
  p.energy = device_vector(doc.value("energy", json()), devices);
  return p;
}

// --- tabular -------------------------------------------------------------

TabularOracle::TabularOracle(const SearchSpace& space, std::vector<EvaluationRecord> records) {
  for (auto& rec : records) {
    space.validate_config(rec.config);
    auto key = rec.config.to_dash_string();
    if (!table_.emplace(key, std::move(rec.perf)).second) {
      throw Error(ErrorCode::kDuplicateConfig, "duplicate record for config " + key);
    }
  }
}

PerfTriple TabularOracle::evaluate(const NetworkConfig& cfg) const {
  auto it = table_.find(cfg.to_dash_string());
  if (it == table_.end()) {
    throw Error(ErrorCode::kOracleMiss, "no record for config " + cfg.to_dash_string());
  }
  return it->second;
}

std::vector<EvaluationRecord> parse_records(std::istream& in, const SearchSpace& space,
                                            const std::string& source) {
  const auto& devices = space.devices();
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_csv(line);
  }
  if (header.empty() || header[0] != "config" || header.size() < 2 || header[1] != "accuracy") {
    throw Error(ErrorCode::kParse, source + ": header must start with 'config,accuracy'");
  }
  // Column roles: 0 latency, 1 energy, 2 flops.
  struct Column { int kind; std::size_t device; };
  std::vector<Column> columns;
  for (std::size_t c = 2; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h == "flops") {
      columns.push_back({2, 0});
    } else if (h.rfind("latency_", 0) == 0) {
      columns.push_back({0, space.device_index(h.substr(8))});
    } else if (h.rfind("energy_", 0) == 0) {
      columns.push_back({1, space.device_index(h.substr(7))});
    } else {
      throw Error(ErrorCode::kParse, source + ": unknown column '" + h + "'");
    }
  }

  std::vector<EvaluationRecord> records;
  std::unordered_map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kParse, where + ": expected " + std::to_string(header.size()) +
                                         " fields, got " + std::to_string(fields.size()));
    }
    EvaluationRecord rec;
    try {
      rec.config = NetworkConfig::parse(fields[0]);
      space.validate_config(rec.config);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfigInvalid, where + ": " + e.what());
    }
    rec.perf.accuracy = parse_double(fields[1], where);
    if (rec.perf.accuracy < 0.0 || rec.perf.accuracy > 1.0) {
      throw Error(ErrorCode::kParse, where + ": accuracy must lie in [0, 1]");
    }
    rec.perf.latency.assign(devices.size(), kNaN);
    rec.perf.energy.assign(devices.size(), kNaN);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      // An empty latency/energy cell means "not measured".
      if (fields[c + 2].empty() && columns[c].kind != 2) continue;
      const double v = parse_double(fields[c + 2], where);
      if (columns[c].kind == 2) {
        rec.flops = v;
        continue;
      }
      if (!(v > 0.0)) throw Error(ErrorCode::kParse, where + ": " + header[c + 2] + " must be > 0");
      (columns[c].kind == 0 ? rec.perf.latency : rec.perf.energy)[columns[c].device] = v;
    }
    if (rec.flops) {
      const double expect = network_flops(space, rec.config);
      if (std::abs(*rec.flops - expect) > 1e-6 * std::max(1.0, std::abs(expect))) {
        throw Error(ErrorCode::kParse, where + ": flops " + fields.back() +
                                           " disagrees with the space (" +
                                           std::to_string(expect) + ")");
      }
    } else {
      rec.flops = network_flops(space, rec.config);
    }
    auto key = rec.config.to_dash_string();
    if (auto [it, inserted] = seen.emplace(key, line_no); !inserted) {
      throw Error(ErrorCode::kDuplicateConfig, where + ": duplicate config " + key +
                                                   " (first seen on line " +
                                                   std::to_string(it->second) + ")");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<EvaluationRecord> load_records(const std::filesystem::path& path,
                                           const SearchSpace& space) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open records file " + path.string());
  return parse_records(in, space, path.string());
}

void save_records(const std::filesystem::path& path, const SearchSpace& space,
                  const std::vector<EvaluationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << std::setprecision(17) << "config,accuracy";
  for (const auto& d : space.devices()) out << ",latency_" << d;
  for (const auto& d : space.devices()) out << ",energy_" << d;
  out << ",flops\n";
  for (const auto& rec : records) {
    out << rec.config.to_dash_string() << ',' << rec.perf.accuracy;
    for (double v : rec.perf.latency) {
      out << ',';
      if (!std::isnan(v)) out << v;
    }
    for (double v : rec.perf.energy) {
      out << ',';
      if (!std::isnan(v)) out << v;
    }
    out << ',' << rec.flops.value_or(network_flops(space, rec.config)) << '\n';
  }
}

// --- synthetic -----------------------------------------------------------

std::vector<std::vector<double>> generate_coefficients(const SearchSpace& space,
                                                       std::uint64_t seed,
                                                       const CoefficientOptions& options) {
  std::vector<std::vector<double>> coeffs(space.num_nodes());
  for (std::size_t i = 0; i < space.num_nodes(); ++i) {
    const BlockNode& node = space.node(i);
    double mean = 0.0;
    for (const auto& b : node.blocks) mean += b.flops;
    mean /= node.size();
    for (int j = 0; j < node.size(); ++j) {
      const double rel = (mean - space.block(i, j).flops) / mean;
      const double quality = hashed_normal(
          derive_seed(seed, "coef/" + std::to_string(i) + "/" + std::to_string(j)));
      coeffs[i].push_back(options.scale *
                          (options.size_weight * rel + (1.0 - options.size_weight) * quality));
    }
  }
  return coeffs;
}

json SyntheticModel::to_json() const {
  return json{{"seed", seed},
              {"base_accuracy", base_accuracy},
              {"noise_sigma", noise_sigma},
              {"interaction_sigma", interaction_sigma},
              {"latency_noise_sigma", latency_noise_sigma},
              {"energy_noise_sigma", energy_noise_sigma},
              {"accuracy_coefficients", accuracy_coefficients}};
}

SyntheticModel SyntheticModel::from_json(const json& doc, const SearchSpace& space) {
  static const std::vector<std::string> kAllowed = {
      "seed", "base_accuracy", "noise_sigma", "interaction_sigma", "latency_noise_sigma",
      "energy_noise_sigma", "accuracy_coefficients", "coefficient_scale"};
  if (!doc.is_object()) throw Error(ErrorCode::kValidation, "$: expected an object");
  for (const auto& [key, value] : doc.items()) {
    if (std::find(kAllowed.begin(), kAllowed.end(), key) == kAllowed.end()) {
      throw Error(ErrorCode::kValidation, "$." + key + ": unknown key");
    }
  }
  SyntheticModel m;
  m.seed = doc.value("seed", std::uint64_t{0});
  m.base_accuracy = doc.value("base_accuracy", 0.7);
  m.noise_sigma = doc.value("noise_sigma", 0.0);
  m.interaction_sigma = doc.value("interaction_sigma", 0.0);
  m.latency_noise_sigma = doc.value("latency_noise_sigma", 0.0);
  m.energy_noise_sigma = doc.value("energy_noise_sigma", 0.0);
  for (double s : {m.noise_sigma, m.interaction_sigma, m.latency_noise_sigma,
                   m.energy_noise_sigma}) {
    if (!(s >= 0.0)) throw Error(ErrorCode::kValidation, "$: sigmas must be non-negative");
  }
  if (doc.contains("accuracy_coefficients")) {
    m.accuracy_coefficients =
        doc["accuracy_coefficients"].get<std::vector<std::vector<double>>>();
    if (m.accuracy_coefficients.size() != space.num_nodes()) {
      throw Error(ErrorCode::kValidation, "$.accuracy_coefficients: one row per node required");
    }
    for (std::size_t i = 0; i < space.num_nodes(); ++i) {
      if (m.accuracy_coefficients[i].size() != space.node(i).blocks.size()) {
        throw Error(ErrorCode::kValidation, "$.accuracy_coefficients[" + std::to_string(i) +
                                                "]: one entry per block required");
      }
    }
  } else {
    CoefficientOptions opts;
    opts.scale = doc.value("coefficient_scale", opts.scale);
    m.accuracy_coefficients = generate_coefficients(space, m.seed, opts);
  }
  return m;
}

SyntheticModel SyntheticModel::load(const std::filesystem::path& path, const SearchSpace& space) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open model file " + path.string());
  try {
    return from_json(json::parse(in), space);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void SyntheticModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

PerfTriple synth_eval(const SyntheticModel& model, const SearchSpace& space,
                      const NetworkConfig& cfg, bool* clamped) {
  space.validate_config(cfg);
  const std::size_t m = space.num_nodes();
  const std::string key = cfg.to_dash_string();

  double coef_sum = 0.0;
  double flops = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    coef_sum += model.accuracy_coefficients[i][static_cast<std::size_t>(cfg[i])];
    flops += space.block(i, cfg[i]).flops;
  }
  double acc = model.base_accuracy - coef_sum * mean_space_flops(space) / flops;
  if (model.interaction_sigma > 0.0) {
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const std::string label = "pair/" + std::to_string(i) + "/" + std::to_string(cfg[i]) +
                                "/" + std::to_string(cfg[i + 1]);
      acc += model.interaction_sigma * hashed_normal(derive_seed(model.seed, label));
    }
  }
  if (model.noise_sigma > 0.0) {
    acc += model.noise_sigma * hashed_normal(derive_seed(model.seed, "acc/" + key));
  }
  const bool out_of_range = acc < 0.0 || acc > 1.0;
  if (clamped) *clamped = out_of_range;

  PerfTriple p;
  p.accuracy = std::clamp(acc, 0.0, 1.0);
  const std::size_t nd = space.devices().size();
  p.latency.assign(nd, 0.0);
  p.energy.assign(nd, 0.0);
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t i = 0; i < m; ++i) {
      const Block& b = space.block(i, cfg[i]);
      p.latency[d] += b.latency[d];
      p.energy[d] += b.energy[d];
    }
    const std::string dev = std::to_string(d) + "/" + key;
    if (model.latency_noise_sigma > 0.0) {
      p.latency[d] += model.latency_noise_sigma * hashed_normal(derive_seed(model.seed, "lat/" + dev));
    }
    if (model.energy_noise_sigma > 0.0) {
      p.energy[d] += model.energy_noise_sigma * hashed_normal(derive_seed(model.seed, "eng/" + dev));
    }
  }
  return p;
}

SyntheticOracle::SyntheticOracle(const SearchSpace& space, SyntheticModel model)
    : space_(&space), model_(std::move(model)) {
  if (model_.accuracy_coefficients.empty()) {
    model_.accuracy_coefficients = generate_coefficients(space, model_.seed);
  }
  if (model_.accuracy_coefficients.size() != space.num_nodes()) {
    throw Error(ErrorCode::kValidation, "synthetic model does not match the space");
  }
}

PerfTriple SyntheticOracle::evaluate(const NetworkConfig& cfg) const {
  bool clamped = false;
  PerfTriple p = synth_eval(model_, *space_, cfg, &clamped);
  if (clamped) clamps_.fetch_add(1);
  return p;
}

double calibrate_noise_sigma(const SyntheticModel& noiseless, const SearchSpace& space,
                             double target_correlation, std::size_t sample_count) {
  if (!(target_correlation > 0.0 && target_correlation < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target correlation must lie in (0, 1)");
  }
  SyntheticModel clean = noiseless;
  clean.noise_sigma = 0.0;
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  auto add = [&](const NetworkConfig& cfg) {
    const double a = synth_eval(clean, space, cfg).accuracy;
    sum += a;
    sum_sq += a * a;
    ++n;
  };
  if (space.candidate_count_saturating() <= enumeration_cap()) {
    for_each_config(space, add);
  } else {
    for (const auto& cfg : sample_configs(space, sample_count, derive_seed(noiseless.seed, "calibrate"))) {
      add(cfg);
    }
  }
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
  const double r = target_correlation;
  return std::sqrt(var) * std::sqrt(1.0 / (r * r) - 1.0);
}

// --- enumeration / sampling ----------------------------------------------

void enumerate_all(const SearchSpace& space, const Oracle& oracle,
                   const std::function<void(const NetworkConfig&, const PerfTriple&)>& visit,
                   std::uint64_t cap) {
  ensure_enumerable(space, cap, "enumerate_all");
  for_each_config(space, [&](const NetworkConfig& cfg) { visit(cfg, oracle.evaluate(cfg)); });
}

std::vector<NetworkConfig> sample_configs(const SearchSpace& space, std::size_t count,
                                          std::uint64_t seed, bool allow_empty) {
  if (count == 0 && !allow_empty) {
    throw Error(ErrorCode::kInvalidArgument, "sample count must be >= 1");
  }
  Rng rng(seed);
  std::vector<NetworkConfig> out;
  out.reserve(count);
  std::vector<int> choices(space.num_nodes());
  for (std::size_t s = 0; s < count; ++s) {
    for (std::size_t i = 0; i < space.num_nodes(); ++i) {
      choices[i] = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(space.node(i).size())));
    }
    out.emplace_back(choices);
  }
  return out;
}

}  // namespace blocknas
