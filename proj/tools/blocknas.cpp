// blocknas command-line tool. Every file written gets a sibling
// "<file>.manifest.json"; exit codes are 0 ok, 1 usage or input error,
// 2 time limit hit, 3 infeasible.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "blocknas/dynamic.hpp"
#include "blocknas/error.hpp"
#include "blocknas/estimator.hpp"
#include "blocknas/eval.hpp"
#include "blocknas/hashing.hpp"
#include "blocknas/ilp.hpp"
#include "blocknas/manifest.hpp"
#include "blocknas/oracle.hpp"
#include "blocknas/predictor.hpp"
#include "blocknas/presets.hpp"
#include "blocknas/searchspace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace blocknas;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;

// Tags errors with the pipeline stage that raised them.
struct StageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("stage '" + name + "': " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

class Run {
 public:
  explicit Run(std::string subcommand) : start_(std::chrono::steady_clock::now()) {
    manifest_.subcommand = std::move(subcommand);
  }

  RunManifest& manifest() { return manifest_; }

  void input(const std::optional<std::string>& path) {
    if (path) manifest_.hash_input(*path);
  }

  // Writes an artifact and its manifest.
  void emit(const fs::path& path, const std::string& text) {
    write_text(path, text);
    emit_manifest(path);
  }
  void emit_json(const fs::path& path, const json& doc) { emit(path, doc.dump(2) + "\n"); }
  // For artifacts written by library code.
  void emit_manifest(const fs::path& path) {
    auto m = manifest_;
    m.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m.write_for(path);
  }

 private:
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// --- shared option groups ---------------------------------------------------

struct OracleArgs {
  std::optional<std::string> model;
  std::optional<std::string> records;

  void add(CLI::App* app) {
    auto* m = app->add_option("--model", model, "Synthetic model JSON (ground-truth oracle)");
    auto* r = app->add_option("--records", records, "Records CSV (tabular oracle)");
    m->excludes(r);
    r->excludes(m);
  }

  std::unique_ptr<Oracle> load(const SearchSpace& space, Run& run) const {
    if (model) {
      run.input(model);
      return std::make_unique<SyntheticOracle>(space, SyntheticModel::load(*model, space));
    }
    if (records) {
      run.input(records);
      return std::make_unique<TabularOracle>(space, load_records(*records, space));
    }
    throw Error(ErrorCode::kInvalidArgument, "one of --model or --records is required");
  }
};

struct BudgetArgs {
  std::optional<double> lat_budget;
  std::optional<double> eng_budget;
  bool unconstrained = false;
  double time_limit = 10.0;
  std::string solver = "auto";
  std::string objective = "eq6";

  void add(CLI::App* app) {
    app->add_option("--lat-budget", lat_budget, "Latency budget (ms)");
    app->add_option("--eng-budget", eng_budget, "Energy budget (mJ)");
    app->add_flag("--unconstrained", unconstrained, "Search without any budget");
    app->add_option("--time-limit", time_limit, "Solver time limit (s)")->capture_default_str();
    app->add_option("--solver", solver, "auto | bnb | dinkelbach | exhaustive")
        ->capture_default_str();
    app->add_option("--objective", objective, "eq6 (global mean FLOPs) | eq5 (per block)")
        ->capture_default_str();
  }

  SearchOptions options(const std::string& device) const {
    SearchOptions o;
    o.device = device;
    o.lat_budget = lat_budget;
    o.eng_budget = eng_budget;
    o.unconstrained = unconstrained;
    o.time_limit = time_limit;
    o.solver = parse_solver_kind(solver);
    o.objective_form = parse_objective_form(objective);
    return o;
  }

  json to_json() const {
    return json{{"lat_budget", lat_budget ? json(*lat_budget) : json()},
                {"eng_budget", eng_budget ? json(*eng_budget) : json()},
                {"unconstrained", unconstrained},
                {"time_limit", time_limit},
                {"solver", solver},
                {"objective", objective}};
  }
};

struct EstimateArgs {
  std::string mode = "single";
  std::size_t samples = 1;
  bool without_replacement = false;
  std::optional<int> base_block;
  bool random_basenet = false;

  void add(CLI::App* app) {
    app->add_option("--mode", mode, "single | partial | full")->capture_default_str();
    app->add_option("--samples", samples, "Hosts per block in partial mode")
        ->capture_default_str();
    app->add_flag("--without-replacement", without_replacement,
                  "Partial mode draws distinct hosts");
    app->add_option("--base-block", base_block, "Use block index k as every node's base");
    app->add_flag("--random-basenet", random_basenet,
                  "Single mode hosts on a seeded random config instead of the average-FLOPs one");
  }

  json to_json() const {
    return json{{"mode", mode},
                {"samples", samples},
                {"without_replacement", without_replacement},
                {"base_block", base_block ? json(*base_block) : json()},
                {"random_basenet", random_basenet}};
  }

  BlockDeltaTable run(const SearchSpace& space, const Oracle& oracle, std::uint64_t seed) const {
    EstimateOptions eo;
    if (base_block) {
      std::vector<int> base(space.num_nodes(), *base_block);
      eo.base_override = NetworkConfig(base);
    }
    if (random_basenet) {
      eo.host_override = sample_configs(space, 1, derive_seed(seed, "random-basenet")).front();
    }
    switch (parse_estimation_mode(mode)) {
      case EstimationMode::kFull:
        return estimate_full(space, oracle, eo);
      case EstimationMode::kPartial:
        return estimate_partial(space, oracle, {samples, seed, without_replacement}, eo);
      case EstimationMode::kSingle:
        break;
    }
    return estimate_single(space, oracle, eo);
  }
};

// --- subcommands ------------------------------------------------------------

struct GenSpace {
  std::string preset;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<std::string> model_out;
  std::optional<std::string> records_out;
  double noise_sigma = 0.0;
  std::optional<double> noise_target;
  double interaction_sigma = 0.0;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("gen-space", "Write a preset search space and synthetic model");
    c->add_option("--preset", preset, "nb201 | mbv3 | custom:<m>x<n>")->required();
    c->add_option("--seed", seed, "Seed for block tables and coefficients")->capture_default_str();
    c->add_option("--out", out, "Space JSON path")->required();
    c->add_option("--model-out", model_out, "Synthetic model JSON path");
    c->add_option("--records-out", records_out,
                  "Enumerate the model into a records CSV (enumerable spaces only)");
    c->add_option("--noise-sigma", noise_sigma, "Accuracy noise sd")->capture_default_str();
    c->add_option("--noise-target", noise_target,
                  "Calibrate noise so an exact predictor reaches this Spearman (0,1)");
    c->add_option("--interaction-sigma", interaction_sigma,
                  "Adjacent-node interaction sd")->capture_default_str();
    c->callback([this] { code = run(); });
  }

  int code = kExitOk;

  int run() {
    Run r("gen-space");
    r.manifest().options = {{"preset", preset},
                            {"noise_sigma", noise_sigma},
                            {"noise_target", noise_target ? json(*noise_target) : json()},
                            {"interaction_sigma", interaction_sigma}};
    r.manifest().seeds["seed"] = seed;
    const SearchSpace space = preset_space(preset, seed);
    r.emit_json(out, space.to_json());
    SyntheticModel model = default_model(space, seed);
    model.interaction_sigma = interaction_sigma;
    model.noise_sigma = noise_sigma;
    if (noise_target) model.noise_sigma = calibrate_noise_sigma(model, space, *noise_target);
    if (model_out) r.emit_json(*model_out, model.to_json());
    if (records_out) {
      const SyntheticOracle oracle(space, model);
      std::vector<EvaluationRecord> records;
      enumerate_all(space, oracle, [&](const NetworkConfig& cfg, const PerfTriple& perf) {
        records.push_back({cfg, perf, network_flops(space, cfg)});
      });
      save_records(*records_out, space, records);
      r.emit_manifest(*records_out);
    }
    std::cout << space.name() << ": " << space.num_nodes() << " nodes, "
              << space.candidate_count() << " configs\n";
    return kExitOk;
  }
};

struct Estimate {
  std::string space_path, out;
  std::uint64_t seed = 0;
  OracleArgs oracle;
  EstimateArgs est;
  int code = kExitOk;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("estimate", "Estimate block deltas");
    c->add_option("--space", space_path, "Space JSON")->required();
    oracle.add(c);
    est.add(c);
    c->add_option("--seed", seed, "Seed for host sampling")->capture_default_str();
    c->add_option("--out", out, "Delta table JSON")->required();
    c->callback([this] { code = run(); });
  }

  int run() {
    Run r("estimate");
    r.input(space_path);
    const SearchSpace space = SearchSpace::load(space_path);
    const auto o = oracle.load(space, r);
    const std::uint64_t s = derive_seed(seed, "estimate");
    r.manifest().options = est.to_json();
    r.manifest().seeds = {{"seed", seed}, {"estimate", s}};
    const BlockDeltaTable table = est.run(space, *o, s);
    r.emit_json(out, table.to_json());
    std::cout << "evaluations: " << table.evaluations << "\n";
    return kExitOk;
  }
};

struct Predict {
  std::string space_path, deltas, device;
  std::optional<std::string> config, batch, out;
  bool no_flops = false;
  int code = kExitOk;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("predict", "Predict accuracy/latency/energy of configs");
    c->add_option("--space", space_path, "Space JSON")->required();
    c->add_option("--deltas", deltas, "Delta table JSON")->required();
    c->add_option("--device", device, "Device id")->required();
    auto* cfg = c->add_option("--config", config, "Config, e.g. 0-2-1");
    auto* b = c->add_option("--batch", batch, "File with one config per line");
    cfg->excludes(b);
    b->excludes(cfg);
    c->add_flag("--no-flops-scaling", no_flops, "Sum accuracy deltas without the FLOPs ratio");
    c->add_option("--out", out, "Write JSON here instead of stdout");
    c->callback([this] { code = run(); });
  }

  int run() {
    Run r("predict");
    r.input(space_path);
    r.input(deltas);
    r.input(batch);
    r.manifest().options = {{"device", device},
                            {"config", config ? json(*config) : json()},
                            {"no_flops_scaling", no_flops}};
    const SearchSpace space = SearchSpace::load(space_path);
    const BlockDeltaTable table = BlockDeltaTable::load(deltas);
    std::vector<NetworkConfig> configs;
    if (config) {
      configs.push_back(NetworkConfig::parse(*config));
    } else if (batch) {
      std::ifstream in(*batch);
      if (!in) throw Error(ErrorCode::kIo, "cannot open " + *batch);
      std::string line;
      while (std::getline(in, line)) {
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        configs.push_back(NetworkConfig::parse(line.substr(b, line.find_last_not_of(" \t\r") - b + 1)));
      }
    } else {
      throw Error(ErrorCode::kInvalidArgument, "one of --config or --batch is required");
    }
    std::vector<Prediction> preds;
    if (no_flops) {
      for (std::size_t k = 0; k < configs.size(); ++k) {
        try {
          preds.push_back(predict_no_flops_scaling(table, space, configs[k], device));
        } catch (const Error& e) {
          throw Error(e.code(), "config #" + std::to_string(k) + ": " + e.what());
        }
      }
    } else {
      preds = predict_batch(table, space, configs, device);
    }
    json doc;
    if (config) {
      doc = preds.front().to_json();
    } else {
      doc = json::array();
      for (const auto& p : preds) doc.push_back(p.to_json());
    }
    if (out) {
      r.emit_json(*out, doc);
    } else {
      std::cout << doc.dump(2) << "\n";
    }
    return kExitOk;
  }
};

struct Search {
  std::string space_path, deltas, device;
  std::optional<std::string> out;
  BudgetArgs budget;
  int code = kExitOk;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("search", "Find the best config under budgets");
    c->add_option("--space", space_path, "Space JSON")->required();
    c->add_option("--deltas", deltas, "Delta table JSON")->required();
    c->add_option("--device", device, "Device id")->required();
    budget.add(c);
    c->add_option("--out", out, "Result JSON (stdout when omitted)");
    c->callback([this] { code = run(); });
  }

  int run() {
    Run r("search");
    r.input(space_path);
    r.input(deltas);
    r.manifest().options = budget.to_json();
    r.manifest().options["device"] = device;
    const SearchSpace space = SearchSpace::load(space_path);
    const BlockDeltaTable table = BlockDeltaTable::load(deltas);
    const SearchResult res = search(build_problem(space, table, budget.options(device)));
    json doc = res.to_json();
    if (out) {
      r.emit_json(*out, doc);
    } else {
      std::cout << doc.dump(2) << "\n";
    }
    std::cerr << "status: " << to_string(res.status) << "\n";
    return exit_code(res.status);
  }
};

struct Validate {
  std::string space_path, deltas, device, out;
  std::optional<std::string> csv;
  OracleArgs oracle;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  bool no_flops = false;
  std::vector<std::size_t> convergence_counts;
  std::size_t convergence_seeds = 5;
  int code = kExitOk;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("validate", "Correlate predictions against the oracle");
    c->add_option("--space", space_path, "Space JSON")->required();
    c->add_option("--deltas", deltas, "Delta table JSON")->required();
    c->add_option("--device", device, "Device id")->required();
    oracle.add(c);
    c->add_option("--samples", samples, "Sampled configs")->capture_default_str();
    c->add_option("--seed", seed, "Sampling seed")->capture_default_str();
    c->add_flag("--no-flops-scaling", no_flops, "Validate the predictor without the FLOPs ratio");
    c->add_option("--convergence-counts", convergence_counts,
                  "Also run partial-mode convergence at these host counts")
        ->delimiter(',');
    c->add_option("--convergence-seeds", convergence_seeds, "Seeds per convergence point")
        ->capture_default_str();
    c->add_option("--out", out, "Report JSON")->required();
    c->add_option("--csv", csv, "Per-sample accuracy pairs CSV");
    c->callback([this] { code = run(); });
  }

  int run() {
    Run r("validate");
    r.input(space_path);
    r.input(deltas);
    const SearchSpace space = SearchSpace::load(space_path);
    const BlockDeltaTable table = BlockDeltaTable::load(deltas);
    const auto o = oracle.load(space, r);
    ValidationOptions vo{samples, derive_seed(seed, "validate"), !no_flops};
    r.manifest().options = {{"device", device},
                            {"samples", samples},
                            {"no_flops_scaling", no_flops},
                            {"convergence_counts", convergence_counts},
                            {"convergence_seeds", convergence_seeds}};
    r.manifest().seeds = {{"seed", seed}, {"validate", vo.seed}};
    json doc = validate_predictor(space, *o, table, device, vo).to_json();
    if (!convergence_counts.empty()) {
      std::vector<std::uint64_t> seeds;
      for (std::size_t k = 0; k < convergence_seeds; ++k) {
        seeds.push_back(derive_seed(seed, "convergence/" + std::to_string(k)));
      }
      doc["convergence"] =
          sampling_convergence(space, *o, convergence_counts, seeds, device, vo).to_json();
    }
    r.emit_json(out, doc);
    if (csv) {
      const auto [pred, actual] = accuracy_pairs(space, *o, table, device, vo);
      std::string text = "predicted_accuracy,actual_accuracy\n";
      for (std::size_t k = 0; k < pred.size(); ++k) {
        text += fmt(pred[k]) + "," + fmt(actual[k]) + "\n";
      }
      r.emit(*csv, text);
    }
    std::cout << "accuracy spearman: " << fmt(doc["accuracy"]["spearman"].get<double>()) << "\n";
    return kExitOk;
  }
};

struct Pareto {
  std::string space_path, deltas, device, out;
  std::optional<std::string> csv;
  OracleArgs oracle;
  std::vector<double> budgets;
  std::string objective = "eq6";
  double time_limit = 10.0;
  std::size_t random_trials = 0;
  std::uint64_t seed = 0;
  int code = kExitOk;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("pareto", "Latency-budget sweep against the true Pareto front");
    c->add_option("--space", space_path, "Space JSON")->required();
    c->add_option("--deltas", deltas, "Delta table JSON")->required();
    c->add_option("--device", device, "Device id")->required();
    oracle.add(c);
    c->add_option("--budgets", budgets, "Latency budgets (ms); default 20 over the true range")
        ->delimiter(',');
    c->add_option("--objective", objective, "eq6 | eq5")->capture_default_str();
    c->add_option("--time-limit", time_limit, "Per-budget solver limit (s)")
        ->capture_default_str();
    c->add_option("--random-trials", random_trials,
                  "Random-search baseline trials (0 disables)")->capture_default_str();
    c->add_option("--seed", seed, "Baseline seed")->capture_default_str();
    c->add_option("--out", out, "Report JSON")->required();
    c->add_option("--csv", csv, "Front and searched points CSV");
    c->callback([this] { code = run(); });
  }

  int run() {
    Run r("pareto");
    r.input(space_path);
    r.input(deltas);
    const SearchSpace space = SearchSpace::load(space_path);
    const BlockDeltaTable table = BlockDeltaTable::load(deltas);
    const auto o = oracle.load(space, r);
    ParetoOptions po;
    po.objective_form = parse_objective_form(objective);
    po.time_limit = time_limit;
    po.random_trials = random_trials;
    po.seed = derive_seed(seed, "pareto");
    r.manifest().options = {{"device", device},       {"budgets", budgets},
                            {"objective", objective}, {"time_limit", time_limit},
                            {"random_trials", random_trials}};
    r.manifest().seeds = {{"seed", seed}, {"pareto", po.seed}};
    const ParetoReport rep = pareto_sweep(space, *o, table, budgets, device, po);
    r.emit_json(out, rep.to_json());
    if (csv) {
      std::string text = "kind,budget,status,config,latency,accuracy,regret\n";
      for (const auto& p : rep.true_front) {
        text += "front,,," + p.config.to_dash_string() + "," + fmt(p.latency) + "," +
                fmt(p.accuracy) + ",0\n";
      }
      for (const auto& p : rep.searched) {
        text += "searched," + fmt(p.budget) + "," + to_string(p.status) + "," +
                (p.config ? p.config->to_dash_string() + "," + fmt(p.latency) + "," +
                                fmt(p.accuracy) + "," + fmt(p.regret)
                          : std::string(",,,")) +
                "\n";
      }
      r.emit(*csv, text);
    }
    std::cout << "mean regret: " << fmt(rep.mean_regret) << " (" << rep.zero_regret_points << "/"
              << rep.feasible_points << " on the front)\n";
    return kExitOk;
  }
};

struct Ablate {
  std::string space_path, device, out;
  std::optional<std::string> csv;
  OracleArgs oracle;
  std::vector<std::string> variants{"complete", "no_flops_info", "random_basenet",
                                    "random_baseblock"};
  std::size_t samples = 1000;
  std::size_t draws = 10;
  std::uint64_t seed = 0;
  int code = kExitOk;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("ablate", "Compare predictor variants");
    c->add_option("--space", space_path, "Space JSON")->required();
    c->add_option("--device", device, "Device id")->required();
    oracle.add(c);
    c->add_option("--variants", variants,
                  "complete,no_flops_info,random_basenet,random_baseblock")
        ->delimiter(',')
        ->capture_default_str();
    c->add_option("--samples", samples, "Validation configs")->capture_default_str();
    c->add_option("--draws", draws, "Draws averaged by the random variants")
        ->capture_default_str();
    c->add_option("--seed", seed, "Seed")->capture_default_str();
    c->add_option("--out", out, "Report JSON")->required();
    c->add_option("--csv", csv, "One row per variant");
    c->callback([this] { code = run(); });
  }

  int run() {
    Run r("ablate");
    r.input(space_path);
    const SearchSpace space = SearchSpace::load(space_path);
    const auto o = oracle.load(space, r);
    std::vector<AblationVariant> vs;
    for (const auto& v : variants) vs.push_back(parse_ablation_variant(v));
    AblationOptions ao{samples, derive_seed(seed, "ablate"), draws};
    r.manifest().options = {{"device", device}, {"variants", variants},
                            {"samples", samples}, {"draws", draws}};
    r.manifest().seeds = {{"seed", seed}, {"ablate", ao.seed}};
    const auto rows = ablation_suite(space, *o, vs, device, ao);
    r.emit_json(out, ablation_to_json(rows));
    if (csv) {
      std::string text = "variant,acc_rmse,acc_mae,acc_spearman,lat_rmse,lat_spearman\n";
      for (const auto& row : rows) {
        text += std::string(to_string(row.variant)) + "," + fmt(row.accuracy.rmse) + "," +
                fmt(row.accuracy.mae) + "," + fmt(row.accuracy.spearman) + "," +
                fmt(row.latency.rmse) + "," + fmt(row.latency.spearman) + "\n";
      }
      r.emit(*csv, text);
    }
    for (const auto& row : rows) {
      std::cout << to_string(row.variant) << ": accuracy rmse " << fmt(row.accuracy.rmse) << "\n";
    }
    return kExitOk;
  }
};

struct FitLaw {
  std::optional<std::string> input, space_path;
  OracleArgs oracle;
  std::size_t node = 0;
  int block = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<std::string> csv;
  int code = kExitOk;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand(
        "fitlaw", "Fit delta-vs-FLOPs laws, from a CSV or from one block switch over hosts");
    auto* in = c->add_option("--input", input, "CSV with header flops,delta");
    auto* sp = c->add_option("--space", space_path, "Space JSON (with --model/--records)");
    in->excludes(sp);
    sp->excludes(in);
    oracle.add(c);
    c->add_option("--node", node, "Switched node")->capture_default_str();
    c->add_option("--block", block, "Block switched in from the base")->capture_default_str();
    c->add_option("--samples", samples, "Sampled hosts (0 = every host)")->capture_default_str();
    c->add_option("--seed", seed, "Host sampling seed")->capture_default_str();
    c->add_option("--out", out, "Fit report JSON")->required();
    c->add_option("--csv", csv, "Points CSV");
    c->callback([this] { code = run(); });
  }

  int run() {
    Run r("fitlaw");
    std::vector<double> flops, delta;
    if (input) {
      r.input(input);
      std::ifstream in(*input);
      if (!in) throw Error(ErrorCode::kIo, "cannot open " + *input);
      std::string line;
      std::getline(in, line);
      if (line.rfind("flops,delta", 0) != 0) {
        throw Error(ErrorCode::kParse, *input + ": header must be flops,delta");
      }
      std::size_t lineno = 1;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto f = split(line, ',');
        try {
          if (f.size() != 2) throw std::invalid_argument("fields");
          flops.push_back(std::stod(f[0]));
          delta.push_back(std::stod(f[1]));
        } catch (const std::exception&) {
          throw Error(ErrorCode::kParse, *input + ":" + std::to_string(lineno) + ": bad row");
        }
      }
      r.manifest().options = {{"input", *input}};
    } else if (space_path) {
      r.input(space_path);
      const SearchSpace space = SearchSpace::load(*space_path);
      const auto o = oracle.load(space, r);
      if (node >= space.num_nodes() || block < 0 || block >= space.node(node).size()) {
        throw Error(ErrorCode::kInvalidArgument, "--node/--block out of range");
      }
      const int base = space.node(node).base_block;
      auto add = [&](NetworkConfig host) {
        host = host.with_choice(node, base);
        const NetworkConfig sw = host.with_choice(node, block);
        flops.push_back(network_flops(space, sw));
        delta.push_back(o->evaluate(host).accuracy - o->evaluate(sw).accuracy);
      };
      const std::uint64_t s = derive_seed(seed, "fitlaw");
      if (samples == 0) {
        ensure_enumerable(space, enumeration_cap(), "fitlaw");
        for_each_config(space, [&](const NetworkConfig& cfg) {
          if (cfg[node] == base) add(cfg);
        });
      } else {
        for (const auto& cfg : sample_configs(space, samples, s)) add(cfg);
      }
      r.manifest().options = {{"node", node}, {"block", block}, {"samples", samples}};
      r.manifest().seeds = {{"seed", seed}, {"fitlaw", s}};
    } else {
      throw Error(ErrorCode::kInvalidArgument, "one of --input or --space is required");
    }
    json doc = json::array();
    const auto fits = fit_delta_law(flops, delta);
    for (const auto& f : fits) doc.push_back(f.to_json());
    r.emit_json(out, doc);
    if (csv) {
      std::string text = "flops,delta\n";
      for (std::size_t k = 0; k < flops.size(); ++k) text += fmt(flops[k]) + "," + fmt(delta[k]) + "\n";
      r.emit(*csv, text);
    }
    std::cout << "best fit: " << to_string(fits.front().family) << " (r2 " << fmt(fits.front().r2)
              << ")\n";
    return kExitOk;
  }
};

struct DynamicSim {
  std::string space_path, deltas, device, trace, out;
  std::size_t k = 5;
  std::optional<std::string> initial, plan_out, csv;
  std::string objective = "eq6";
  double time_limit = 10.0;
  int code = kExitOk;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("dynamic-sim", "Replay a latency-budget trace with block switching");
    c->add_option("--space", space_path, "Space JSON")->required();
    c->add_option("--deltas", deltas, "Delta table JSON")->required();
    c->add_option("--device", device, "Device id")->required();
    c->add_option("--k", k, "Blocks deployed per node")->capture_default_str();
    c->add_option("--trace", trace, "CSV time_ms,budget_ms[,lat_scale]")->required();
    c->add_option("--initial", initial, "Starting config (default: base network)");
    c->add_option("--objective", objective, "eq6 | eq5")->capture_default_str();
    c->add_option("--time-limit", time_limit, "Per-search limit (s)")->capture_default_str();
    c->add_option("--out", out, "Events JSON")->required();
    c->add_option("--plan-out", plan_out, "Deployment plan JSON");
    c->add_option("--csv", csv, "One row per switch event");
    c->callback([this] { code = run(); });
  }

  int run() {
    Run r("dynamic-sim");
    r.input(space_path);
    r.input(deltas);
    r.input(trace);
    r.manifest().options = {{"device", device},
                            {"k", k},
                            {"initial", initial ? json(*initial) : json()},
                            {"objective", objective},
                            {"time_limit", time_limit}};
    const SearchSpace space = SearchSpace::load(space_path);
    const BlockDeltaTable table = BlockDeltaTable::load(deltas);
    const auto events = load_trace(trace);
    const DeploymentPlan plan = select_deployment_blocks(space, table, device, k);
    for (const auto& w : plan.warnings) std::cerr << "warning: " << w << "\n";
    const NetworkConfig start = initial ? NetworkConfig::parse(*initial) : table.base_config;
    SimulateOptions so{parse_objective_form(objective), time_limit};
    const SimulationReport rep = simulate(space, table, device, plan, events, start, so);
    json doc = rep.to_json();
    doc["plan"] = plan.to_json();
    r.emit_json(out, doc);
    if (plan_out) r.emit_json(*plan_out, plan.to_json());
    if (csv) {
      std::string text = "time_ms,budget_ms,old_config,new_config,changed_nodes,switch_cost_ms,status\n";
      for (const auto& e : rep.events) {
        text += fmt(e.time_ms) + "," + fmt(e.budget_ms) + "," + e.old_config.to_dash_string() +
                "," + e.new_config.to_dash_string() + "," + std::to_string(e.changed_nodes.size()) +
                "," + fmt(e.switch_cost_ms) + "," + to_string(e.status) + "\n";
      }
      r.emit(*csv, text);
    }
    std::cout << "reachable: " << plan.reachable_count() << ", switches: " << rep.events.size()
              << ", degraded: " << rep.degraded << "\n";
    return kExitOk;
  }
};

struct Pipeline {
  std::string space_path, device, out_dir;
  OracleArgs oracle;
  EstimateArgs est;
  BudgetArgs budget;
  std::size_t validate_samples = 1000;
  std::uint64_t seed = 0;
  int code = kExitOk;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("pipeline", "estimate -> validate -> search -> report");
    c->add_option("--space", space_path, "Space JSON")->required();
    c->add_option("--device", device, "Device id")->required();
    oracle.add(c);
    est.add(c);
    budget.add(c);
    c->add_option("--validate-samples", validate_samples, "Configs sampled by validation")
        ->capture_default_str();
    c->add_option("--seed", seed, "Seed for every stage")->capture_default_str();
    c->add_option("--out-dir", out_dir, "Directory for stage artifacts")->required();
    c->callback([this] { code = run(); });
  }

  int run() {
    Run r("pipeline");
    r.input(space_path);
    const SearchSpace space =
        stage("load", [&] { return SearchSpace::load(space_path); });
    const auto o = stage("load", [&] { return oracle.load(space, r); });
    json opts = est.to_json();
    opts.update(budget.to_json());
    opts["device"] = device;
    opts["validate_samples"] = validate_samples;
    r.manifest().options = opts;
    const std::uint64_t es = derive_seed(seed, "estimate");
    const std::uint64_t vs = derive_seed(seed, "validate");
    r.manifest().seeds = {{"seed", seed}, {"estimate", es}, {"validate", vs}};
    const fs::path dir(out_dir);

    const BlockDeltaTable table = stage("estimate", [&] { return est.run(space, *o, es); });
    r.emit_json(dir / "deltas.json", table.to_json());

    const ValidationReport vr = stage("validate", [&] {
      return validate_predictor(space, *o, table, device, {validate_samples, vs, true});
    });
    r.emit_json(dir / "validation.json", vr.to_json());

    const SearchResult res = stage("search", [&] {
      return search(build_problem(space, table, budget.options(device)));
    });
    r.emit_json(dir / "search.json", res.to_json());

    json report = {{"status", to_string(res.status)},
                   {"evaluations", table.evaluations},
                   {"accuracy_spearman", vr.accuracy.spearman},
                   {"latency_spearman", vr.latency.spearman}};
    if (res.config) {
      const PerfTriple truth = stage("report", [&] { return o->evaluate(*res.config); });
      const std::size_t d = space.device_index(device);
      report["config"] = res.config->to_string();
      report["predicted"] = res.prediction->to_json();
      report["measured"] = {{"accuracy", truth.accuracy}, {"latency", truth.latency[d]}};
      if (space.has_energy(d)) report["measured"]["energy"] = truth.energy[d];
    }
    r.emit_json(dir / "report.json", report);
    std::cout << "status: " << to_string(res.status);
    if (res.config) std::cout << ", config " << res.config->to_dash_string();
    std::cout << "\n";
    return exit_code(res.status);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-delta architecture search toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GenSpace gen;
  Estimate estimate;
  Predict predict_cmd;
  Search search_cmd;
  Validate validate;
  Pareto pareto;
  Ablate ablate;
  FitLaw fitlaw;
  DynamicSim dynamic;
  Pipeline pipeline;
  gen.add(app);
  estimate.add(app);
  predict_cmd.add(app);
  search_cmd.add(app);
  validate.add(app);
  pareto.add(app);
  ablate.add(app);
  fitlaw.add(app);
  dynamic.add(app);
  pipeline.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << app.get_subcommands().front()->get_name() << ": " << e.what()
              << "\n";
    return kExitUsage;
  }
  for (int c : {gen.code, estimate.code, predict_cmd.code, search_cmd.code, validate.code,
                pareto.code, ablate.code, fitlaw.code, dynamic.code, pipeline.code}) {
    if (c != kExitOk) return c;
  }
  return kExitOk;
}
