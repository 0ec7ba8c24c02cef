#include "blocknas/ilp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "blocknas/error.hpp"

namespace blocknas {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Slack on budget rows inside relaxations and greedy checks. Loosening a
// relaxation only raises its bound, so this never cuts a feasible config.
constexpr double kRelaxSlack = 1e-7;
constexpr double kPruneEps = 1e-9;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

const char* to_string(ObjectiveForm form) {
  return form == ObjectiveForm::kEq6GlobalMeanFlops ? "eq6_global_mean_flops" : "eq5_per_block";
}

const char* to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::kAuto: return "auto";
    case SolverKind::kBranchAndBound: return "branch_and_bound";
    case SolverKind::kDinkelbach: return "dinkelbach";
    case SolverKind::kExhaustive: return "exhaustive";
  }
  return "unknown";
}

ObjectiveForm parse_objective_form(std::string_view text) {
  if (text == "eq6" || text == "eq6_global_mean_flops") return ObjectiveForm::kEq6GlobalMeanFlops;
  if (text == "eq5" || text == "eq5_per_block") return ObjectiveForm::kEq5PerBlock;
  throw Error(ErrorCode::kInvalidArgument, "unknown objective form '" + std::string(text) + "'");
}

SolverKind parse_solver_kind(std::string_view text) {
  if (text == "auto") return SolverKind::kAuto;
  if (text == "branch_and_bound" || text == "bnb") return SolverKind::kBranchAndBound;
  if (text == "dinkelbach") return SolverKind::kDinkelbach;
  if (text == "exhaustive") return SolverKind::kExhaustive;
  throw Error(ErrorCode::kInvalidArgument, "unknown solver '" + std::string(text) + "'");
}

const char* to_string(SearchStatus status) {
  switch (status) {
    case SearchStatus::kOptimal: return "optimal";
    case SearchStatus::kTimeLimitIncumbent: return "time_limit_incumbent";
    case SearchStatus::kTimeLimitNoIncumbent: return "time_limit_no_incumbent";
    case SearchStatus::kInfeasible: return "infeasible";
  }
  return "unknown";
}

int exit_code(SearchStatus status) {
  switch (status) {
    case SearchStatus::kOptimal: return 0;
    case SearchStatus::kTimeLimitIncumbent:
    case SearchStatus::kTimeLimitNoIncumbent: return 2;
    case SearchStatus::kInfeasible: return 3;
  }
  return 1;
}

// --- problem -------------------------------------------------------------

bool SearchProblem::allowed(std::size_t node, int block) const {
  return options.allowed.empty() || options.allowed[node][static_cast<std::size_t>(block)];
}

double SearchProblem::objective(const NetworkConfig& cfg) const {
  const double flops = network_flops(*space, cfg);
  double acc = table->base_perf.accuracy;
  if (options.objective_form == ObjectiveForm::kEq5PerBlock) {
    for (std::size_t i = 0; i < cfg.size(); ++i) {
      const auto j = static_cast<std::size_t>(cfg[i]);
      double c = table->accuracy[i][j];
      c *= table->mean_flops_containing[i][j] / flops;
      acc -= c;
    }
    return acc;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    sum += table->accuracy[i][static_cast<std::size_t>(cfg[i])];
  }
  return acc - sum * (table->mean_space_flops / flops);
}

double SearchProblem::predicted_latency(const NetworkConfig& cfg) const {
  double v = table->base_perf.latency[device];
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    v -= table->latency[device][i][static_cast<std::size_t>(cfg[i])];
  }
  return v;
}

double SearchProblem::predicted_energy(const NetworkConfig& cfg) const {
  double v = table->base_perf.energy[device];
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    v -= table->energy[device][i][static_cast<std::size_t>(cfg[i])];
  }
  return v;
}

bool SearchProblem::feasible(const NetworkConfig& cfg) const {
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    if (!allowed(i, cfg[i])) return false;
  }
  if (options.lat_budget && predicted_latency(cfg) > *options.lat_budget + kBudgetTolerance) {
    return false;
  }
  if (options.eng_budget && predicted_energy(cfg) > *options.eng_budget + kBudgetTolerance) {
    return false;
  }
  return true;
}

SearchProblem build_problem(const SearchSpace& space, const BlockDeltaTable& table,
                            const SearchOptions& options) {
  table.check_space(space);
  SearchProblem p;
  p.space = &space;
  p.table = &table;
  p.options = options;
  p.device = table.device_index(options.device);

  if (options.lat_budget && !(*options.lat_budget > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "latency budget must be positive");
  }
  if (options.eng_budget && !(*options.eng_budget > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "energy budget must be positive");
  }
  if (!options.lat_budget && !options.eng_budget && !options.unconstrained) {
    throw Error(ErrorCode::kInvalidArgument,
                "no budget given; pass a latency/energy budget or request an unconstrained search");
  }
  if (!(options.time_limit > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "time limit must be positive");
  }

  const std::size_t m = space.num_nodes();
  if (!options.allowed.empty()) {
    if (options.allowed.size() != m) {
      throw Error(ErrorCode::kInvalidArgument, "allowed-block mask has wrong node count");
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (options.allowed[i].size() != space.node(i).blocks.size() ||
          std::none_of(options.allowed[i].begin(), options.allowed[i].end(),
                       [](bool b) { return b; })) {
        throw Error(ErrorCode::kInvalidArgument,
                    "allowed-block mask invalid at node " + std::to_string(i));
      }
    }
  }

  const std::size_t d = p.device;
  if (options.eng_budget) {
    bool covered = !std::isnan(table.base_perf.energy[d]);
    for (const auto& row : table.energy[d]) {
      for (double v : row) covered = covered && std::isfinite(v);
    }
    if (!covered) {
      throw Error(ErrorCode::kInvalidArgument,
                  "delta table has no energy data for device '" + options.device + "'");
    }
  }

  const double fbar = table.mean_space_flops;
  p.num.resize(m);
  p.den.resize(m);
  p.lat.resize(m);
  p.eng.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t n = space.node(i).blocks.size();
    for (std::size_t j = 0; j < n; ++j) {
      double num = -table.accuracy[i][j];
      if (options.objective_form == ObjectiveForm::kEq5PerBlock) {
        num *= table.mean_flops_containing[i][j] / fbar;
      }
      p.num[i].push_back(num);
      p.den[i].push_back(space.block(i, static_cast<int>(j)).flops / fbar);
      p.lat[i].push_back(-table.latency[d][i][j]);
      p.eng[i].push_back(options.eng_budget ? -table.energy[d][i][j] : 0.0);
    }
  }
  if (options.lat_budget) p.lat_cap = *options.lat_budget - table.base_perf.latency[d];
  if (options.eng_budget) p.eng_cap = *options.eng_budget - table.base_perf.energy[d];

  auto min_sum = [&](const std::vector<std::vector<double>>& coef) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double lo = kInf;
      for (std::size_t j = 0; j < coef[i].size(); ++j) {
        if (p.allowed(i, static_cast<int>(j))) lo = std::min(lo, coef[i][j]);
      }
      s += lo;
    }
    return s;
  };
  if (p.lat_cap && min_sum(p.lat) > *p.lat_cap + kBudgetTolerance + kRelaxSlack) {
    p.trivially_infeasible = true;
  }
  if (p.eng_cap && min_sum(p.eng) > *p.eng_cap + kBudgetTolerance + kRelaxSlack) {
    p.trivially_infeasible = true;
  }
  return p;
}

// --- Charnes-Cooper ------------------------------------------------------

TransformedLP charnes_cooper_transform(const SearchProblem& problem,
                                       const std::vector<std::size_t>& fixed,
                                       double flops_scale) {
  const double fbar = problem.table->mean_space_flops;
  TransformedLP t;
  t.fixed = fixed;
  t.flops_scale = flops_scale > 0.0 ? flops_scale : fbar;
  t.objective_offset = problem.table->base_perf.accuracy;
  const double r = fbar / t.flops_scale;

  const std::size_t m = problem.num_nodes();
  const std::size_t k = fixed.size();
  std::size_t cols = 0;
  t.column.resize(m - k);
  for (std::size_t i = k; i < m; ++i) {
    t.column[i - k].assign(problem.num[i].size(), SIZE_MAX);
    for (std::size_t j = 0; j < problem.num[i].size(); ++j) {
      if (problem.allowed(i, static_cast<int>(j))) t.column[i - k][j] = cols++;
    }
  }
  t.z_column = cols++;
  LinearProgram& lp = t.lp;
  lp.num_vars = cols;
  lp.objective.assign(cols, 0.0);

  double fixed_num = 0.0, fixed_den = 0.0, fixed_lat = 0.0, fixed_eng = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    fixed_num += problem.num[i][fixed[i]];
    fixed_den += problem.den[i][fixed[i]];
    fixed_lat += problem.lat[i][fixed[i]];
    fixed_eng += problem.eng[i][fixed[i]];
  }

  std::vector<double> norm(cols, 0.0), lat(cols, 0.0), eng(cols, 0.0);
  for (std::size_t i = k; i < m; ++i) {
    std::vector<double> onehot(cols, 0.0);
    for (std::size_t j = 0; j < problem.num[i].size(); ++j) {
      const std::size_t c = t.column[i - k][j];
      if (c == SIZE_MAX) continue;
      lp.objective[c] = problem.num[i][j] * r;
      norm[c] = problem.den[i][j] * r;
      lat[c] = problem.lat[i][j];
      eng[c] = problem.eng[i][j];
      onehot[c] = 1.0;
    }
    onehot[t.z_column] = -1.0;
    lp.add_row(std::move(onehot), RowSense::kEq, 0.0);
  }
  lp.objective[t.z_column] = fixed_num * r;
  norm[t.z_column] = fixed_den * r;
  lp.add_row(std::move(norm), RowSense::kEq, 1.0);
  if (problem.lat_cap) {
    lat[t.z_column] = fixed_lat - (*problem.lat_cap + kBudgetTolerance + kRelaxSlack);
    lp.add_row(std::move(lat), RowSense::kLe, 0.0);
  }
  if (problem.eng_cap) {
    eng[t.z_column] = fixed_eng - (*problem.eng_cap + kBudgetTolerance + kRelaxSlack);
    lp.add_row(std::move(eng), RowSense::kLe, 0.0);
  }
  return t;
}

std::vector<double> TransformedLP::embed(const SearchProblem& problem,
                                         const NetworkConfig& cfg) const {
  const double r = problem.table->mean_space_flops / flops_scale;
  double den = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    den += problem.den[i][static_cast<std::size_t>(cfg[i])] * r;
  }
  const double z = 1.0 / den;
  std::vector<double> point(lp.num_vars, 0.0);
  point[z_column] = z;
  for (std::size_t i = fixed.size(); i < cfg.size(); ++i) {
    const std::size_t c = column[i - fixed.size()][static_cast<std::size_t>(cfg[i])];
    if (c == SIZE_MAX) throw Error(ErrorCode::kConfigInvalid, "config uses a disallowed block");
    point[c] = z;
  }
  return point;
}

NetworkConfig TransformedLP::recover(const std::vector<double>& point) const {
  std::vector<int> choices(fixed.begin(), fixed.end());
  for (const auto& cols : column) {
    int best = -1;
    double best_v = -kInf;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (cols[j] == SIZE_MAX) continue;
      if (point[cols[j]] > best_v) {
        best_v = point[cols[j]];
        best = static_cast<int>(j);
      }
    }
    choices.push_back(best);
  }
  return NetworkConfig(std::move(choices));
}

double TransformedLP::evaluate(const std::vector<double>& point) const {
  double v = objective_offset;
  for (std::size_t c = 0; c < lp.num_vars; ++c) v += lp.objective[c] * point[c];
  return v;
}

RelaxationBound lp_relax_solve(const TransformedLP& t) {
  RelaxationBound b;
  LpResult res = solve_lp(t.lp);
  b.status = res.status;
  b.iterations = res.iterations;
  if (res.status == LpStatus::kOptimal) {
    b.bound = t.objective_offset + res.objective;
    b.point = std::move(res.x);
  }
  return b;
}

// --- branch and bound ----------------------------------------------------

namespace {

struct BranchInfo {
  bool infeasible = false;
  double bound = kInf;
  std::vector<double> child_score;  // per block of the branching node
};

struct Outcome {
  std::optional<NetworkConfig> best;
  double best_value = -kInf;
  bool timed_out = false;
  double open_bound = -kInf;
};

// Depth-first search over node prefixes. `bounder` relaxes a prefix, `leaf`
// scores a complete feasible config; ties go to the lexicographically
// smaller config.
class BranchAndBound {
 public:
  using Bounder = std::function<BranchInfo(const std::vector<std::size_t>&)>;
  using Leaf = std::function<double(const NetworkConfig&)>;

  BranchAndBound(const SearchProblem& p, Bounder bounder, Leaf leaf, Clock::time_point deadline,
                 SolverStats& stats)
      : p_(p), bounder_(std::move(bounder)), leaf_(std::move(leaf)), deadline_(deadline),
        stats_(stats) {
    const std::size_t m = p.num_nodes();
    min_lat_.assign(m + 1, 0.0);
    min_eng_.assign(m + 1, 0.0);
    for (std::size_t i = m; i-- > 0;) {
      double lo_l = kInf, lo_e = kInf;
      for (std::size_t j = 0; j < p.lat[i].size(); ++j) {
        if (!p.allowed(i, static_cast<int>(j))) continue;
        lo_l = std::min(lo_l, p.lat[i][j]);
        lo_e = std::min(lo_e, p.eng[i][j]);
      }
      min_lat_[i] = min_lat_[i + 1] + lo_l;
      min_eng_[i] = min_eng_[i + 1] + lo_e;
    }
  }

  Outcome run() {
    std::vector<std::size_t> prefix;
    prefix.reserve(p_.num_nodes());
    visit(prefix, kInf);
    return out_;
  }

 private:
  void offer(const NetworkConfig& cfg) {
    if (!p_.feasible(cfg)) return;
    const double v = leaf_(cfg);
    if (!out_.best || v > out_.best_value || (v == out_.best_value && cfg < *out_.best)) {
      out_.best = cfg;
      out_.best_value = v;
    }
  }

  bool greedy_infeasible(const std::vector<std::size_t>& prefix) const {
    const std::size_t k = prefix.size();
    double lat = min_lat_[k], eng = min_eng_[k];
    for (std::size_t i = 0; i < k; ++i) {
      lat += p_.lat[i][prefix[i]];
      eng += p_.eng[i][prefix[i]];
    }
    if (p_.lat_cap && lat > *p_.lat_cap + kBudgetTolerance + kRelaxSlack) return true;
    if (p_.eng_cap && eng > *p_.eng_cap + kBudgetTolerance + kRelaxSlack) return true;
    return false;
  }

  void visit(std::vector<std::size_t>& prefix, double parent_bound) {
    if (out_.timed_out || Clock::now() >= deadline_) {
      out_.timed_out = true;
      out_.open_bound = std::max(out_.open_bound, parent_bound);
      return;
    }
    ++stats_.nodes;
    if (greedy_infeasible(prefix)) return;

    const std::size_t m = p_.num_nodes();
    const std::size_t k = prefix.size();
    const std::size_t n = p_.num[k].size();
    if (k + 1 == m) {
      std::vector<int> choices(prefix.begin(), prefix.end());
      choices.push_back(0);
      for (std::size_t j = 0; j < n; ++j) {
        if (!p_.allowed(k, static_cast<int>(j))) continue;
        choices.back() = static_cast<int>(j);
        offer(NetworkConfig(choices));
      }
      return;
    }

    BranchInfo info = bounder_(prefix);
    if (info.infeasible) return;
    if (out_.best && info.bound < out_.best_value - kPruneEps) return;

    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < n; ++j) {
      if (p_.allowed(k, static_cast<int>(j))) order.push_back(j);
    }
    if (info.child_score.size() == n) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return info.child_score[a] > info.child_score[b];
      });
    }
    for (std::size_t j : order) {
      prefix.push_back(j);
      visit(prefix, info.bound);
      prefix.pop_back();
    }
  }

  const SearchProblem& p_;
  Bounder bounder_;
  Leaf leaf_;
  Clock::time_point deadline_;
  SolverStats& stats_;
  std::vector<double> min_lat_;
  std::vector<double> min_eng_;
  Outcome out_;
};

// Mediant bound: a ratio of sums never exceeds the largest component ratio.
double greedy_fractional_bound(const SearchProblem& p, const std::vector<std::size_t>& prefix) {
  double fixed_num = 0.0, fixed_den = 0.0;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    fixed_num += p.num[i][prefix[i]];
    fixed_den += p.den[i][prefix[i]];
  }
  double best = -kInf;
  auto consider = [&](double num, double den) {
    if (den > 0.0) best = std::max(best, num / den);
    else if (num > 0.0) best = kInf;
  };
  consider(fixed_num, fixed_den);
  for (std::size_t i = prefix.size(); i < p.num_nodes(); ++i) {
    for (std::size_t j = 0; j < p.num[i].size(); ++j) {
      if (p.allowed(i, static_cast<int>(j))) consider(p.num[i][j], p.den[i][j]);
    }
  }
  return p.table->base_perf.accuracy + best;
}

SearchResult finish(const SearchProblem& p, const Outcome& out, SolverKind kind,
                    Clock::time_point start, SolverStats stats) {
  SearchResult r;
  r.objective_form = p.options.objective_form;
  r.solver = kind;
  if (out.best) {
    r.config = *out.best;
    r.prediction = predict(*p.table, *p.space, *out.best, p.options.device);
    r.objective_value = p.objective(*out.best);
    r.status = out.timed_out ? SearchStatus::kTimeLimitIncumbent : SearchStatus::kOptimal;
    r.gap = out.timed_out ? std::max(0.0, out.open_bound - r.objective_value) : 0.0;
  } else {
    r.status = out.timed_out ? SearchStatus::kTimeLimitNoIncumbent : SearchStatus::kInfeasible;
    r.gap = out.timed_out ? kInf : 0.0;
  }
  stats.wall_seconds = seconds_since(start);
  r.stats = stats;
  return r;
}

Clock::time_point deadline_for(const SearchProblem& p, Clock::time_point start) {
  return start + std::chrono::duration_cast<Clock::duration>(
                     std::chrono::duration<double>(p.options.time_limit));
}

// Maximizes sum(w * x) under the budget rows. The bound is an LP over the
// one-hot simplex of each free node.
Outcome solve_linear(const SearchProblem& p, const std::vector<std::vector<double>>& w,
                     Clock::time_point deadline, SolverStats& stats) {
  auto bounder = [&](const std::vector<std::size_t>& prefix) {
    BranchInfo info;
    const std::size_t m = p.num_nodes();
    const std::size_t k = prefix.size();
    double fixed_w = 0.0, fixed_lat = 0.0, fixed_eng = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      fixed_w += w[i][prefix[i]];
      fixed_lat += p.lat[i][prefix[i]];
      fixed_eng += p.eng[i][prefix[i]];
    }
    LinearProgram lp;
    std::vector<std::vector<std::size_t>> column(m - k);
    for (std::size_t i = k; i < m; ++i) {
      column[i - k].assign(w[i].size(), SIZE_MAX);
      for (std::size_t j = 0; j < w[i].size(); ++j) {
        if (p.allowed(i, static_cast<int>(j))) column[i - k][j] = lp.num_vars++;
      }
    }
    lp.objective.assign(lp.num_vars, 0.0);
    std::vector<double> lat(lp.num_vars, 0.0), eng(lp.num_vars, 0.0);
    for (std::size_t i = k; i < m; ++i) {
      std::vector<double> onehot(lp.num_vars, 0.0);
      for (std::size_t j = 0; j < w[i].size(); ++j) {
        const std::size_t c = column[i - k][j];
        if (c == SIZE_MAX) continue;
        lp.objective[c] = w[i][j];
        lat[c] = p.lat[i][j];
        eng[c] = p.eng[i][j];
        onehot[c] = 1.0;
      }
      lp.add_row(std::move(onehot), RowSense::kEq, 1.0);
    }
    if (p.lat_cap) {
      lp.add_row(std::move(lat), RowSense::kLe,
                 *p.lat_cap + kBudgetTolerance + kRelaxSlack - fixed_lat);
    }
    if (p.eng_cap) {
      lp.add_row(std::move(eng), RowSense::kLe,
                 *p.eng_cap + kBudgetTolerance + kRelaxSlack - fixed_eng);
    }
    LpResult res = solve_lp(lp);
    stats.lp_iterations += res.iterations;
    if (res.status == LpStatus::kInfeasible) {
      info.infeasible = true;
      return info;
    }
    if (res.status == LpStatus::kOptimal) {
      info.bound = fixed_w + res.objective;
      info.child_score.assign(w[k].size(), -kInf);
      for (std::size_t j = 0; j < w[k].size(); ++j) {
        if (column[0][j] != SIZE_MAX) info.child_score[j] = res.x[column[0][j]];
      }
      return info;
    }
    ++stats.fallback_bounds;
    double bound = fixed_w;
    for (std::size_t i = k; i < m; ++i) {
      double hi = -kInf;
      for (std::size_t j = 0; j < w[i].size(); ++j) {
        if (p.allowed(i, static_cast<int>(j))) hi = std::max(hi, w[i][j]);
      }
      bound += hi;
    }
    info.bound = bound;
    return info;
  };
  auto leaf = [&](const NetworkConfig& cfg) {
    double v = 0.0;
    for (std::size_t i = 0; i < cfg.size(); ++i) v += w[i][static_cast<std::size_t>(cfg[i])];
    return v;
  };
  return BranchAndBound(p, bounder, leaf, deadline, stats).run();
}

double ratio(const SearchProblem& p, const NetworkConfig& cfg) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    num += p.num[i][static_cast<std::size_t>(cfg[i])];
    den += p.den[i][static_cast<std::size_t>(cfg[i])];
  }
  return num / den;
}

}  // namespace

SearchResult solve(const SearchProblem& p) {
  const auto start = Clock::now();
  SolverStats stats;
  if (p.trivially_infeasible) return finish(p, {}, SolverKind::kBranchAndBound, start, stats);

  auto bounder = [&](const std::vector<std::size_t>& prefix) {
    BranchInfo info;
    const TransformedLP t = charnes_cooper_transform(p, prefix);
    RelaxationBound b = lp_relax_solve(t);
    stats.lp_iterations += b.iterations;
    if (b.status == LpStatus::kInfeasible) {
      info.infeasible = true;
      return info;
    }
    if (b.status == LpStatus::kOptimal) {
      info.bound = b.bound;
      const double z = b.point[t.z_column];
      const auto& cols = t.column[0];
      info.child_score.assign(cols.size(), -kInf);
      for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j] != SIZE_MAX) info.child_score[j] = z > 0.0 ? b.point[cols[j]] / z : 0.0;
      }
      return info;
    }
    ++stats.fallback_bounds;
    info.bound = greedy_fractional_bound(p, prefix);
    return info;
  };
  auto leaf = [&](const NetworkConfig& cfg) { return p.objective(cfg); };
  Outcome out = BranchAndBound(p, bounder, leaf, deadline_for(p, start), stats).run();
  return finish(p, out, SolverKind::kBranchAndBound, start, stats);
}

SearchResult solve_dinkelbach(const SearchProblem& p) {
  const auto start = Clock::now();
  const auto deadline = deadline_for(p, start);
  SolverStats stats;
  Outcome out;
  if (p.trivially_infeasible) return finish(p, out, SolverKind::kDinkelbach, start, stats);

  const std::size_t m = p.num_nodes();
  if (m == 1) {
    stats.dinkelbach_iterations = 1;
    for (std::size_t j = 0; j < p.num[0].size(); ++j) {
      ++stats.nodes;
      NetworkConfig cfg({static_cast<int>(j)});
      if (!p.feasible(cfg)) continue;
      const double v = p.objective(cfg);
      if (!out.best || v > out.best_value) {
        out.best = cfg;
        out.best_value = v;
      }
    }
    return finish(p, out, SolverKind::kDinkelbach, start, stats);
  }

  double lambda = 0.0;
  std::vector<std::vector<double>> w(m);
  for (int iter = 0; iter < 1000; ++iter) {
    ++stats.dinkelbach_iterations;
    for (std::size_t i = 0; i < m; ++i) {
      w[i].resize(p.num[i].size());
      for (std::size_t j = 0; j < w[i].size(); ++j) w[i][j] = p.num[i][j] - lambda * p.den[i][j];
    }
    Outcome sub = solve_linear(p, w, deadline, stats);
    if (sub.timed_out) {
      out.timed_out = true;
      if (!out.best && sub.best) {
        out.best = sub.best;
        out.best_value = p.objective(*sub.best);
      }
      out.open_bound = kInf;
      break;
    }
    if (!sub.best) break;  // only possible on the first pass: infeasible
    const double v = p.objective(*sub.best);
    if (out.best && !(v > out.best_value || (v == out.best_value && *sub.best < *out.best))) {
      break;
    }
    out.best = sub.best;
    out.best_value = v;
    lambda = ratio(p, *out.best);
  }
  return finish(p, out, SolverKind::kDinkelbach, start, stats);
}

SearchResult solve_exhaustive(const SearchProblem& p) {
  const auto start = Clock::now();
  ensure_enumerable(*p.space, p.options.cap, "exhaustive search");
  SolverStats stats;
  Outcome out;
  for_each_config(*p.space, [&](const NetworkConfig& cfg) {
    ++stats.nodes;
    if (!p.feasible(cfg)) return;
    const double v = p.objective(cfg);
    if (!out.best || v > out.best_value || (v == out.best_value && cfg < *out.best)) {
      out.best = cfg;
      out.best_value = v;
    }
  });
  return finish(p, out, SolverKind::kExhaustive, start, stats);
}

SearchResult search(const SearchProblem& p) {
  switch (p.options.solver) {
    case SolverKind::kAuto:
    case SolverKind::kBranchAndBound: return solve(p);
    case SolverKind::kDinkelbach: return solve_dinkelbach(p);
    case SolverKind::kExhaustive: return solve_exhaustive(p);
  }
  return solve(p);
}

json SearchResult::to_json() const {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return json{{"status", blocknas::to_string(status)},
              {"config", config ? json(config->to_string()) : json(nullptr)},
              {"prediction", prediction ? prediction->to_json() : json(nullptr)},
              {"objective", config ? json(objective_value) : json(nullptr)},
              {"objective_form", blocknas::to_string(objective_form)},
              {"solver", blocknas::to_string(solver)},
              {"gap", finite_or_null(gap)},
              {"stats",
               {{"nodes", stats.nodes},
                {"lp_iterations", stats.lp_iterations},
                {"fallback_bounds", stats.fallback_bounds},
                {"dinkelbach_iterations", stats.dinkelbach_iterations},
                {"wall_seconds", stats.wall_seconds}}}};
}

}  // namespace blocknas
