#include "blocknas/eval.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "blocknas/error.hpp"
#include "blocknas/hashing.hpp"
#include "blocknas/predictor.hpp"

namespace blocknas {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double mean_of(const std::vector<double>& v) {
  return v.empty() ? kNaN : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Sum of t*(t-1)/2 over runs of equal adjacent values.
template <typename Eq>
double tied_pairs(std::size_t n, Eq&& equal) {
  double total = 0.0, run = 1.0;
  for (std::size_t k = 1; k <= n; ++k) {
    if (k < n && equal(k - 1, k)) {
      run += 1.0;
    } else {
      total += run * (run - 1.0) / 2.0;
      run = 1.0;
    }
  }
  return total;
}

// Counts inversions (strictly greater earlier element) while merge sorting.
double merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                   std::size_t hi) {
  if (hi - lo < 2) return 0.0;
  const std::size_t mid = lo + (hi - lo) / 2;
  double swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t a = lo, b = mid, k = lo;
  while (a < mid && b < hi) {
    if (v[b] < v[a]) {
      swaps += static_cast<double>(mid - a);
      buf[k++] = v[b++];
    } else {
      buf[k++] = v[a++];
    }
  }
  while (a < mid) buf[k++] = v[a++];
  while (b < hi) buf[k++] = v[b++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
            buf.begin() + static_cast<std::ptrdiff_t>(hi), v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

void check_pairs(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kInvalidArgument, "paired inputs differ in length");
  if (x.size() < 2) throw Error(ErrorCode::kInvalidArgument, "correlation needs at least 2 pairs");
}

std::uint64_t max_host_population(const SearchSpace& space) {
  std::uint64_t best = 0;
  for (std::size_t i = 0; i < space.num_nodes(); ++i) {
    std::uint64_t pop = 1;
    for (std::size_t k = 0; k < space.num_nodes(); ++k) {
      if (k == i) continue;
      const auto n = static_cast<std::uint64_t>(space.node(k).size());
      pop = pop > UINT64_MAX / n ? UINT64_MAX : pop * n;
    }
    best = std::max(best, pop);
  }
  return best;
}

bool device_has_energy(const SearchSpace& space, const BlockDeltaTable& table, std::size_t d) {
  return space.has_energy(d) && !std::isnan(table.base_perf.energy[d]);
}

double delta_rmse(const BlockDeltaTable& estimate, const BlockDeltaTable& reference) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < reference.accuracy.size(); ++i) {
    for (std::size_t j = 0; j < reference.accuracy[i].size(); ++j) {
      if (static_cast<int>(j) == reference.base_config[i]) continue;
      const double e = estimate.accuracy[i][j] - reference.accuracy[i][j];
      s += e * e;
      ++n;
    }
  }
  return n == 0 ? 0.0 : std::sqrt(s / static_cast<double>(n));
}

}  // namespace

// --- correlation ---------------------------------------------------------

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t k = 0;
  while (k < n) {
    std::size_t e = k + 1;
    while (e < n && values[order[e]] == values[order[k]]) ++e;
    const double r = (static_cast<double>(k + 1) + static_cast<double>(e)) / 2.0;
    for (std::size_t t = k; t < e; ++t) ranks[order[t]] = r;
    k = e;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  check_pairs(x, y);
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return kNaN;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  check_pairs(x, y);
  return pearson(average_ranks(x), average_ranks(y));
}

double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  check_pairs(x, y);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  std::vector<double> xs(n), ys(n);
  for (std::size_t k = 0; k < n; ++k) {
    xs[k] = x[order[k]];
    ys[k] = y[order[k]];
  }
  const double n0 = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double n1 = tied_pairs(n, [&](std::size_t a, std::size_t b) { return xs[a] == xs[b]; });
  const double n3 = tied_pairs(
      n, [&](std::size_t a, std::size_t b) { return xs[a] == xs[b] && ys[a] == ys[b]; });
  std::vector<double> buf(n);
  const double swaps = merge_count(ys, buf, 0, n);
  const double n2 = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });
  const double denom = std::sqrt((n0 - n1) * (n0 - n2));
  if (denom == 0.0) return kNaN;
  return std::clamp((n0 - n1 - n2 + n3 - 2.0 * swaps) / denom, -1.0, 1.0);
}

CorrelationReport correlation(const std::vector<double>& predicted,
                              const std::vector<double>& actual) {
  check_pairs(predicted, actual);
  CorrelationReport r;
  r.n = predicted.size();
  r.spearman = spearman(predicted, actual);
  r.kendall_tau = kendall_tau_b(predicted, actual);
  double se = 0.0, ae = 0.0;
  for (std::size_t k = 0; k < r.n; ++k) {
    const double e = predicted[k] - actual[k];
    se += e * e;
    ae += std::abs(e);
  }
  r.mse = se / static_cast<double>(r.n);
  r.mae = ae / static_cast<double>(r.n);
  r.rmse = std::sqrt(r.mse);
  return r;
}

json CorrelationReport::to_json() const {
  return json{{"spearman", num(spearman)}, {"kendall_tau", num(kendall_tau)},
              {"mse", mse}, {"mae", mae}, {"rmse", rmse}, {"n", n}};
}

// --- validation ----------------------------------------------------------

std::pair<std::vector<double>, std::vector<double>> accuracy_pairs(
    const SearchSpace& space, const Oracle& oracle, const BlockDeltaTable& table,
    std::string_view device, const ValidationOptions& options) {
  std::vector<double> pred, actual;
  for (const auto& cfg : sample_configs(space, options.sample_count, options.seed)) {
    const Prediction p = options.flops_scaling ? predict(table, space, cfg, device)
                                               : predict_no_flops_scaling(table, space, cfg, device);
    pred.push_back(p.accuracy);
    actual.push_back(oracle.evaluate(cfg).accuracy);
  }
  return {pred, actual};
}

ValidationReport validate_predictor(const SearchSpace& space, const Oracle& oracle,
                                    const BlockDeltaTable& table, std::string_view device,
                                    const ValidationOptions& options) {
  table.check_space(space);
  const std::size_t d = table.device_index(device);
  const bool energy = device_has_energy(space, table, d);
  std::vector<double> pa, aa, pl, al, pe, ae;
  for (const auto& cfg : sample_configs(space, options.sample_count, options.seed)) {
    const Prediction p = options.flops_scaling ? predict(table, space, cfg, device)
                                               : predict_no_flops_scaling(table, space, cfg, device);
    const PerfTriple o = oracle.evaluate(cfg);
    pa.push_back(p.accuracy);
    aa.push_back(o.accuracy);
    pl.push_back(p.latency);
    al.push_back(o.latency[d]);
    if (energy) {
      pe.push_back(p.energy);
      ae.push_back(o.energy[d]);
    }
  }
  ValidationReport r;
  r.samples = pa.size();
  r.accuracy = correlation(pa, aa);
  r.latency = correlation(pl, al);
  if (energy) r.energy = correlation(pe, ae);
  return r;
}

json ValidationReport::to_json() const {
  return json{{"samples", samples},
              {"accuracy", accuracy.to_json()},
              {"latency", latency.to_json()},
              {"energy", energy ? energy->to_json() : json(nullptr)}};
}

// --- sampling convergence ------------------------------------------------

std::size_t hosts_for_fraction(const SearchSpace& space, double fraction) {
  if (!(fraction > 0.0)) throw Error(ErrorCode::kInvalidArgument, "fraction must be positive");
  const double pop = static_cast<double>(max_host_population(space));
  return static_cast<std::size_t>(std::max(1.0, std::ceil(fraction * pop)));
}

ConvergenceReport sampling_convergence(const SearchSpace& space, const Oracle& oracle,
                                       const std::vector<std::size_t>& sample_counts,
                                       const std::vector<std::uint64_t>& seeds,
                                       std::string_view device,
                                       const ValidationOptions& validation) {
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "no seeds given");
  ConvergenceReport report;
  std::optional<BlockDeltaTable> full;
  if (space.candidate_count_saturating() <= enumeration_cap()) {
    full = estimate_full(space, oracle);
    report.full = validate_predictor(space, oracle, *full, device, validation);
  }
  const double pop = static_cast<double>(max_host_population(space));
  for (std::size_t count : sample_counts) {
    std::vector<double> rho, rmse, drmse;
    for (std::uint64_t seed : seeds) {
      const BlockDeltaTable t = estimate_partial(space, oracle, {count, seed, true});
      const ValidationReport v = validate_predictor(space, oracle, t, device, validation);
      rho.push_back(v.accuracy.spearman);
      rmse.push_back(v.accuracy.rmse);
      if (full) drmse.push_back(delta_rmse(t, *full));
    }
    ConvergencePoint p;
    p.sample_count = count;
    p.host_fraction = static_cast<double>(count) / pop;
    p.spearman_mean = mean_of(rho);
    p.spearman_sd = sd_of(rho);
    p.rmse_mean = mean_of(rmse);
    p.rmse_sd = sd_of(rmse);
    p.delta_rmse_mean = full ? mean_of(drmse) : kNaN;
    p.delta_rmse_sd = full ? sd_of(drmse) : kNaN;
    report.points.push_back(p);
  }
  return report;
}

json ConvergenceReport::to_json() const {
  json pts = json::array();
  for (const auto& p : points) {
    pts.push_back({{"sample_count", p.sample_count},
                   {"host_fraction", p.host_fraction},
                   {"spearman_mean", num(p.spearman_mean)},
                   {"spearman_sd", num(p.spearman_sd)},
                   {"rmse_mean", num(p.rmse_mean)},
                   {"rmse_sd", num(p.rmse_sd)},
                   {"delta_rmse_mean", num(p.delta_rmse_mean)},
                   {"delta_rmse_sd", num(p.delta_rmse_sd)}});
  }
  return json{{"full", full ? full->to_json() : json(nullptr)}, {"points", pts}};
}

// --- fits ----------------------------------------------------------------

const char* to_string(FitFamily family) {
  switch (family) {
    case FitFamily::kLinear: return "linear";
    case FitFamily::kQuadratic: return "quadratic";
    case FitFamily::kReciprocal: return "reciprocal";
    case FitFamily::kLog: return "log";
    case FitFamily::kExp: return "exp";
  }
  return "unknown";
}

namespace {

void score_fit(FitReport& r, const Eigen::VectorXd& y, const Eigen::VectorXd& fitted) {
  const double n = static_cast<double>(y.size());
  const double ss_res = (y - fitted).squaredNorm();
  const double ss_tot = (y.array() - y.mean()).square().sum();
  r.mse = ss_res / n;
  r.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : -kInf);
  r.dc = r.r2;
}

FitReport fit_linear_basis(FitFamily family, const Eigen::MatrixXd& basis,
                           const Eigen::VectorXd& y) {
  FitReport r;
  r.family = family;
  const Eigen::VectorXd coef = basis.colPivHouseholderQr().solve(y);
  r.params.assign(coef.data(), coef.data() + coef.size());
  score_fit(r, y, basis * coef);
  return r;
}

// Damped Gauss-Newton on a*exp(b*F), started from the log-linear fit.
FitReport fit_exp(const Eigen::VectorXd& f, const Eigen::VectorXd& y) {
  FitReport r;
  r.family = FitFamily::kExp;
  const Eigen::Index n = f.size();
  double a = y.mean(), b = 0.0;
  const bool same_sign = (y.array() > 0.0).all() || (y.array() < 0.0).all();
  if (same_sign) {
    const double s = y(0) > 0.0 ? 1.0 : -1.0;
    Eigen::MatrixXd basis(n, 2);
    basis.col(0).setOnes();
    basis.col(1) = f;
    const Eigen::VectorXd c = basis.colPivHouseholderQr().solve((s * y).array().log().matrix());
    a = s * std::exp(c(0));
    b = c(1);
  }
  auto residual = [&](double aa, double bb) {
    return (y.array() - aa * (bb * f.array()).exp()).matrix();
  };
  double cost = residual(a, b).squaredNorm();
  double mu = 1e-3;
  r.converged = false;
  for (int it = 0; it < 200 && std::isfinite(cost); ++it) {
    const Eigen::ArrayXd e = (b * f.array()).exp();
    Eigen::MatrixXd jac(n, 2);
    jac.col(0) = e.matrix();
    jac.col(1) = (a * f.array() * e).matrix();
    const Eigen::VectorXd res = residual(a, b);
    Eigen::Matrix2d h = jac.transpose() * jac;
    const Eigen::Vector2d g = jac.transpose() * res;
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::Matrix2d damped = h;
      damped.diagonal() *= 1.0 + mu;
      const Eigen::Vector2d step = damped.ldlt().solve(g);
      const double na = a + step(0), nb = b + step(1);
      const double nc = residual(na, nb).squaredNorm();
      if (std::isfinite(nc) && nc <= cost) {
        const double rel = (cost - nc) / std::max(cost, 1e-300);
        a = na;
        b = nb;
        cost = nc;
        mu = std::max(mu / 10.0, 1e-12);
        improved = true;
        if (rel < 1e-14) r.converged = true;
        break;
      }
      mu *= 10.0;
    }
    if (!improved) {
      r.converged = true;  // no descent direction left: stationary point
      break;
    }
    if (r.converged) break;
  }
  if (!std::isfinite(cost) || !std::isfinite(a) || !std::isfinite(b)) {
    r.converged = false;
  }
  r.params = {a, b};
  if (!r.converged) {
    r.r2 = -kInf;
    r.dc = -kInf;
    r.mse = kNaN;
    return r;
  }
  score_fit(r, y, (a * (b * f.array()).exp()).matrix());
  return r;
}

}  // namespace

std::vector<FitReport> fit_delta_law(const std::vector<double>& flops,
                                     const std::vector<double>& delta) {
  if (flops.size() != delta.size()) {
    throw Error(ErrorCode::kInvalidArgument, "flops and delta differ in length");
  }
  if (flops.size() < 3) throw Error(ErrorCode::kInvalidArgument, "fit needs at least 3 points");
  for (double v : flops) {
    if (!(v > 0.0)) throw Error(ErrorCode::kInvalidArgument, "flops must be positive");
  }
  if (std::all_of(flops.begin(), flops.end(), [&](double v) { return v == flops[0]; })) {
    throw Error(ErrorCode::kInvalidArgument, "degenerate fit: all flops are equal");
  }
  const auto n = static_cast<Eigen::Index>(flops.size());
  const Eigen::Map<const Eigen::VectorXd> f(flops.data(), n);
  const Eigen::Map<const Eigen::VectorXd> y(delta.data(), n);

  std::vector<FitReport> out;
  Eigen::MatrixXd basis(n, 2);
  basis.col(0).setOnes();
  basis.col(1) = f;
  out.push_back(fit_linear_basis(FitFamily::kLinear, basis, y));

  Eigen::MatrixXd quad(n, 3);
  quad.col(0).setOnes();
  quad.col(1) = f;
  quad.col(2) = f.array().square().matrix();
  out.push_back(fit_linear_basis(FitFamily::kQuadratic, quad, y));

  basis.col(1) = f.array().inverse().matrix();
  out.push_back(fit_linear_basis(FitFamily::kReciprocal, basis, y));

  basis.col(1) = f.array().log().matrix();
  out.push_back(fit_linear_basis(FitFamily::kLog, basis, y));

  out.push_back(fit_exp(f, y));

  std::stable_sort(out.begin(), out.end(),
                   [](const FitReport& a, const FitReport& b) { return a.r2 > b.r2; });
  return out;
}

json FitReport::to_json() const {
  json j{{"family", to_string(family)},
         {"params", params},
         {"r2", num(r2)},
         {"mse", num(mse)},
         {"dc", num(dc)},
         {"converged", converged}};
  if (family == FitFamily::kReciprocal) j["alpha"] = params.at(1);
  return j;
}

// --- Pareto --------------------------------------------------------------

std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> points) {
  std::sort(points.begin(), points.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    if (a.latency != b.latency) return a.latency < b.latency;
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    return a.config < b.config;
  });
  std::vector<ParetoPoint> front;
  for (auto& p : points) {
    if (!front.empty() && p.accuracy <= front.back().accuracy) continue;
    front.push_back(std::move(p));
  }
  return front;
}

double pareto_regret(const std::vector<ParetoPoint>& front, double latency, double accuracy) {
  double best = -kInf;
  for (const auto& p : front) {
    if (p.latency > latency) break;
    best = std::max(best, p.accuracy);
  }
  return std::isfinite(best) ? std::max(0.0, best - accuracy) : 0.0;
}

ParetoReport pareto_sweep(const SearchSpace& space, const Oracle& oracle,
                          const BlockDeltaTable& table, std::vector<double> budgets,
                          std::string_view device, const ParetoOptions& options) {
  table.check_space(space);
  const std::size_t d = table.device_index(device);
  std::vector<PerfTriple> perf;
  std::vector<ParetoPoint> all;
  enumerate_all(
      space, oracle,
      [&](const NetworkConfig& cfg, const PerfTriple& p) {
        perf.push_back(p);
        all.push_back({p.latency[d], p.accuracy, cfg});
      },
      options.cap);

  ParetoReport report;
  if (budgets.empty()) {
    double lo = kInf, hi = -kInf;
    for (const auto& p : all) {
      lo = std::min(lo, p.latency);
      hi = std::max(hi, p.latency);
    }
    constexpr int kPoints = 20;
    for (int k = 0; k < kPoints; ++k) budgets.push_back(lo + (hi - lo) * k / (kPoints - 1));
  }
  report.true_front = pareto_front(all);

  SearchOptions so;
  so.device = std::string(device);
  so.time_limit = options.time_limit;
  so.cap = options.cap;
  double regret_sum = 0.0;
  for (double b : budgets) {
    SweepPoint sp;
    sp.budget = b;
    so.lat_budget = b;
    so.objective_form = options.objective_form;
    const SearchProblem problem = build_problem(space, table, so);
    const SearchResult res = solve(problem);
    sp.status = res.status;
    if (res.config) {
      const PerfTriple& truth = perf[config_index(space, *res.config)];
      sp.config = res.config;
      sp.latency = truth.latency[d];
      sp.accuracy = truth.accuracy;
      sp.predicted_accuracy = res.prediction->accuracy;
      sp.objective = res.objective_value;
      SearchOptions eq6 = so;
      eq6.objective_form = ObjectiveForm::kEq6GlobalMeanFlops;
      sp.eq5_eq6_gap = res.prediction->accuracy_unclamped -
                       build_problem(space, table, eq6).objective(*res.config);
      sp.regret = pareto_regret(report.true_front, sp.latency, sp.accuracy);
      regret_sum += sp.regret;
      ++report.feasible_points;
      if (sp.regret == 0.0) ++report.zero_regret_points;
    }
    report.searched.push_back(sp);
  }
  report.mean_regret =
      report.feasible_points ? regret_sum / static_cast<double>(report.feasible_points) : kNaN;

  if (options.random_trials > 0) {
    const std::uint64_t evals = std::max<std::uint64_t>(table.evaluations, 1);
    report.random_evaluations = evals;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < options.random_trials; ++t) {
      const auto sample = sample_configs(space, evals,
                                         derive_seed(options.seed, "random/" + std::to_string(t)));
      for (const auto& sp : report.searched) {
        if (!sp.config) continue;
        const PerfTriple* best = nullptr;
        for (const auto& cfg : sample) {
          const PerfTriple& p = perf[config_index(space, cfg)];
          if (p.latency[d] > sp.budget) continue;
          if (!best || p.accuracy > best->accuracy) best = &p;
        }
        if (!best) continue;
        sum += pareto_regret(report.true_front, best->latency[d], best->accuracy);
        ++count;
      }
    }
    if (count > 0) report.random_mean_regret = sum / static_cast<double>(count);
  }
  return report;
}

json ParetoReport::to_json() const {
  json front = json::array();
  for (const auto& p : true_front) {
    front.push_back({{"latency", p.latency}, {"accuracy", p.accuracy}, {"config", p.config.to_string()}});
  }
  json pts = json::array();
  for (const auto& s : searched) {
    json j{{"budget", s.budget}, {"status", to_string(s.status)}};
    if (s.config) {
      j["config"] = s.config->to_string();
      j["latency"] = s.latency;
      j["accuracy"] = s.accuracy;
      j["predicted_accuracy"] = s.predicted_accuracy;
      j["objective"] = s.objective;
      j["eq5_eq6_gap"] = s.eq5_eq6_gap;
      j["regret"] = s.regret;
    }
    pts.push_back(std::move(j));
  }
  return json{{"true_front", front},
              {"searched", pts},
              {"mean_regret", num(mean_regret)},
              {"zero_regret_points", zero_regret_points},
              {"feasible_points", feasible_points},
              {"random_mean_regret", random_mean_regret ? num(*random_mean_regret) : json(nullptr)},
              {"random_evaluations", random_evaluations}};
}

// --- ablation ------------------------------------------------------------

const char* to_string(AblationVariant variant) {
  switch (variant) {
    case AblationVariant::kComplete: return "complete";
    case AblationVariant::kNoFlopsInfo: return "no_flops_info";
    case AblationVariant::kRandomBasenet: return "random_basenet";
    case AblationVariant::kRandomBaseblock: return "random_baseblock";
  }
  return "unknown";
}

AblationVariant parse_ablation_variant(std::string_view text) {
  for (auto v : {AblationVariant::kComplete, AblationVariant::kNoFlopsInfo,
                 AblationVariant::kRandomBasenet, AblationVariant::kRandomBaseblock}) {
    if (text == to_string(v)) return v;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown ablation variant '" + std::string(text) + "'");
}

std::vector<AblationRow> ablation_suite(const SearchSpace& space, const Oracle& oracle,
                                        const std::vector<AblationVariant>& variants,
                                        std::string_view device,
                                        const AblationOptions& options) {
  const std::size_t d = space.device_index(device);
  if (options.random_draws == 0) throw Error(ErrorCode::kInvalidArgument, "random_draws must be >= 1");
  const auto configs = sample_configs(space, options.sample_count, options.seed);
  std::vector<PerfTriple> truth;
  truth.reserve(configs.size());
  for (const auto& cfg : configs) truth.push_back(oracle.evaluate(cfg));

  auto score = [&](const BlockDeltaTable& table, bool flops_scaling) {
    std::vector<double> pa, aa, pl, al;
    for (std::size_t k = 0; k < configs.size(); ++k) {
      const Prediction p = flops_scaling ? predict(table, space, configs[k], device)
                                         : predict_no_flops_scaling(table, space, configs[k], device);
      pa.push_back(p.accuracy);
      aa.push_back(truth[k].accuracy);
      pl.push_back(p.latency);
      al.push_back(truth[k].latency[d]);
    }
    return std::make_pair(correlation(pa, aa), correlation(pl, al));
  };
  auto accumulate_mean = [](CorrelationReport& acc, const CorrelationReport& r, double w) {
    acc.spearman += w * r.spearman;
    acc.kendall_tau += w * r.kendall_tau;
    acc.mse += w * r.mse;
    acc.mae += w * r.mae;
    acc.rmse += w * r.rmse;
    acc.n = r.n;
  };

  std::vector<AblationRow> rows;
  for (AblationVariant v : variants) {
    AblationRow row;
    row.variant = v;
    if (v == AblationVariant::kComplete || v == AblationVariant::kNoFlopsInfo) {
      const BlockDeltaTable table = estimate_single(space, oracle);
      std::tie(row.accuracy, row.latency) = score(table, v == AblationVariant::kComplete);
      rows.push_back(std::move(row));
      continue;
    }
    const bool basenet = v == AblationVariant::kRandomBasenet;
    Rng rng(derive_seed(options.seed, basenet ? "ablate/basenet" : "ablate/baseblock"));
    const double w = 1.0 / static_cast<double>(options.random_draws);
    for (std::size_t draw = 0; draw < options.random_draws; ++draw) {
      std::vector<int> c;
      for (const auto& node : space.nodes()) {
        std::vector<int> pool;
        for (int j = 0; j < node.size(); ++j) {
          if (basenet || !node.blocks[static_cast<std::size_t>(j)].is_noop) pool.push_back(j);
        }
        c.push_back(pool[rng.uniform_index(pool.size())]);
      }
      EstimateOptions eo;
      if (basenet) {
        eo.host_override = NetworkConfig(c);
        row.hosts.push_back(*eo.host_override);
      } else {
        eo.base_override = NetworkConfig(c);
        row.bases.push_back(*eo.base_override);
      }
      const auto [acc, lat] = score(estimate_single(space, oracle, eo), true);
      accumulate_mean(row.accuracy, acc, w);
      accumulate_mean(row.latency, lat, w);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

json configs_to_json(const std::vector<NetworkConfig>& configs) {
  json out = json::array();
  for (const auto& c : configs) out.push_back(c.to_string());
  return out;
}

}  // namespace

json ablation_to_json(const std::vector<AblationRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"variant", to_string(r.variant)},
                   {"accuracy", r.accuracy.to_json()},
                   {"latency", r.latency.to_json()},
                   {"hosts", configs_to_json(r.hosts)},
                   {"bases", configs_to_json(r.bases)}});
  }
  return out;
}

// --- unbiasedness --------------------------------------------------------

UnbiasednessReport unbiasedness_check(const SearchSpace& space, const Oracle& oracle,
                                      const std::vector<std::uint64_t>& seeds,
                                      std::size_t sample_count) {
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "no seeds given");
  const BlockDeltaTable full = estimate_full(space, oracle);
  std::vector<BlockDeltaTable> runs;
  for (std::uint64_t s : seeds) runs.push_back(estimate_partial(space, oracle, {sample_count, s, false}));

  UnbiasednessReport r;
  r.seeds = seeds.size();
  r.sample_count = sample_count;
  if (seeds.size() == 1) r.warnings.push_back("single seed: z-scores undefined");
  std::size_t within = 0;
  for (std::size_t i = 0; i < space.num_nodes(); ++i) {
    for (int j = 0; j < space.node(i).size(); ++j) {
      if (j == full.base_config[i]) continue;
      std::vector<double> v;
      for (const auto& t : runs) v.push_back(t.accuracy[i][static_cast<std::size_t>(j)]);
      BlockZScore z;
      z.node = i;
      z.block = j;
      z.full = full.accuracy[i][static_cast<std::size_t>(j)];
      z.mean = mean_of(v);
      z.se = sd_of(v) / std::sqrt(static_cast<double>(v.size()));
      const double diff = z.mean - z.full;
      const double tiny = 1e-12 * std::max(1.0, std::abs(z.full));
      if (v.size() < 2) {
        z.z = kNaN;
      } else if (z.se <= tiny) {
        z.z = std::abs(diff) <= tiny ? 0.0 : std::copysign(kInf, diff);
      } else {
        z.z = diff / z.se;
      }
      if (std::abs(z.z) <= 3.0) ++within;
      r.blocks.push_back(z);
    }
  }
  r.fraction_within_3se =
      r.blocks.empty() ? 1.0 : static_cast<double>(within) / static_cast<double>(r.blocks.size());
  return r;
}

json UnbiasednessReport::to_json() const {
  json b = json::array();
  for (const auto& z : blocks) {
    b.push_back({{"node", z.node}, {"block", z.block}, {"full", z.full}, {"mean", z.mean},
                 {"se", z.se}, {"z", num(z.z)}});
  }
  return json{{"seeds", seeds},
              {"sample_count", sample_count},
              {"fraction_within_3se", fraction_within_3se},
              {"warnings", warnings},
              {"blocks", b}};
}

}  // namespace blocknas
