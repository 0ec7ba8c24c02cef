#include <gtest/gtest.h>

#include <cmath>

#include "blocknas/error.hpp"
#include "blocknas/estimator.hpp"
#include "blocknas/predictor.hpp"
#include "blocknas/presets.hpp"
#include "fixtures.hpp"

using namespace blocknas;

namespace {

SearchSpace scaled(const SearchSpace& s, double c) {
  auto nodes = s.nodes();
  for (auto& n : nodes) {
    for (auto& b : n.blocks) b.flops *= c;
  }
  return SearchSpace(s.name(), s.devices(), nodes);
}

}  // namespace

TEST(Predict, BaseNetworkReturnsBasePerf) {
  const SearchSpace s = preset_space("custom:4x3", 2);
  const SyntheticOracle o(s, default_model(s, 2));
  const auto t = estimate_single(s, o);
  const auto p = predict(t, s, t.base_config, "gpu");
  EXPECT_EQ(p.accuracy, t.base_perf.accuracy);
  EXPECT_EQ(p.latency, t.base_perf.latency[0]);
  EXPECT_EQ(p.energy, t.base_perf.energy[0]);
  const auto q = predict_no_flops_scaling(t, s, t.base_config, "cpu");
  EXPECT_EQ(q.accuracy, t.base_perf.accuracy);
  EXPECT_EQ(q.latency, t.base_perf.latency[1]);
}

TEST(Predict, LatencyArithmetic) {
  const auto s = fixtures::random_space(2, 2, 1);
  BlockDeltaTable t;
  t.fingerprint = s.fingerprint();
  t.devices = s.devices();
  t.base_config = NetworkConfig({0, 0});
  t.base_perf = {0.5, {100.0, 50.0}, {10.0, std::nan("")}};
  t.accuracy = {{0, 0}, {0, 0}};
  t.latency = {{{0, 20.0}, {0, 0}}, {{0, 0}, {0, 0}}};
  t.energy = {{{0, 0}, {0, 0}}, {{0, 0}, {0, 0}}};
  t.mean_flops_containing = {{1, 1}, {1, 1}};
  t.mean_space_flops = 1;
  EXPECT_DOUBLE_EQ(predict(t, s, NetworkConfig({1, 0}), "gpu").latency, 80.0);
  EXPECT_TRUE(std::isnan(predict(t, s, NetworkConfig({1, 0}), "cpu").energy));
}

TEST(Predict, ExactOnConstantFlopsNoiselessSpace) {
  const auto s = fixtures::random_space(4, 4, 3, true);
  const SyntheticOracle o(s, fixtures::noiseless_model(s, 8));
  const auto t = estimate_full(s, o);
  for_each_config(s, [&](const NetworkConfig& c) {
    const auto p = predict(t, s, c, "gpu");
    const auto truth = o.evaluate(c);
    EXPECT_NEAR(p.accuracy, truth.accuracy, 1e-9);
    EXPECT_NEAR(p.latency, truth.latency[0], 1e-9);
    EXPECT_NEAR(p.energy, truth.energy[0], 1e-9);
    // Constant FLOPs make the ratio 1.
    EXPECT_NEAR(predict_no_flops_scaling(t, s, c, "gpu").accuracy, p.accuracy, 1e-12);
  });
}

TEST(Predict, LatencyExactOnAdditiveOracle) {
  const SearchSpace s = preset_space("custom:4x4", 6);
  SyntheticModel m = default_model(s, 6);
  m.noise_sigma = 0.02;
  const SyntheticOracle o(s, m);
  const auto t = estimate_full(s, o);
  for_each_config(s, [&](const NetworkConfig& c) {
    const auto truth = o.evaluate(c);
    EXPECT_NEAR(predict(t, s, c, "cpu").latency, truth.latency[1], 1e-9);
    EXPECT_NEAR(predict(t, s, c, "gpu").energy, truth.energy[0], 1e-9);
  });
}

TEST(Predict, ComponentsReassemble) {
  const SearchSpace s = preset_space("nb201", 3);
  const SyntheticOracle o(s, default_model(s, 3));
  const auto t = estimate_single(s, o);
  for (const auto& c : sample_configs(s, 200, 4)) {
    const auto p = predict(t, s, c, "gpu");
    double a = t.base_perf.accuracy, l = t.base_perf.latency[0], e = t.base_perf.energy[0];
    for (const auto& comp : p.components) {
      a -= comp.accuracy;
      l -= comp.latency;
      e -= comp.energy;
    }
    EXPECT_NEAR(a, p.accuracy_unclamped, 1e-12);
    EXPECT_NEAR(l, p.latency, 1e-12);
    EXPECT_NEAR(e, p.energy, 1e-12);
  }
}

TEST(Predict, InvariantUnderFlopsRescaling) {
  const SearchSpace s = preset_space("custom:3x4", 1);
  const SearchSpace s2 = scaled(s, 3.7);
  const SyntheticModel m = default_model(s, 1);
  const SyntheticOracle o(s, m), o2(s2, m);
  const auto t = estimate_single(s, o);
  const auto t2 = estimate_single(s2, o2);
  for_each_config(s, [&](const NetworkConfig& c) {
    EXPECT_NEAR(predict(t, s, c, "gpu").accuracy, predict(t2, s2, c, "gpu").accuracy, 1e-12);
  });
}

TEST(Predict, LatencyDecreasesInEachDelta) {
  const SearchSpace s = preset_space("custom:3x3", 1);
  const SyntheticOracle o(s, default_model(s, 1));
  auto t = estimate_single(s, o);
  const NetworkConfig c({1, 2, 0});
  const double before = predict(t, s, c, "gpu").latency;
  t.latency[0][1][2] += 0.5;
  EXPECT_LT(predict(t, s, c, "gpu").latency, before);
}

TEST(Predict, ClampAndErrors) {
  const SearchSpace s = preset_space("custom:2x2", 1);
  const SyntheticOracle o(s, default_model(s, 1));
  auto t = estimate_single(s, o);
  t.base_perf.accuracy = 1.2;
  const auto p = predict(t, s, t.base_config, "gpu");
  EXPECT_TRUE(p.clamped);
  EXPECT_EQ(p.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(p.accuracy_unclamped, 1.2);
  try {
    predict(t, preset_space("custom:2x2", 2), t.base_config, "gpu");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFingerprintMismatch);
  }
  try {
    predict(t, s, t.base_config, "tpu");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownDevice);
  }
}

TEST(PredictBatch, OrderAndErrors) {
  const SearchSpace s = preset_space("nb201", 0);
  const SyntheticOracle o(s, default_model(s, 0));
  const auto t = estimate_single(s, o);
  EXPECT_TRUE(predict_batch(t, s, {}, "gpu").empty());
  const auto two = predict_batch(t, s, {t.base_config, t.base_config}, "gpu");
  EXPECT_EQ(two[0].accuracy, two[1].accuracy);
  const auto configs = sample_configs(s, 1000, 9);
  const auto batch = predict_batch(t, s, configs, "gpu");
  for (std::size_t k = 0; k < configs.size(); ++k) {
    const auto p = predict(t, s, configs[k], "gpu");
    EXPECT_EQ(batch[k].accuracy, p.accuracy);
    EXPECT_EQ(batch[k].latency, p.latency);
  }
  try {
    predict_batch(t, s, {t.base_config, NetworkConfig({9, 0, 0, 0, 0, 0})}, "gpu");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("config #1", 0), 0u) << e.what();
  }
}

TEST(PredictNoFlops, RatioOneMatchesPredict) {
  // With every block at the node mean, each Fc equals F(cfg).
  const auto s = fixtures::random_space(3, 3, 2, true);
  const SyntheticOracle o(s, fixtures::noiseless_model(s, 2));
  const auto t = estimate_single(s, o);
  for_each_config(s, [&](const NetworkConfig& c) {
    EXPECT_NEAR(predict_no_flops_scaling(t, s, c, "gpu").accuracy,
                predict(t, s, c, "gpu").accuracy, 1e-12);
  });
}
