#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "blocknas/error.hpp"
#include "blocknas/estimator.hpp"
#include "blocknas/presets.hpp"
#include "fixtures.hpp"

using namespace blocknas;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

void expect_base_rows_zero(const SearchSpace& s, const BlockDeltaTable& t) {
  for (std::size_t i = 0; i < s.num_nodes(); ++i) {
    const auto b = static_cast<std::size_t>(t.base_config[i]);
    EXPECT_EQ(t.accuracy[i][b], 0.0);
    for (std::size_t d = 0; d < t.devices.size(); ++d) {
      EXPECT_EQ(t.latency[d][i][b], 0.0);
      if (!std::isnan(t.energy[d][i][b])) EXPECT_EQ(t.energy[d][i][b], 0.0);
    }
  }
}

SyntheticModel noisy_model(const SearchSpace& s, std::uint64_t seed, double sigma) {
  SyntheticModel m = fixtures::noiseless_model(s, seed);
  m.noise_sigma = sigma;
  return m;
}

}  // namespace

TEST(EstimateFull, LatencyDeltasArePairwiseDifferences) {
  const auto s = fixtures::random_space(3, 4, 21);
  const SyntheticOracle o(s, noisy_model(s, 2, 0.01));  // accuracy noise only
  const auto t = estimate_full(s, o);
  expect_base_rows_zero(s, t);
  for (std::size_t i = 0; i < 3; ++i) {
    const int b = t.base_config[i];
    for (int j = 0; j < 4; ++j) {
      for (std::size_t d = 0; d < 2; ++d) {
        EXPECT_NEAR(t.latency[d][i][j], s.block(i, b).latency[d] - s.block(i, j).latency[d],
                    1e-12);
      }
      EXPECT_NEAR(t.energy[0][i][j], s.block(i, b).energy[0] - s.block(i, j).energy[0], 1e-12);
      if (j != b) EXPECT_TRUE(std::isnan(t.energy[1][i][j]));
    }
  }
}

TEST(EstimateFull, TwoByTwoAccuracyMatchesHandEnumeration) {
  const auto s = fixtures::random_space(2, 2, 8);
  const SyntheticOracle o(s, noisy_model(s, 3, 0.02));
  const auto t = estimate_full(s, o);
  const int b0 = s.node(0).base_block;
  const int j = 1 - b0;
  double sum = 0.0;
  for (int other = 0; other < 2; ++other) {
    sum += o.evaluate(NetworkConfig({b0, other})).accuracy -
           o.evaluate(NetworkConfig({j, other})).accuracy;
  }
  EXPECT_NEAR(t.accuracy[0][static_cast<std::size_t>(j)], sum / 2.0, 1e-15);
  EXPECT_EQ(t.evaluations, 4u);
}

TEST(EstimateFull, CapExceeded) {
  const SearchSpace s = preset_space("custom:12x4", 0);
  const SyntheticOracle o(s, default_model(s, 0));
  EXPECT_EQ(code_of([&] { estimate_full(s, o); }), ErrorCode::kCapExceeded);
}

TEST(EstimateFull, TabularMissPropagates) {
  const auto s = fixtures::random_space(2, 2, 1);
  const TabularOracle o(s, {});
  EXPECT_EQ(code_of([&] { estimate_full(s, o); }), ErrorCode::kOracleMiss);
}

TEST(EstimatePartial, ExhaustiveWithoutReplacementEqualsFull) {
  const auto s = fixtures::random_space(3, 3, 4);
  const SyntheticOracle o(s, noisy_model(s, 5, 0.01));
  const auto full = estimate_full(s, o);
  const auto part = estimate_partial(s, o, {9, 77, true});
  EXPECT_EQ(part.accuracy, full.accuracy);
  EXPECT_EQ(part.latency, full.latency);
}

TEST(EstimatePartial, LatencyExactForAnyCount) {
  const auto s = fixtures::random_space(4, 3, 6);
  const SyntheticOracle o(s, noisy_model(s, 5, 0.01));
  const auto full = estimate_full(s, o);
  for (std::size_t count : {1u, 3u}) {
    const auto part = estimate_partial(s, o, {count, 11, false});
    expect_base_rows_zero(s, part);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_NEAR(part.latency[0][i][j], full.latency[0][i][j], 1e-12);
      }
    }
  }
}

TEST(EstimatePartial, DeterministicPerSeed) {
  const auto s = fixtures::random_space(4, 3, 6);
  const SyntheticOracle o(s, noisy_model(s, 5, 0.01));
  EXPECT_EQ(estimate_partial(s, o, {2, 1}).accuracy, estimate_partial(s, o, {2, 1}).accuracy);
  EXPECT_NE(estimate_partial(s, o, {2, 1}).accuracy, estimate_partial(s, o, {2, 2}).accuracy);
  EXPECT_EQ(code_of([&] { estimate_partial(s, o, {0, 1}); }), ErrorCode::kInvalidArgument);
}

TEST(EstimatePartial, ErrorShrinksWithSampleCount) {
  const auto s = fixtures::random_space(4, 4, 30);
  const SyntheticOracle o(s, noisy_model(s, 9, 0.01));
  const auto full = estimate_full(s, o);
  std::vector<double> rmse;
  for (std::size_t count : {1u, 2u, 5u, 10u, 50u}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto t = estimate_partial(s, o, {count, seed});
      double sq = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
          sq += std::pow(t.accuracy[i][j] - full.accuracy[i][j], 2);
          ++n;
        }
      }
      total += std::sqrt(sq / n);
    }
    rmse.push_back(total / 20.0);
  }
  for (std::size_t k = 1; k < rmse.size(); ++k) EXPECT_LE(rmse[k], rmse[k - 1]) << k;
}

TEST(EstimateSingle, LatencyMatchesFull) {
  const auto s = fixtures::random_space(3, 4, 12);
  const SyntheticOracle o(s, noisy_model(s, 1, 0.01));
  const auto full = estimate_full(s, o);
  const auto single = estimate_single(s, o);
  expect_base_rows_zero(s, single);
  for (std::size_t d = 0; d < 2; ++d) {
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_NEAR(single.latency[d][i][j], full.latency[d][i][j], 1e-12);
      }
    }
  }
  EXPECT_EQ(single.host_network, select_average_flops_network(s));
}

TEST(EstimateSingle, ScaledDeltasWithinTwoPercentOfFull) {
  // Single-host deltas rescaled by Fc / F(variant), entry by entry.
  const SearchSpace s = preset_space("custom:5x3", 3);
  const SyntheticOracle o(s, default_model(s, 3));
  const auto full = estimate_full(s, o);
  const auto single = estimate_single(s, o);
  const NetworkConfig avg = select_average_flops_network(s);
  for (std::size_t i = 0; i < 5; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (j == avg[i]) continue;
      const double f = network_flops(s, avg.with_choice(i, j));
      const double scaled = single.accuracy[i][j] * single.mean_flops_containing[i][j] / f;
      EXPECT_NEAR(scaled, full.accuracy[i][j], 0.02 * std::abs(full.accuracy[i][j]))
          << i << "," << j;
    }
  }
}

TEST(EvaluationBudget, SingleWithAverageBase) {
  // m = 5, n = 4, base = average block everywhere: 1 + 5 * 3.
  const SearchSpace s = preset_space("custom:5x4", 1);
  ASSERT_EQ(base_network(s), select_average_flops_network(s));
  EXPECT_EQ(evaluation_budget(s, EstimationMode::kSingle), 16u);
  const SyntheticOracle o(s, default_model(s, 1));
  const CountingOracle c(o);
  const auto t = estimate_single(s, c);
  EXPECT_EQ(c.calls(), 16u);
  EXPECT_EQ(t.evaluations, 16u);
}

TEST(EvaluationBudget, FullTwoByTwo) {
  const auto s = fixtures::random_space(2, 2, 2);
  EXPECT_EQ(evaluation_budget(s, EstimationMode::kFull), 4u);
  const SyntheticOracle o(s, fixtures::noiseless_model(s, 0));
  const CountingOracle c(o);
  estimate_full(s, c);
  EXPECT_EQ(c.calls(), 4u);
}

TEST(EvaluationBudget, PartialMatchesCallCounter) {
  const auto s = fixtures::random_space(4, 3, 17);
  const SyntheticOracle o(s, fixtures::noiseless_model(s, 0));
  for (std::size_t count : {1u, 2u, 4u}) {
    const CountingOracle c(o);
    const PartialSpec spec{count, 5};
    const auto t = estimate_partial(s, c, spec);
    EXPECT_EQ(c.calls(), evaluation_budget(s, EstimationMode::kPartial, {}, spec));
    EXPECT_EQ(t.evaluations, c.calls());
    // Each (node, block) pair costs at most a host and a variant, plus the base.
    EXPECT_LE(c.calls(), 2u * count * (4u * 2u) + 1u);
  }
  EXPECT_EQ(code_of([&] { evaluation_budget(s, EstimationMode::kPartial); }),
            ErrorCode::kInvalidArgument);
}

TEST(EstimateOptions, BaseOverrideAndHostOverride) {
  const auto s = fixtures::random_space(3, 3, 5);
  const SyntheticOracle o(s, fixtures::noiseless_model(s, 1));
  EstimateOptions eo;
  eo.base_override = NetworkConfig({2, 2, 2});
  const auto t = estimate_single(s, o, eo);
  EXPECT_EQ(t.base_config, NetworkConfig({2, 2, 2}));
  expect_base_rows_zero(s, t);
  EstimateOptions ho;
  ho.host_override = NetworkConfig({1, 0, 2});
  EXPECT_EQ(estimate_single(s, o, ho).host_network, NetworkConfig({1, 0, 2}));
}

TEST(DeltaTable, JsonRoundTripAndFingerprint) {
  const SearchSpace s = preset_space("nb201", 0);
  const SyntheticOracle o(s, default_model(s, 0));
  const auto t = estimate_partial(s, o, {3, 4});
  const auto path = std::filesystem::temp_directory_path() / "blocknas_deltas_rt.json";
  t.save(path);
  const auto back = BlockDeltaTable::load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.accuracy, t.accuracy);
  EXPECT_EQ(back.latency, t.latency);
  EXPECT_EQ(back.fingerprint, t.fingerprint);
  EXPECT_EQ(back.mode, EstimationMode::kPartial);
  EXPECT_EQ(back.sample_count, 3u);
  EXPECT_EQ(back.base_perf, t.base_perf);
  EXPECT_NO_THROW(back.check_space(s));
  EXPECT_EQ(code_of([&] { back.check_space(preset_space("nb201", 1)); }),
            ErrorCode::kFingerprintMismatch);
  EXPECT_EQ(code_of([&] { back.device_index("tpu"); }), ErrorCode::kUnknownDevice);
}
