#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "grad_check.hpp"
#include "marsbid/policy_net.hpp"

using namespace marsbid;

namespace {

ActorCritic random_net(std::vector<std::size_t> dims, std::size_t ad, bool squash, std::uint64_t seed,
                       double log_std = -0.3) {
  ActorCritic net(std::move(dims), ad, squash);
  std::mt19937_64 rng(seed);
  net.initialize(rng);
  // Larger head weights so the policy gradient is not vanishingly small.
  std::normal_distribution<double> z(0.0, 0.3);
  for (auto& p : net.parameters()) p += z(rng);
  for (auto& ls : net.log_std()) ls = log_std;
  return net;
}

}  // namespace

TEST(Forward, ZeroNetworkGivesZeroOutputs) {
  ActorCritic net({5, 8, 8}, 2, true);
  const std::vector<double> obs{1, -2, 3, 0.5, 7};
  const auto out = net.forward(obs);
  EXPECT_EQ(out.mean, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(out.value, 0.0);
  EXPECT_EQ(out.log_std, (std::vector<double>{0.0, 0.0}));
}

TEST(Forward, SingleNeuronMatchesHandComputation) {
  // dims {1, 1}: actor w1,b1 | head w2,b2 | log_std | critic w3,b3 | value w4,b4
  ActorCritic net({1, 1}, 1, true);
  ASSERT_EQ(net.parameter_count(), 9u);
  const std::vector<double> p{0.7, -0.1, 1.3, 0.2, -0.5, -0.4, 0.3, 2.0, -1.0};
  std::copy(p.begin(), p.end(), net.parameters().begin());
  const double x = 0.9;
  const auto out = net.forward(std::vector<double>{x});
  EXPECT_NEAR(out.mean[0], 1.3 * std::tanh(0.7 * x - 0.1) + 0.2, 1e-15);
  EXPECT_NEAR(out.value, 2.0 * std::tanh(-0.4 * x + 0.3) - 1.0, 1e-15);
  EXPECT_EQ(out.log_std[0], -0.5);
}

TEST(Forward, DeterministicAndDimensionChecked) {
  const auto net = random_net({6, 16, 16}, 1, true, 3);
  const std::vector<double> obs{0.1, 0.2, -0.3, 0.4, 0.5, -0.6};
  const auto a = net.forward(obs), b = net.forward(obs);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.value, b.value);
  EXPECT_THROW(net.forward(std::vector<double>(5, 0.0)), std::invalid_argument);
}

TEST(Init, SeededAndScaled) {
  ActorCritic a({33, 64, 64}, 1, true), b({33, 64, 64}, 1, true);
  std::mt19937_64 r1(1), r2(1);
  a.initialize(r1);
  b.initialize(r2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.parameter_hash(), b.parameter_hash());
  const auto out = a.forward(std::vector<double>(33, 0.5));
  EXPECT_LT(std::abs(out.mean[0]), 0.1);
  for (double ls : a.log_std()) EXPECT_EQ(ls, 0.0);
}

TEST(Sample, NearDeterministicLimit) {
  std::mt19937_64 rng(1);
  const std::vector<double> mean{0.4}, ls{-20.0};
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(sample_action(mean, ls, true, rng).action[0], std::tanh(0.4), 1e-8);
}

TEST(Sample, SymmetricAroundZeroMean) {
  std::mt19937_64 rng(2);
  const std::vector<double> mean{0.0}, ls{0.0};
  double s = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const auto a = sample_action(mean, ls, true, rng).action[0];
    ASSERT_GE(a, -1.0);
    ASSERT_LE(a, 1.0);
    s += a;
  }
  EXPECT_NEAR(s / 100000.0, 0.0, 0.01);
}

TEST(Sample, LogProbMatchesHistogramDensity) {
  std::mt19937_64 rng(3);
  const std::vector<double> mean{0.3}, ls{-0.5};
  constexpr int kBins = 40;
  std::vector<int> hist(kBins, 0);
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double a = sample_action(mean, ls, true, rng).action[0];
    const int b = std::clamp(static_cast<int>((a + 1.0) / 2.0 * kBins), 0, kBins - 1);
    ++hist[b];
  }
  const double width = 2.0 / kBins;
  for (int b = 0; b < kBins; ++b) {
    // Bin mass from the density by a fine midpoint rule.
    double mass = 0.0;
    constexpr int kSub = 400;
    for (int k = 0; k < kSub; ++k) {
      const double a = -1.0 + b * width + (k + 0.5) * width / kSub;
      mass += std::exp(action_log_prob(mean, ls, std::vector<double>{std::atanh(a)}, true)) * width / kSub;
    }
    const double empirical = hist[b] / static_cast<double>(n);
    if (empirical * n < 2000) continue;  // too few samples for a 5% comparison
    EXPECT_NEAR(empirical / mass, 1.0, 0.05) << "bin " << b;
  }
}

TEST(Sample, SquashedDensityIntegratesToOne) {
  for (double m : {-1.0, 0.0, 0.7}) {
    for (double s : {-1.0, -0.3, 0.2}) {
      const std::vector<double> mean{m}, ls{s};
      const int n = 200000;
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        const double a = -1.0 + (i + 0.5) * 2.0 / n;
        total += std::exp(action_log_prob(mean, ls, std::vector<double>{std::atanh(a)}, true)) * 2.0 / n;
      }
      EXPECT_NEAR(total, 1.0, 0.01) << m << " " << s;
    }
  }
}

TEST(Backward, FiniteDifferencePerLossComponent) {
  std::mt19937_64 rng(4);
  for (bool squash : {true, false}) {
    const auto net = random_net({7, 5, 4}, squash ? 1 : 3, squash, 11);
    const auto batch = marsbid::testing::random_batch(net, 12, rng);
    EXPECT_LT(marsbid::testing::check_gradients(net, batch, 1, 0, 0).max_rel_err, 1e-4);
    EXPECT_LT(marsbid::testing::check_gradients(net, batch, 0, 1, 0).max_rel_err, 1e-4);
    EXPECT_LT(marsbid::testing::check_gradients(net, batch, 0, 0, 1).max_rel_err, 1e-4);
    EXPECT_LT(marsbid::testing::check_gradients(net, batch, 1, 0.5, 0.01).max_rel_err, 1e-4);
  }
}

TEST(Backward, DeadInputHasZeroGradient) {
  const auto net = random_net({4, 6, 6}, 1, true, 5);
  ForwardCache cache;
  std::vector<double> obs{0.5, 0.0, -0.2, 0.9};
  net.forward(obs, &cache);
  std::vector<double> grad(net.parameter_count(), 0.0);
  net.backward(cache, std::vector<double>{1.0}, std::vector<double>{0.0}, 0.0, grad);
  // Column 1 of the first actor layer multiplies a zero input.
  for (std::size_t row = 0; row < 6; ++row) EXPECT_EQ(grad[row * 4 + 1], 0.0);
  // No value sensitivity: the whole critic gradient is zero.
  const std::size_t critic_start = net.log_std_offset() + 1;
  for (std::size_t i = critic_start; i < grad.size(); ++i) EXPECT_EQ(grad[i], 0.0);
}

TEST(Backward, LinearInLossSensitivities) {
  const auto net = random_net({4, 6, 6}, 2, false, 6);
  ForwardCache cache;
  net.forward(std::vector<double>{0.1, 0.2, 0.3, 0.4}, &cache);
  std::vector<double> g1(net.parameter_count()), g2(net.parameter_count()), g12(net.parameter_count());
  net.backward(cache, std::vector<double>{0.3, -1.0}, std::vector<double>{0.2, 0.1}, 0.7, g1);
  net.backward(cache, std::vector<double>{-0.5, 2.0}, std::vector<double>{0.0, -0.4}, -1.2, g2);
  net.backward(cache, std::vector<double>{-0.2, 1.0}, std::vector<double>{0.2, -0.3}, -0.5, g12);
  for (std::size_t i = 0; i < g12.size(); ++i) EXPECT_NEAR(g12[i], g1[i] + g2[i], 1e-12);
}

TEST(Distribution, EntropyAndDeterministicAction) {
  EXPECT_NEAR(gaussian_entropy(std::vector<double>{0.0}), 0.5 * std::log(2 * std::numbers::pi * std::numbers::e), 1e-14);
  EXPECT_EQ(deterministic_action(std::vector<double>{0.5}, true)[0], std::tanh(0.5));
  EXPECT_EQ(deterministic_action(std::vector<double>{0.5}, false)[0], 0.5);
}
