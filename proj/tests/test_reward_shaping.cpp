#include <gtest/gtest.h>

#include <random>

#include "marsbid/reward_shaping.hpp"

using namespace marsbid;

TEST(RewardSafe, Examples) {
  const ShapingParams p;
  EXPECT_DOUBLE_EQ(reward_safe(100, 1, p), 100);
  EXPECT_DOUBLE_EQ(reward_safe(100, 0, p), -50);
  EXPECT_DOUBLE_EQ(reward_safe(-100, 1, p), -100);
  EXPECT_THROW(reward_safe(NAN, 0.5, p), std::invalid_argument);
  EXPECT_THROW(reward_safe(1, 1.5, p), std::invalid_argument);
}

TEST(RewardSpec, ExamplesAndMirror) {
  const ShapingParams p;
  EXPECT_DOUBLE_EQ(reward_spec(100, 0, p), 100);
  EXPECT_DOUBLE_EQ(reward_spec(100, 1, p), -50);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> pi(-5000, 5000), a(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const double x = pi(rng), al = a(rng);
    EXPECT_DOUBLE_EQ(reward_spec(x, al, p), reward_safe(x, 1 - al, p));
    EXPECT_NEAR(reward_safe(x, al, p) + reward_spec(x, al, p), x - std::abs(x) * p.lambda_role, 1e-9 * std::abs(x) + 1e-12);
  }
}

TEST(RewardSafe, MonotoneInAlphaBySign) {
  const ShapingParams p;
  for (int i = 0; i < 20; ++i) {
    const double a = i * 0.05, b = (i + 1) * 0.05;
    EXPECT_LT(reward_safe(250, a, p), reward_safe(250, b, p));
    EXPECT_GT(reward_safe(-250, a, p), reward_safe(-250, b, p));
  }
}

TEST(RewardMeta, ExamplesAndConcavity) {
  const ShapingParams p;
  EXPECT_DOUBLE_EQ(reward_meta(0, p), 0);
  EXPECT_NEAR(reward_meta(1000, p), -249, 1e-12);
  double best = -1e300, arg = 0;
  for (int i = -4000; i <= 4000; ++i) {
    const double x = i * 0.001;
    if (reward_meta(x, p) > best) {
      best = reward_meta(x, p);
      arg = x;
    }
  }
  EXPECT_NEAR(arg, 2.0, 1e-9);
  const double h = 7.0;
  for (double x = -3000; x < 3000; x += 123.0) {
    const double d2 = reward_meta(x + h, p) - 2 * reward_meta(x, p) + reward_meta(x - h, p);
    EXPECT_NEAR(d2 / (h * h), -p.lambda_risk / (p.s_var * p.s_var), 1e-9);
  }
  EXPECT_THROW(reward_meta(INFINITY, p), std::invalid_argument);
}

TEST(RewardNeutral, Examples) {
  const ShapingParams p;
  EXPECT_DOUBLE_EQ(reward_neutral(100, 0.5, p), 100);
  EXPECT_DOUBLE_EQ(reward_neutral(100, 0.7, p), 100);
  EXPECT_DOUBLE_EQ(reward_neutral(100, 0.3, p), 100);
  EXPECT_NEAR(reward_neutral(100, 1.0, p), 50, 1e-12);
  EXPECT_NEAR(reward_neutral(-100, 0.0, p), -150, 1e-12);
  ShapingParams bad = p;
  bad.neutral_band = 0.5;
  EXPECT_THROW(reward_neutral(1, 0.5, bad), std::invalid_argument);
}

TEST(RewardCvar, Examples) {
  const ShapingParams p;
  const std::vector<double> zeros(100, 0.0);
  EXPECT_DOUBLE_EQ(reward_cvar_shaped(-10, zeros, p), -60);
  EXPECT_DOUBLE_EQ(reward_cvar_shaped(5, zeros, p), 5);
  EXPECT_DOUBLE_EQ(reward_cvar_shaped(-10, {}, p), -10);
  EXPECT_DOUBLE_EQ(reward_cvar_shaped(-10, std::vector<double>(19, 0.0), p), -10);
  std::vector<double> ramp;
  for (int i = 1; i <= 100; ++i) ramp.push_back(i);
  EXPECT_DOUBLE_EQ(empirical_quantile(ramp, 0.05), 5.0);
  EXPECT_DOUBLE_EQ(reward_cvar_shaped(1, ramp, p), 1 - 5.0 * 4.0);
}

TEST(ShapingParams, Validation) {
  ShapingParams p;
  EXPECT_NO_THROW(p.validate());
  p.cvar_alpha = 1.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.s_var = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.lambda_role = -1;
  EXPECT_THROW(p.validate(), ConfigError);
}
