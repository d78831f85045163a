#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "marsbid/baselines.hpp"

using namespace marsbid;
using marsbid::testing::flat_record;

namespace {

std::vector<HourlyMarketRecord> spread_history(std::size_t n, const std::function<double(std::size_t)>& spread,
                                               double scale = 1.0) {
  std::vector<HourlyMarketRecord> h;
  for (std::size_t i = 0; i < n; ++i) {
    h.push_back(flat_record(make_utc_hour(2022, 1, 1) + static_cast<std::int64_t>(i), scale * (50.0 + spread(i)),
                            scale * 50.0));
  }
  return h;
}

}  // namespace

TEST(RollingOpt, Examples) {
  const RollingOptConfig cfg;
  EXPECT_EQ(rolling_opt_action(spread_history(30, [](std::size_t) { return 10.0; }), cfg), 1.0);
  EXPECT_EQ(rolling_opt_action(spread_history(30, [](std::size_t) { return -10.0; }), cfg), -1.0);
  EXPECT_EQ(rolling_opt_action(spread_history(24, [](std::size_t) { return 0.0; }), cfg), 0.0);
  const auto alt = spread_history(48, [](std::size_t i) { return i % 2 ? 10.0 : -10.0; });
  EXPECT_EQ(rolling_opt_action(alt, cfg, 1.0), 1.0);
  EXPECT_EQ(rolling_opt_action(alt, cfg, -1.0), -1.0);
  EXPECT_THROW(rolling_opt_action(spread_history(23, [](std::size_t) { return 1.0; }), cfg), std::invalid_argument);
}

TEST(RollingOpt, HysteresisHoldsSmallSpreads) {
  RollingOptConfig cfg;
  cfg.hysteresis = 5.0;
  const auto h = spread_history(24, [](std::size_t) { return 3.0; });
  EXPECT_EQ(rolling_opt_action(h, cfg, -1.0), -1.0);
  EXPECT_EQ(rolling_opt_action(spread_history(24, [](std::size_t) { return 6.0; }), cfg, -1.0), 1.0);
  cfg.window = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(RollingOpt, ScaleEquivariant) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0, 8);
  std::vector<double> spreads(24);
  for (int trial = 0; trial < 200; ++trial) {
    for (auto& s : spreads) s = z(rng);
    const auto f = [&](std::size_t i) { return spreads[i]; };
    const double base = rolling_opt_action(spread_history(24, f), RollingOptConfig{}, 0.0);
    for (double c : {0.01, 3.0, 1000.0}) {
      EXPECT_EQ(rolling_opt_action(spread_history(24, f, c), RollingOptConfig{}, 0.0), base);
    }
  }
}

TEST(RollingOpt, PolicyUsesEnvHistory) {
  auto series = marsbid::testing::share(marsbid::testing::make_series(
      200, [](std::size_t) { return 60.0; }, [](std::size_t) { return 50.0; }));
  BiddingEnv env(series, GeneratorSpec{}, EnvConfig{});
  RollingOptPolicy p(RollingOptConfig{});
  const auto ledger = run_full_pass(env, p);
  for (const auto& r : ledger.rows) EXPECT_EQ(r.alpha, 1.0);
}

TEST(StaticBlend, Examples) {
  EXPECT_DOUBLE_EQ(static_blend_policy(std::vector<double>{-1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(static_blend_policy(std::vector<double>{0.2, 0.8}), 0.5);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> a(-1, 1);
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> x{a(rng), a(rng)};
    EXPECT_EQ(static_blend_policy(x), blend(std::vector<double>{0.5, 0.5}, x));
  }
}

TEST(Vanilla, ZeroBudgetAndDeterminism) {
  auto series = marsbid::testing::share(marsbid::testing::random_series(24 * 20, 5));
  const BiddingEnv env(series, GeneratorSpec{}, EnvConfig{});
  PpoConfig cfg;
  cfg.hidden = {8};
  cfg.total_steps = 0;
  const auto none = train_vanilla(env, cfg, ShapingParams{}, 3);
  EXPECT_EQ(none.policy, make_network(33, {8}, 1, true, role_seed(3, Role::vanilla)));
  cfg.total_steps = 2500;
  const auto a = train_cvar(env, cfg, ShapingParams{}, 3);
  const auto b = train_cvar(env, cfg, ShapingParams{}, 3);
  EXPECT_EQ(a.policy.parameter_hash(), b.policy.parameter_hash());
  EXPECT_NE(a.policy.parameter_hash(), train_vanilla(env, cfg, ShapingParams{}, 3).policy.parameter_hash());
}

TEST(Vanilla, LearnsDaUnderPositivePremium) {
  auto series = marsbid::testing::share(marsbid::testing::make_series(
      24 * 60, [](std::size_t i) { return 55.0 + 8.0 * std::sin(0.26 * static_cast<double>(i)); },
      [](std::size_t i) { return 40.0 + 8.0 * std::sin(0.26 * static_cast<double>(i)); }));
  const BiddingEnv env(series, GeneratorSpec{}, EnvConfig{});
  PpoConfig cfg;
  cfg.total_steps = 60000;
  cfg.hidden = {32, 32};
  cfg.learning_rate = 1e-3;
  const auto res = train_vanilla(env, cfg, ShapingParams{}, 4);
  BiddingEnv eval = env;
  NetworkPolicy pol(std::make_shared<const ActorCritic>(res.policy));
  double alpha = 0.0;
  const auto l = run_full_pass(eval, pol);
  for (const auto& r : l.rows) alpha += r.alpha;
  EXPECT_GT(alpha / static_cast<double>(l.rows.size()), 0.8);
}
