#include <gtest/gtest.h>

#include <random>

#include "marsbid/metrics.hpp"

using namespace marsbid;

TEST(Sharpe, Examples) {
  EXPECT_DOUBLE_EQ(*sharpe(std::vector<double>{1, -1, 1, -1}), 0.0);
  EXPECT_NEAR(*sharpe(std::vector<double>{2, 4}), 3.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(*sharpe(std::vector<double>{2, 4}), 2.1213, 1e-4);
  EXPECT_FALSE(sharpe(std::vector<double>{5, 5, 5}).has_value());
  EXPECT_THROW(sharpe(std::vector<double>{1}), std::invalid_argument);
}

TEST(Sortino, Examples) {
  EXPECT_FALSE(sortino(std::vector<double>{1, 2, 3}).has_value());
  EXPECT_NEAR(*sortino(std::vector<double>{3, -4}), -0.5 / std::sqrt(8.0), 1e-15);
  EXPECT_NEAR(*sortino(std::vector<double>{3, -4}), -0.1768, 1e-4);
  EXPECT_FALSE(sortino(std::vector<double>{0, 0}).has_value());
}

TEST(Drawdown, Examples) {
  auto d = max_drawdown(std::vector<double>{1, 2, 3, 4});
  EXPECT_EQ(d.abs, 0.0);
  EXPECT_EQ(*d.rel, 0.0);
  d = max_drawdown(std::vector<double>{100, 50, 75});
  EXPECT_EQ(d.abs, 50.0);
  EXPECT_DOUBLE_EQ(*d.rel, 0.5);
  d = max_drawdown(std::vector<double>{-10, -20});
  EXPECT_EQ(d.abs, 10.0);
  EXPECT_FALSE(d.rel.has_value());
  // rel belongs to the peak before the largest absolute trough.
  d = max_drawdown(std::vector<double>{10, 5, 200, 150});
  EXPECT_EQ(d.abs, 50.0);
  EXPECT_DOUBLE_EQ(*d.rel, 0.25);
}

TEST(Entropy, Examples) {
  const std::vector<std::vector<double>> half(10, {0.5, 0.5}), pure(10, {1.0, 0.0});
  EXPECT_NEAR(allocation_entropy(half), std::log(2.0), 1e-15);
  EXPECT_EQ(allocation_entropy(pure), 0.0);
  auto mix = pure;
  mix.insert(mix.end(), half.begin(), half.end());
  EXPECT_NEAR(allocation_entropy(mix), std::log(2.0) / 2, 1e-15);
  EXPECT_NEAR(allocation_entropy(mix), 0.3466, 1e-4);
  EXPECT_THROW(allocation_entropy({{0.7, 0.7}}), std::invalid_argument);
}

TEST(Alignment, Examples) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0, 1);
  std::vector<double> v(500), w(500), anti(500);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = std::abs(z(rng)) * 10;
    w[i] = 0.01 * v[i] + 0.2;
    anti[i] = -v[i] + 3.0;
  }
  EXPECT_NEAR(*regime_alignment(w, v), 1.0, 1e-12);
  EXPECT_NEAR(*regime_alignment(anti, v), -1.0, 1e-12);
  std::vector<double> a(10000), b(10000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = z(rng);
    b[i] = z(rng);
  }
  EXPECT_LT(std::abs(*regime_alignment(a, b)), 0.05);
  EXPECT_FALSE(regime_alignment(std::vector<double>(5, 0.5), std::vector<double>{1, 2, 3, 4, 5}).has_value());
}

TEST(Scale, Properties) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z(0.3, 1);
  std::vector<double> r(300);
  for (auto& x : r) x = z(rng);
  std::vector<double> s(r);
  for (auto& x : s) x *= 37.5;
  EXPECT_NEAR(*sharpe(s), *sharpe(r), 1e-12);
  EXPECT_NEAR(*sortino(s), *sortino(r), 1e-12);
  EXPECT_NEAR(max_drawdown(cumulative(s)).abs, 37.5 * max_drawdown(cumulative(r)).abs, 1e-9);
  std::vector<double> vol(300), w(300), w2(300);
  for (std::size_t i = 0; i < 300; ++i) {
    vol[i] = std::abs(z(rng));
    w[i] = 0.5 + 0.1 * z(rng);
    w2[i] = 3.0 * w[i] - 1.0;
  }
  EXPECT_NEAR(*regime_alignment(w2, vol), *regime_alignment(w, vol), 1e-12);
}

TEST(Rolling, ConstantAndDegenerateWindow) {
  const std::vector<double> c(50, 4.0);
  for (const auto& p : rolling_metrics(c, 10)) {
    EXPECT_DOUBLE_EQ(p.mean, 4.0);
    EXPECT_FALSE(p.sharpe.has_value());
  }
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0, 1);
  std::vector<double> r(100);
  for (auto& x : r) x = z(rng);
  const auto one = rolling_metrics(r, 100);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].index, 99u);
  EXPECT_NEAR(*one[0].sharpe, *sharpe(r), 1e-15);
  EXPECT_THROW(rolling_metrics(r, 101), std::invalid_argument);
}
