#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "marsbid/market_data.hpp"

namespace marsbid::testing {

inline HourlyMarketRecord flat_record(UtcHour t, double da, double rt, double gas = 4.0) {
  HourlyMarketRecord r;
  r.timestamp = t;
  r.lmp_da = da;
  r.lmp_rt = rt;
  r.load_actual = 1000.0;
  r.load_forecast = 1000.0;
  r.temperature = 10.0;
  r.wind_speed = 3.0;
  r.gas_price = gas;
  return r;
}

/// n hours from 2020-01-06 (a Monday) with prices from the callables.
template <typename Da, typename Rt>
MarketSeries make_series(std::size_t n, Da da, Rt rt, double gas = 4.0) {
  MarketSeries s;
  const UtcHour t0 = make_utc_hour(2020, 1, 6);
  for (std::size_t i = 0; i < n; ++i) s.records.push_back(flat_record(t0 + static_cast<std::int64_t>(i), da(i), rt(i), gas));
  s.fill_mask.assign(n, FillFlags{});
  return s;
}

inline std::shared_ptr<const MarketSeries> share(MarketSeries s) {
  return std::make_shared<const MarketSeries>(std::move(s));
}

/// Random series with every field populated.
inline MarketSeries random_series(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  return make_series(
      n, [&](std::size_t) { return 40.0 + 10.0 * z(rng); }, [&](std::size_t) { return 40.0 + 15.0 * z(rng); });
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace marsbid::testing
