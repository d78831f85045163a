#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "marsbid/error.hpp"
#include "marsbid/market_data.hpp"

namespace marsbid {

inline constexpr std::size_t kHistoryHours = 24;

enum class DispatchMode { always_on, economic };

inline DispatchMode parse_dispatch_mode(std::string_view s) {
  if (s == "always_on") return DispatchMode::always_on;
  if (s == "economic") return DispatchMode::economic;
  throw ConfigError("unknown dispatch_mode '" + std::string(s) + "' (expected always_on|economic)");
}

inline std::string_view to_string(DispatchMode m) { return m == DispatchMode::always_on ? "always_on" : "economic"; }

struct GeneratorSpec {
  double p_max = 100.0;          // MW
  double p_min = 40.0;           // MW
  double ramp_rate = 50.0;       // MW/h
  int min_up = 4;                // h
  int min_down = 4;              // h
  double startup_cost = 500.0;   // $
  double heat_rate = 7.5;        // MMBtu/MWh
  double ramp_penalty = 10.0;    // $ per MW clamped
  double mutd_penalty = 1000.0;  // $ per blocked transition

  double marginal_cost(double gas_price) const { return heat_rate * gas_price; }

  void validate() const {
    require<ConfigError>(p_min >= 0.0 && p_min <= p_max, "generator: need 0 <= p_min <= p_max");
    require<ConfigError>(ramp_rate > 0.0, "generator: ramp_rate must be > 0");
    require<ConfigError>(min_up >= 0 && min_down >= 0, "generator: min_up/min_down must be >= 0");
    require<ConfigError>(startup_cost >= 0.0 && heat_rate >= 0.0 && ramp_penalty >= 0.0 && mutd_penalty >= 0.0,
                         "generator: costs must be >= 0");
  }
};

struct UnitState {
  bool committed = true;
  int hours_in_state = 0;
  double prev_output = 0.0;

  friend bool operator==(const UnitState&, const UnitState&) = default;
};

struct EnvConfig {
  std::size_t episode_len = 168;
  double price_scale = 100.0;  // $/MWh
  double load_scale = 0.0;     // MW; <= 0 means "max load_forecast of the series"
  DispatchMode dispatch_mode = DispatchMode::always_on;
  bool weather_features = false;

  void validate() const {
    require<ConfigError>(episode_len >= 1, "env.episode_len must be >= 1");
    require<ConfigError>(price_scale > 0.0, "env.price_scale must be > 0");
  }
};

/// MDP state handed to every policy. Scaled features only; see values() for
/// the flat layout.
struct Observation {
  std::array<double, kHistoryHours> da_price_history{};
  double volatility_24h = 0.0;
  double load_forecast = 0.0;
  double committed = 0.0;
  double hours_in_state = 0.0;
  double prev_output = 0.0;
  double hour_sin = 0.0, hour_cos = 0.0, dow_sin = 0.0, dow_cos = 0.0;
  bool has_weather = false;
  double temperature = 0.0, wind_speed = 0.0;

  static constexpr std::size_t kBaseDim = kHistoryHours + 1 + 1 + 3 + 4;
  static std::size_t dim(bool weather) { return kBaseDim + (weather ? 2 : 0); }

  std::vector<double> values() const {
    std::vector<double> v(da_price_history.begin(), da_price_history.end());
    v.insert(v.end(), {volatility_24h, load_forecast, committed, hours_in_state, prev_output, hour_sin, hour_cos,
                       dow_sin, dow_cos});
    if (has_weather) v.insert(v.end(), {temperature, wind_speed});
    return v;
  }
};

struct ProfitComponents {
  double revenue_da = 0.0;
  double revenue_rt = 0.0;
  double cost_marginal = 0.0;
  double cost_startup = 0.0;
  double penalty = 0.0;

  double total() const { return revenue_da + revenue_rt - cost_marginal - cost_startup - penalty; }
};

struct StepOutcome {
  double reward_raw = 0.0;
  ProfitComponents components;
  double alpha = 0.0;
  double q_da = 0.0;
  double q_rt = 0.0;
  double output = 0.0;
  UnitState unit_after;
  Observation observation_next;
  bool done = false;
};

inline double map_action(double a_raw) {
  require(std::isfinite(a_raw), "action must be finite");
  return (std::clamp(a_raw, -1.0, 1.0) + 1.0) / 2.0;
}

/// Population standard deviation of a 24-hour window.
inline double rolling_volatility(std::span<const double> prices) {
  require(prices.size() == kHistoryHours, "volatility window must hold 24 values, got ", prices.size());
  double mean = 0.0;
  for (double p : prices) {
    require(std::isfinite(p), "non-finite price in volatility window");
    mean += p;
  }
  mean /= static_cast<double>(prices.size());
  double ss = 0.0;
  for (double p : prices) ss += (p - mean) * (p - mean);
  return std::sqrt(ss / static_cast<double>(prices.size()));
}

/// Clears one hour. In always_on mode the unit runs at p_max and only the
/// startup indicator can add cost beyond fuel. In economic mode the unit
/// self-schedules offline when fuel exceeds both prices, subject to
/// min-up/down (blocked and fined) and ramp limits (clamped and fined); the
/// DA position is financially binding and any shortfall is bought back at RT.
inline StepOutcome settle(double alpha, const HourlyMarketRecord& record, const GeneratorSpec& spec,
                          const UnitState& unit, DispatchMode mode = DispatchMode::always_on) {
  require(std::isfinite(alpha) && alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0,1], got ", alpha);
  const double mc = spec.marginal_cost(record.gas_price);

  StepOutcome out;
  out.alpha = alpha;
  ProfitComponents& c = out.components;
  bool online = true;
  double output = spec.p_max;

  if (mode == DispatchMode::economic) {
    const bool wants_online = !(mc > record.lmp_da && mc > record.lmp_rt);
    online = wants_online;
    if (wants_online != unit.committed) {
      const int required = unit.committed ? spec.min_up : spec.min_down;
      if (unit.hours_in_state < required) {
        online = unit.committed;
        c.penalty += spec.mutd_penalty;
      }
    }
    if (online) {
      const double lo = std::max(spec.p_min, unit.prev_output - spec.ramp_rate);
      const double hi = std::min(spec.p_max, unit.prev_output + spec.ramp_rate);
      output = std::clamp(spec.p_max, std::min(lo, hi), hi);
      c.penalty += spec.ramp_penalty * (spec.p_max - output);
    } else {
      output = 0.0;
    }
  }

  out.q_da = alpha * spec.p_max;
  out.q_rt = output - out.q_da;
  out.output = output;
  c.revenue_da = record.lmp_da * out.q_da;
  c.revenue_rt = record.lmp_rt * out.q_rt;
  c.cost_marginal = mc * output;
  c.cost_startup = (online && !unit.committed) ? spec.startup_cost : 0.0;
  out.reward_raw = c.total();

  out.unit_after.committed = online;
  out.unit_after.hours_in_state = (online == unit.committed) ? unit.hours_in_state + 1 : 1;
  out.unit_after.prev_output = output;
  return out;
}

/// Two-settlement bidding environment over an immutable market series.
class BiddingEnv {
 public:
  BiddingEnv(std::shared_ptr<const MarketSeries> series, GeneratorSpec spec, EnvConfig cfg)
      : series_(std::move(series)), spec_(spec), cfg_(cfg) {
    require(series_ != nullptr, "null market series");
    spec_.validate();
    cfg_.validate();
    require<DataError>(series_->size() > kHistoryHours, "market series too short for 24h history");
    if (cfg_.load_scale <= 0.0) cfg_.load_scale = std::max(1.0, series_->max_of(Field::load_forecast));
  }

  Observation reset(std::size_t start, std::size_t episode_len) {
    require(start >= kHistoryHours, "insufficient history: start index ", start, " < 24");
    require(episode_len >= 1, "episode_len must be >= 1");
    require(start + episode_len <= series_->size(), "episode overruns series: start ", start, " + length ",
            episode_len, " > ", series_->size());
    index_ = start;
    steps_left_ = episode_len;
    unit_ = UnitState{true, spec_.min_up, spec_.p_max};
    return observe();
  }

  Observation reset(std::size_t start) { return reset(start, cfg_.episode_len); }

  /// Uniformly random valid start for a configured-length episode.
  template <typename Rng>
  Observation reset_random(Rng& rng) {
    const std::size_t len = std::min(cfg_.episode_len, series_->size() - kHistoryHours);
    std::uniform_int_distribution<std::size_t> pick(kHistoryHours, series_->size() - len);
    return reset(pick(rng), len);
  }

  /// One contiguous pass over everything after the first 24 hours.
  Observation reset_full_pass() { return reset(kHistoryHours, series_->size() - kHistoryHours); }

  StepOutcome step(double a_raw) {
    require(steps_left_ > 0, "step() called on a finished episode");
    StepOutcome out = settle(map_action(a_raw), (*series_)[index_], spec_, unit_, cfg_.dispatch_mode);
    unit_ = out.unit_after;
    ++index_;
    --steps_left_;
    out.done = steps_left_ == 0;
    out.observation_next = observe();
    return out;
  }

  Observation observe() const {
    Observation o;
    const auto& recs = series_->records;
    std::array<double, kHistoryHours> raw{};
    for (std::size_t k = 0; k < kHistoryHours; ++k) {
      raw[k] = recs[index_ - kHistoryHours + k].lmp_da;
      o.da_price_history[k] = raw[k] / cfg_.price_scale;
    }
    o.volatility_24h = rolling_volatility(raw) / cfg_.price_scale;
    const auto& rec = recs[std::min(index_, recs.size() - 1)];
    o.load_forecast = rec.load_forecast / cfg_.load_scale;
    o.committed = unit_.committed ? 1.0 : 0.0;
    o.hours_in_state = std::clamp(static_cast<double>(unit_.hours_in_state) / 24.0, 0.0, 1.0);
    o.prev_output = unit_.prev_output / spec_.p_max;
    const UtcHour t = index_ < recs.size() ? recs[index_].timestamp : recs.back().timestamp + 1;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    o.hour_sin = std::sin(two_pi * hour_of_day(t) / 24.0);
    o.hour_cos = std::cos(two_pi * hour_of_day(t) / 24.0);
    o.dow_sin = std::sin(two_pi * day_of_week(t) / 7.0);
    o.dow_cos = std::cos(two_pi * day_of_week(t) / 7.0);
    if (cfg_.weather_features) {
      o.has_weather = true;
      o.temperature = rec.temperature / 40.0;
      o.wind_speed = rec.wind_speed / 20.0;
    }
    return o;
  }

  /// Unscaled 24h DA volatility at the current index ($/MWh).
  double current_volatility() const {
    std::array<double, kHistoryHours> raw{};
    for (std::size_t k = 0; k < kHistoryHours; ++k) raw[k] = series_->records[index_ - kHistoryHours + k].lmp_da;
    return rolling_volatility(raw);
  }

  std::size_t observation_dim() const { return Observation::dim(cfg_.weather_features); }
  std::size_t index() const { return index_; }
  bool done() const { return steps_left_ == 0; }
  const UnitState& unit() const { return unit_; }
  const GeneratorSpec& generator() const { return spec_; }
  const EnvConfig& config() const { return cfg_; }
  const MarketSeries& series() const { return *series_; }
  const std::shared_ptr<const MarketSeries>& series_ptr() const { return series_; }
  const HourlyMarketRecord& current_record() const { return series_->records.at(index_); }

  /// Records strictly before the current index.
  std::span<const HourlyMarketRecord> history() const { return {series_->records.data(), index_}; }

 private:
  std::shared_ptr<const MarketSeries> series_;
  GeneratorSpec spec_;
  EnvConfig cfg_;
  std::size_t index_ = kHistoryHours;
  std::size_t steps_left_ = 0;
  UnitState unit_{true, 0, 0.0};
};

}  // namespace marsbid
