#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "marsbid/error.hpp"

namespace marsbid {

// Undefined metric values are std::nullopt and serialize as NA / null.
using MaybeDouble = std::optional<double>;

inline constexpr std::string_view kRatioConvention = "per-step profits, zero risk-free rate, no annualization";

namespace detail {
inline bool all_equal(std::span<const double> v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}
inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}
}  // namespace detail

/// mean / sample std. Undefined for zero variance.
inline MaybeDouble sharpe(std::span<const double> returns) {
  require(returns.size() >= 2, "sharpe needs at least 2 returns");
  if (detail::all_equal(returns)) return std::nullopt;
  const double m = detail::mean(returns);
  double ss = 0.0;
  for (double r : returns) ss += (r - m) * (r - m);
  const double sd = std::sqrt(ss / static_cast<double>(returns.size() - 1));
  if (sd == 0.0) return std::nullopt;
  return m / sd;
}

/// mean / sqrt(mean(min(r,0)^2)). Undefined without negative returns.
inline MaybeDouble sortino(std::span<const double> returns) {
  require(returns.size() >= 2, "sortino needs at least 2 returns");
  double ss = 0.0;
  for (double r : returns) {
    const double d = std::min(r, 0.0);
    ss += d * d;
  }
  if (ss == 0.0) return std::nullopt;
  return detail::mean(returns) / std::sqrt(ss / static_cast<double>(returns.size()));
}

struct Drawdown {
  double abs = 0.0;
  MaybeDouble rel;
};

/// Largest peak-to-trough decline of an equity curve. rel is relative to the
/// peak preceding that trough and undefined when that peak is <= 0.
inline Drawdown max_drawdown(std::span<const double> equity) {
  require(!equity.empty(), "max_drawdown needs at least one point");
  double peak = equity[0];
  double best = 0.0;
  double best_peak = equity[0];
  for (double e : equity) {
    peak = std::max(peak, e);
    if (peak - e > best) {
      best = peak - e;
      best_peak = peak;
    }
  }
  Drawdown d;
  d.abs = best;
  if (best == 0.0) {
    d.rel = 0.0;
  } else if (best_peak > 0.0) {
    d.rel = best / best_peak;
  }
  return d;
}

inline std::vector<double> cumulative(std::span<const double> returns) {
  std::vector<double> eq(returns.size());
  double s = 0.0;
  for (std::size_t i = 0; i < returns.size(); ++i) eq[i] = (s += returns[i]);
  return eq;
}

inline void check_simplex(std::span<const double> w, double tol = 1e-9) {
  double s = 0.0;
  for (double x : w) {
    require(std::isfinite(x) && x >= -tol, "weight vector leaves the simplex (negative or non-finite entry)");
    s += x;
  }
  require(std::abs(s - 1.0) <= tol, "weight vector leaves the simplex (sum ", s, ")");
}

inline double shannon_entropy(std::span<const double> w) {
  double h = 0.0;
  for (double x : w) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

/// Mean per-step Shannon entropy of the weight vectors, in nats.
inline double allocation_entropy(const std::vector<std::vector<double>>& weights) {
  require(!weights.empty(), "allocation_entropy needs at least one weight vector");
  double s = 0.0;
  for (const auto& w : weights) {
    check_simplex(w);
    s += shannon_entropy(w);
  }
  return s / static_cast<double>(weights.size());
}

/// Pearson correlation; undefined when either series is constant.
inline MaybeDouble pearson(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "correlation needs equal-length series");
  require(x.size() >= 2, "correlation needs at least 2 points");
  if (detail::all_equal(x) || detail::all_equal(y)) return std::nullopt;
  const double mx = detail::mean(x), my = detail::mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Correlation of the speculator weight with market volatility.
inline MaybeDouble regime_alignment(std::span<const double> spec_weights, std::span<const double> volatility) {
  return pearson(spec_weights, volatility);
}

struct RollingPoint {
  std::size_t index = 0;  // last index of the window
  double mean = 0.0;
  MaybeDouble sharpe;
};

/// Trailing-window mean and Sharpe at every index >= window-1.
inline std::vector<RollingPoint> rolling_metrics(std::span<const double> returns, std::size_t window = 720) {
  require(window >= 1, "rolling window must be >= 1");
  require(returns.size() >= window, "series of length ", returns.size(), " is shorter than window ", window);
  std::vector<RollingPoint> out;
  out.reserve(returns.size() - window + 1);
  for (std::size_t end = window; end <= returns.size(); ++end) {
    const auto w = returns.subspan(end - window, window);
    RollingPoint p;
    p.index = end - 1;
    p.mean = detail::mean(w);
    if (window >= 2) p.sharpe = sharpe(w);
    out.push_back(p);
  }
  return out;
}

}  // namespace marsbid
