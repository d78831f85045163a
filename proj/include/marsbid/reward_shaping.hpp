#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "marsbid/error.hpp"

namespace marsbid {

struct ShapingParams {
  double lambda_role = 0.5;
  double lambda_risk = 5.0;
  double s_linear = 1000.0;
  double s_var = 100.0;
  double neutral_band = 0.2;
  double cvar_alpha = 0.05;
  std::size_t cvar_window = 500;

  void validate() const {
    require<ConfigError>(lambda_role >= 0.0, "shaping.lambda_role must be >= 0");
    require<ConfigError>(s_linear > 0.0 && s_var > 0.0, "shaping.s_linear and shaping.s_var must be > 0");
    require<ConfigError>(cvar_alpha > 0.0 && cvar_alpha < 1.0, "shaping.cvar_alpha must lie in (0,1)");
    require<ConfigError>(neutral_band >= 0.0 && neutral_band < 0.5, "shaping.neutral_band must lie in [0,0.5)");
    require<ConfigError>(cvar_window >= 20, "shaping.cvar_window must be >= 20");
  }
};

namespace detail {
inline void check_finite(double pi, double alpha) {
  require(std::isfinite(pi) && std::isfinite(alpha), "reward inputs must be finite");
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0,1], got ", alpha);
}
}  // namespace detail

/// DA specialist: profit share scaled by alpha, RT usage penalized.
inline double reward_safe(double pi, double alpha, const ShapingParams& p) {
  detail::check_finite(pi, alpha);
  return pi * alpha - std::abs(pi) * (1.0 - alpha) * p.lambda_role;
}

/// RT specialist: mirror image of reward_safe.
inline double reward_spec(double pi, double alpha, const ShapingParams& p) {
  detail::check_finite(pi, alpha);
  return pi * (1.0 - alpha) - std::abs(pi) * alpha * p.lambda_role;
}

/// Concave utility used by the meta-controller. Maximized at
/// pi = s_var^2 / (lambda_risk * s_linear).
inline double reward_meta(double pi, const ShapingParams& p) {
  require(std::isfinite(pi), "reward input must be finite");
  const double q = pi / p.s_var;
  return pi / p.s_linear - 0.5 * p.lambda_risk * q * q;
}

/// Balanced agent: free inside |alpha - 0.5| <= band, linear penalty beyond,
/// reaching lambda_role * |pi| at alpha in {0, 1}.
inline double reward_neutral(double pi, double alpha, const ShapingParams& p) {
  detail::check_finite(pi, alpha);
  require(p.neutral_band >= 0.0 && p.neutral_band < 0.5, "neutral_band must lie in [0, 0.5)");
  const double excess = std::max(0.0, std::abs(alpha - 0.5) - p.neutral_band);
  return pi - std::abs(pi) * p.lambda_role * excess / (0.5 - p.neutral_band);
}

/// Empirical alpha-quantile: the ceil(alpha*n)-th smallest value.
inline double empirical_quantile(std::span<const double> values, double alpha) {
  require(!values.empty(), "quantile of empty sample");
  std::vector<double> v(values.begin(), values.end());
  const auto n = v.size();
  auto k = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n) - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

inline constexpr std::size_t kCvarWarmup = 20;

/// Tail-penalty shaping: outcomes below the rolling alpha-quantile of recent
/// profits are penalized by lambda_risk per dollar of shortfall. Passes pi
/// through until 20 outcomes have been observed.
inline double reward_cvar_shaped(double pi, std::span<const double> history, const ShapingParams& p) {
  if (history.size() < kCvarWarmup) return pi;
  const double q = empirical_quantile(history, p.cvar_alpha);
  return pi - p.lambda_risk * std::max(0.0, q - pi);
}

}  // namespace marsbid
