#pragma once

#include <memory>
#include <span>
#include <vector>

#include "marsbid/agents.hpp"
#include "marsbid/mars.hpp"

namespace marsbid {

struct RollingOptConfig {
  std::size_t window = 24;
  double hysteresis = 0.0;  // $/MWh

  void validate() const {
    require<ConfigError>(window >= 1, "rolling_opt.window must be >= 1");
    require<ConfigError>(hysteresis >= 0.0, "rolling_opt.hysteresis must be >= 0");
  }
};

/// Bang-bang rule on the moving-average DA-RT spread forecast: full DA when
/// the mean spread over the last `window` hours exceeds the hysteresis, full
/// RT below minus the hysteresis, otherwise keep the previous action.
inline double rolling_opt_action(std::span<const HourlyMarketRecord> history, const RollingOptConfig& cfg,
                                 double previous_action = 0.0) {
  require(history.size() >= cfg.window, "rolling_opt needs ", cfg.window, " hours of history, got ", history.size());
  double s = 0.0;
  for (std::size_t i = history.size() - cfg.window; i < history.size(); ++i) s += history[i].lmp_da - history[i].lmp_rt;
  s /= static_cast<double>(cfg.window);
  if (s > cfg.hysteresis) return 1.0;
  if (s < -cfg.hysteresis) return -1.0;
  return previous_action;
}

class RollingOptPolicy final : public BiddingPolicy {
 public:
  explicit RollingOptPolicy(RollingOptConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  Decision decide(const BiddingEnv& env, std::span<const double>) override {
    previous_ = rolling_opt_action(env.history(), cfg_, previous_);
    return Decision{previous_, {}, {}};
  }
  void reset() override { previous_ = 0.0; }

 private:
  RollingOptConfig cfg_;
  double previous_ = 0.0;
};

/// Equal-weight blend of the worker proposals.
inline double static_blend_policy(std::span<const double> worker_actions) {
  require(!worker_actions.empty(), "static blend needs at least one proposal");
  const std::vector<double> w(worker_actions.size(), 1.0 / static_cast<double>(worker_actions.size()));
  return blend(w, worker_actions);
}

inline std::unique_ptr<BiddingPolicy> make_static_blend(std::shared_ptr<const AgentEnsemble> ensemble) {
  const std::vector<double> w(ensemble->size(), 1.0 / static_cast<double>(ensemble->size()));
  return std::make_unique<FixedBlendPolicy>(std::move(ensemble), w);
}

/// Monolithic PPO agent on raw profit / s_linear.
inline TrainResult train_vanilla(const BiddingEnv& env, const PpoConfig& cfg, const ShapingParams& shaping,
                                 std::uint64_t seed, std::size_t workers = 1, const UpdateCallback& cb = {}) {
  return train_role_agent(env, Role::vanilla, cfg, shaping, seed, workers, cb);
}

/// PPO on rolling-quantile tail-penalty shaped profit.
inline TrainResult train_cvar(const BiddingEnv& env, const PpoConfig& cfg, const ShapingParams& shaping,
                              std::uint64_t seed, std::size_t workers = 1, const UpdateCallback& cb = {}) {
  return train_role_agent(env, Role::cvar, cfg, shaping, seed, workers, cb);
}

}  // namespace marsbid
