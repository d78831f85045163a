#pragma once

#include <deque>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "marsbid/bidding_env.hpp"
#include "marsbid/ledger.hpp"
#include "marsbid/policy_net.hpp"
#include "marsbid/ppo.hpp"
#include "marsbid/reward_shaping.hpp"

namespace marsbid {

enum class Role { safe, spec, neutral, meta, vanilla, cvar };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::safe: return "safe";
    case Role::spec: return "spec";
    case Role::neutral: return "neutral";
    case Role::meta: return "meta";
    case Role::vanilla: return "vanilla";
    case Role::cvar: return "cvar";
  }
  return "?";
}

inline Role parse_role(std::string_view s) {
  for (Role r : {Role::safe, Role::spec, Role::neutral, Role::meta, Role::vanilla, Role::cvar}) {
    if (to_string(r) == s) return r;
  }
  throw ConfigError("unknown role '" + std::string(s) + "'");
}

/// Wraps BiddingEnv as a single-action training environment whose reward is
/// the role-specific transform of the hourly profit. Every reward except the
/// meta utility is divided by s_linear for conditioning; a positive rescale
/// leaves each objective's maximizer unchanged.
class RoleRewardEnv {
 public:
  RoleRewardEnv(BiddingEnv env, Role role, ShapingParams shaping)
      : env_(std::move(env)), role_(role), shaping_(shaping) {
    require(role_ != Role::meta, "meta reward needs the hierarchical environment");
  }

  std::vector<double> reset(std::mt19937_64& rng) { return env_.reset_random(rng).values(); }

  Transition step(std::span<const double> action) {
    const StepOutcome o = env_.step(action[0]);
    Transition t;
    t.reward = shaped_reward(o) / shaping_.s_linear;
    t.observation = o.observation_next.values();
    t.done = o.done;
    return t;
  }

  std::size_t observation_dim() const { return env_.observation_dim(); }
  std::size_t action_dim() const { return 1; }
  const BiddingEnv& env() const { return env_; }

 private:
  double shaped_reward(const StepOutcome& o) {
    const double pi = o.reward_raw;
    switch (role_) {
      case Role::safe: return reward_safe(pi, o.alpha, shaping_);
      case Role::spec: return reward_spec(pi, o.alpha, shaping_);
      case Role::neutral: return reward_neutral(pi, o.alpha, shaping_);
      case Role::vanilla: return pi;
      case Role::cvar: {
        const std::vector<double> window(history_.begin(), history_.end());
        const double r = reward_cvar_shaped(pi, window, shaping_);
        history_.push_back(pi);
        if (history_.size() > shaping_.cvar_window) history_.pop_front();
        return r;
      }
      case Role::meta: break;
    }
    throw std::logic_error("unreachable");
  }

  BiddingEnv env_;
  Role role_;
  ShapingParams shaping_;
  std::deque<double> history_;
};

static_assert(Environment<RoleRewardEnv>);

// ---------------------------------------------------------------------------
// Evaluation-time policies

struct Decision {
  double action = 0.0;
  std::vector<double> weights;
  std::vector<double> proposals;
};

class BiddingPolicy {
 public:
  virtual ~BiddingPolicy() = default;
  virtual Decision decide(const BiddingEnv& env, std::span<const double> observation) = 0;
  /// Called at the start of each episode.
  virtual void reset() {}
  virtual std::vector<std::string> roles() const { return {}; }
};

/// Deterministic single network: a = tanh(mean).
class NetworkPolicy final : public BiddingPolicy {
 public:
  explicit NetworkPolicy(std::shared_ptr<const ActorCritic> net) : net_(std::move(net)) {
    require(net_ && net_->action_dim() == 1 && net_->squash(), "NetworkPolicy needs a squashed 1-action network");
  }
  Decision decide(const BiddingEnv&, std::span<const double> observation) override {
    return Decision{std::tanh(net_->forward(observation).mean[0]), {}, {}};
  }

 private:
  std::shared_ptr<const ActorCritic> net_;
};

/// Runs one episode from `start` for `len` hours and records every step.
inline EpisodeLedger run_episode(BiddingEnv& env, BiddingPolicy& policy, std::size_t start, std::size_t len,
                                 const ShapingParams& shaping = {}) {
  EpisodeLedger ledger;
  ledger.roles = policy.roles();
  policy.reset();
  Observation obs = env.reset(start, len);
  ledger.rows.reserve(len);
  for (;;) {
    const std::vector<double> x = obs.values();
    const Decision d = policy.decide(env, x);
    LedgerRow row;
    const auto& rec = env.current_record();
    row.timestamp = rec.timestamp;
    row.lmp_da = rec.lmp_da;
    row.lmp_rt = rec.lmp_rt;
    row.volatility = env.current_volatility();
    row.action = d.action;
    row.weights = d.weights;
    row.proposals = d.proposals;
    const StepOutcome o = env.step(d.action);
    row.alpha = o.alpha;
    row.profit = o.reward_raw;
    row.components = o.components;
    row.reward_meta = reward_meta(o.reward_raw, shaping);
    ledger.rows.push_back(std::move(row));
    if (o.done) break;
    obs = o.observation_next;
  }
  return ledger;
}

inline EpisodeLedger run_full_pass(BiddingEnv& env, BiddingPolicy& policy, const ShapingParams& shaping = {}) {
  return run_episode(env, policy, kHistoryHours, env.series().size() - kHistoryHours, shaping);
}

}  // namespace marsbid
