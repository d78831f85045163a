#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "marsbid/agents.hpp"
#include "marsbid/metrics.hpp"
#include "marsbid/ppo.hpp"

namespace marsbid {

struct Worker {
  Role role;
  ActorCritic network;
};

/// Frozen base agents in a fixed order. Shared read-only during Phase 2.
class AgentEnsemble {
 public:
  AgentEnsemble() = default;
  explicit AgentEnsemble(std::vector<Worker> workers) : workers_(std::move(workers)) {
    require(!workers_.empty(), "ensemble needs at least one worker");
    for (std::size_t i = 0; i < workers_.size(); ++i) {
      for (std::size_t j = i + 1; j < workers_.size(); ++j) {
        require(workers_[i].role != workers_[j].role, "duplicate worker role ", to_string(workers_[i].role));
      }
      require(workers_[i].network.action_dim() == 1 && workers_[i].network.squash(),
              "workers must be squashed single-action networks");
      require(workers_[i].network.input_dim() == workers_[0].network.input_dim(), "workers disagree on input dim");
    }
  }

  std::size_t size() const { return workers_.size(); }
  const std::vector<Worker>& workers() const { return workers_; }
  std::size_t input_dim() const { return workers_.front().network.input_dim(); }

  std::vector<std::string> role_names() const {
    std::vector<std::string> r;
    for (const auto& w : workers_) r.emplace_back(to_string(w.role));
    return r;
  }

  /// Index of the worker with the given role, or size() if absent.
  std::size_t index_of(Role role) const {
    for (std::size_t i = 0; i < workers_.size(); ++i) {
      if (workers_[i].role == role) return i;
    }
    return workers_.size();
  }

  /// Deterministic proposals tanh(mean_k(obs)).
  std::vector<double> proposals(std::span<const double> obs) const {
    std::vector<double> a;
    a.reserve(workers_.size());
    for (const auto& w : workers_) a.push_back(std::tanh(w.network.forward(obs).mean[0]));
    return a;
  }

  std::uint64_t parameter_hash() const {
    std::uint64_t h = 14695981039346656037ULL;
    for (const auto& w : workers_) h = fnv1a(hex64(w.network.parameter_hash()), h);
    return h;
  }

 private:
  std::vector<Worker> workers_;
};

inline constexpr double kSimplexTolerance = 1e-9;

/// Convex combination of worker actions, kept inside [min, max] of the
/// proposals.
inline double blend(std::span<const double> weights, std::span<const double> actions) {
  require(weights.size() == actions.size() && !weights.empty(), "blend: ", weights.size(), " weights for ",
          actions.size(), " actions");
  check_simplex(weights, kSimplexTolerance);
  double a = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    require(actions[k] >= -1.0 && actions[k] <= 1.0, "worker action outside [-1,1]: ", actions[k]);
    a += weights[k] * actions[k];
  }
  const auto [lo, hi] = std::minmax_element(actions.begin(), actions.end());
  return std::clamp(a, *lo, *hi);
}

inline std::vector<double> softmax(std::span<const double> logits) {
  require(!logits.empty(), "softmax of empty vector");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> w(logits.size());
  double s = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) s += (w[k] = std::exp(logits[k] - m));
  for (auto& v : w) v /= s;
  return w;
}

struct MetaSample {
  std::vector<double> logits;  // sampled pre-softmax Gaussian
  std::vector<double> weights;
  double log_prob = 0.0;
};

/// Inference: softmax of the mean logits.
inline std::vector<double> meta_weights(const ActorCritic& meta, std::span<const double> obs) {
  return softmax(meta.forward(obs).mean);
}

/// Training: Gaussian logits sampled then softmaxed; the log-probability is
/// that of the pre-softmax Gaussian.
template <typename Rng>
MetaSample sample_meta_weights(const ActorCritic& meta, std::span<const double> obs, Rng& rng) {
  const PolicyOutput out = meta.forward(obs);
  SampledAction s = sample_action(out.mean, out.log_std, false, rng);
  return MetaSample{s.pre_squash, softmax(s.pre_squash), s.log_prob};
}

/// Training environment for the meta-controller: the action is a vector of
/// K logits, the executed bid is the blend of frozen worker proposals and
/// the reward is the concave utility of the hourly profit.
class MetaEnv {
 public:
  MetaEnv(BiddingEnv env, std::shared_ptr<const AgentEnsemble> ensemble, ShapingParams shaping)
      : env_(std::move(env)), ensemble_(std::move(ensemble)), shaping_(shaping) {
    require(ensemble_ && ensemble_->input_dim() == env_.observation_dim(),
            "ensemble input dim does not match the environment");
  }

  std::vector<double> reset(std::mt19937_64& rng) {
    obs_ = env_.reset_random(rng).values();
    return obs_;
  }

  Transition step(std::span<const double> logits) {
    const std::vector<double> w = softmax(logits);
    const std::vector<double> a = ensemble_->proposals(obs_);
    const StepOutcome o = env_.step(blend(w, a));
    obs_ = o.observation_next.values();
    return Transition{reward_meta(o.reward_raw, shaping_), obs_, o.done};
  }

  std::size_t observation_dim() const { return env_.observation_dim(); }
  std::size_t action_dim() const { return ensemble_->size(); }

 private:
  BiddingEnv env_;
  std::shared_ptr<const AgentEnsemble> ensemble_;
  ShapingParams shaping_;
  std::vector<double> obs_;
};

static_assert(Environment<MetaEnv>);

/// Evaluation policy for the full hierarchy. Deterministic mode uses the
/// softmax of mean logits; otherwise weights are sampled from the meta policy.
class HierarchicalPolicy final : public BiddingPolicy {
 public:
  HierarchicalPolicy(std::shared_ptr<const AgentEnsemble> ensemble, std::shared_ptr<const ActorCritic> meta,
                     bool deterministic = true, std::uint64_t seed = 0)
      : ensemble_(std::move(ensemble)), meta_(std::move(meta)), deterministic_(deterministic), rng_(seed) {
    require(ensemble_ && meta_, "null ensemble or meta policy");
    require(meta_->action_dim() == ensemble_->size(), "meta policy emits ", meta_->action_dim(),
            " logits for ", ensemble_->size(), " workers");
  }

  Decision decide(const BiddingEnv&, std::span<const double> obs) override {
    Decision d;
    d.proposals = ensemble_->proposals(obs);
    d.weights = deterministic_ ? meta_weights(*meta_, obs) : sample_meta_weights(*meta_, obs, rng_).weights;
    d.action = blend(d.weights, d.proposals);
    return d;
  }

  std::vector<std::string> roles() const override { return ensemble_->role_names(); }

 private:
  std::shared_ptr<const AgentEnsemble> ensemble_;
  std::shared_ptr<const ActorCritic> meta_;
  bool deterministic_;
  std::mt19937_64 rng_;
};

/// Fixed weights over the ensemble (uniform weights give the static 50/50 baseline).
class FixedBlendPolicy final : public BiddingPolicy {
 public:
  FixedBlendPolicy(std::shared_ptr<const AgentEnsemble> ensemble, std::vector<double> weights)
      : ensemble_(std::move(ensemble)), weights_(std::move(weights)) {
    require(ensemble_ && weights_.size() == ensemble_->size(), "weight count must equal ensemble size");
    check_simplex(weights_, kSimplexTolerance);
  }

  Decision decide(const BiddingEnv&, std::span<const double> obs) override {
    Decision d;
    d.proposals = ensemble_->proposals(obs);
    d.weights = weights_;
    d.action = blend(d.weights, d.proposals);
    return d;
  }

  std::vector<std::string> roles() const override { return ensemble_->role_names(); }

 private:
  std::shared_ptr<const AgentEnsemble> ensemble_;
  std::vector<double> weights_;
};

inline EpisodeLedger run_hierarchical_episode(BiddingEnv& env, std::shared_ptr<const AgentEnsemble> ensemble,
                                              std::shared_ptr<const ActorCritic> meta, bool deterministic,
                                              std::size_t start, std::size_t len, const ShapingParams& shaping = {},
                                              std::uint64_t seed = 0) {
  HierarchicalPolicy policy(std::move(ensemble), std::move(meta), deterministic, seed);
  return run_episode(env, policy, start, len, shaping);
}

// ---------------------------------------------------------------------------
// Two-phase training

struct HierarchyTrainingConfig {
  PpoConfig base;  // total_steps is T_base per worker
  PpoConfig meta;  // total_steps is T_meta
  ShapingParams shaping;
  std::size_t workers = 1;
};

inline ActorCritic make_network(std::size_t obs_dim, const std::vector<std::size_t>& hidden, std::size_t action_dim,
                                bool squash, std::uint64_t seed) {
  std::vector<std::size_t> dims{obs_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  ActorCritic net(dims, action_dim, squash);
  std::mt19937_64 rng(seed);
  net.initialize(rng);
  return net;
}

/// Seed used for a given role so every phase gets an independent stream.
inline std::uint64_t role_seed(std::uint64_t seed, Role role) {
  return fnv1a(std::string(to_string(role)), seed * 0x9E3779B97F4A7C15ULL + 1);
}

/// Trains one single-action agent on its role reward.
inline TrainResult train_role_agent(const BiddingEnv& env, Role role, const PpoConfig& cfg, const ShapingParams& shaping,
                                    std::uint64_t seed, std::size_t workers = 1, const UpdateCallback& cb = {}) {
  const std::uint64_t s = role_seed(seed, role);
  ActorCritic net = make_network(env.observation_dim(), cfg.hidden, 1, true, s);
  return train_ppo(RoleRewardEnv(env, role, shaping), std::move(net), cfg, s, workers, cb);
}

/// Phase 1: each role trained on its own reward for T_base steps, then frozen.
inline std::vector<std::pair<Worker, TrainingLog>> train_university(const BiddingEnv& env, const std::vector<Role>& roles,
                                                                    const HierarchyTrainingConfig& cfg,
                                                                    std::uint64_t seed) {
  std::vector<std::pair<Worker, TrainingLog>> out;
  for (Role r : roles) {
    require(r == Role::safe || r == Role::spec || r == Role::neutral, "university phase trains safe/spec/neutral only");
    TrainResult res = train_role_agent(env, r, cfg.base, cfg.shaping, seed, cfg.workers);
    out.push_back({Worker{r, std::move(res.policy)}, std::move(res.log)});
  }
  return out;
}

/// Phase 2: PPO on the meta-controller with the workers frozen.
inline TrainResult train_meta(const BiddingEnv& env, std::shared_ptr<const AgentEnsemble> ensemble,
                              const HierarchyTrainingConfig& cfg, std::uint64_t seed, const UpdateCallback& cb = {}) {
  require(ensemble != nullptr, "null ensemble");
  const std::uint64_t s = role_seed(seed, Role::meta) ^ ensemble->size();
  ActorCritic meta = make_network(env.observation_dim(), cfg.meta.hidden, ensemble->size(), false, s);
  return train_ppo(MetaEnv(env, ensemble, cfg.shaping), std::move(meta), cfg.meta, s, cfg.workers, cb);
}

}  // namespace marsbid
