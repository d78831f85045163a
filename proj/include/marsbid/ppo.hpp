#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "marsbid/error.hpp"
#include "marsbid/policy_net.hpp"
#include "marsbid/text.hpp"

namespace marsbid {

struct PpoConfig {
  double clip_epsilon = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  std::size_t epochs_per_update = 10;
  std::size_t minibatch_size = 64;
  double learning_rate = 3e-4;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.5;
  std::size_t total_steps = 200000;
  std::size_t steps_per_update = 2048;
  double target_kl = 0.02;
  bool normalize_reward = true;
  std::vector<std::size_t> hidden = {64, 64};

  void validate() const {
    require<ConfigError>(clip_epsilon > 0.0 && clip_epsilon < 1.0, "ppo.clip_epsilon must lie in (0,1)");
    require<ConfigError>(gamma >= 0.0 && gamma <= 1.0, "ppo.gamma must lie in [0,1]");
    require<ConfigError>(gae_lambda >= 0.0 && gae_lambda <= 1.0, "ppo.gae_lambda must lie in [0,1]");
    require<ConfigError>(epochs_per_update >= 1 && minibatch_size >= 1 && steps_per_update >= 1,
                         "ppo epochs/minibatch/steps_per_update must be >= 1");
    require<ConfigError>(learning_rate >= 0.0 && value_coef >= 0.0 && entropy_coef >= 0.0 && max_grad_norm > 0.0,
                         "ppo coefficients must be non-negative (max_grad_norm > 0)");
    require<ConfigError>(target_kl > 0.0, "ppo.target_kl must be > 0");
  }
};

// ---------------------------------------------------------------------------
// Advantage estimation and the clipped surrogate

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// values[t] estimates state t; bootstrap_value estimates the state after the
/// last step and is ignored when that step is terminal.
inline GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                             std::span<const std::uint8_t> dones, double bootstrap_value, double gamma, double lam) {
  require(rewards.size() == values.size() && rewards.size() == dones.size(),
          "compute_gae: length mismatch (rewards ", rewards.size(), ", values ", values.size(), ", dones ",
          dones.size(), ")");
  const std::size_t n = rewards.size();
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double not_done = dones[t] ? 0.0 : 1.0;
    const double next_value = (t + 1 < n) ? values[t + 1] : bootstrap_value;
    const double delta = rewards[t] + gamma * next_value * not_done - values[t];
    next_adv = delta + gamma * lam * not_done * next_adv;
    out.advantages[t] = next_adv;
    out.returns[t] = next_adv + values[t];
  }
  return out;
}

/// Shifts to zero mean and, when the spread is positive, scales to unit
/// (population) standard deviation.
inline void normalize_advantages(std::span<double> adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double ss = 0.0;
  for (double a : adv) ss += (a - mean) * (a - mean);
  const double sd = std::sqrt(ss / n);
  for (auto& a : adv) a = sd > 0.0 ? (a - mean) / sd : a - mean;
}

inline double clipped_objective(double ratio, double advantage, double eps) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage);
}

/// Negative mean clipped surrogate.
inline double ppo_loss(std::span<const double> log_prob_new, std::span<const double> log_prob_old,
                       std::span<const double> advantages, double eps) {
  require(log_prob_new.size() == log_prob_old.size() && log_prob_new.size() == advantages.size() &&
              !advantages.empty(),
          "ppo_loss: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < advantages.size(); ++i) {
    s += clipped_objective(std::exp(log_prob_new[i] - log_prob_old[i]), advantages[i], eps);
  }
  return -s / static_cast<double>(advantages.size());
}

/// d(ppo_loss)/d(log_prob_new[i]); exactly zero where the clipped branch binds.
inline double ppo_loss_grad_sample(double log_prob_new, double log_prob_old, double advantage, double eps,
                                   std::size_t batch) {
  const double r = std::exp(log_prob_new - log_prob_old);
  const double unclipped = r * advantage;
  const double clipped = std::clamp(r, 1.0 - eps, 1.0 + eps) * advantage;
  const bool clip_binds = clipped < unclipped && (r < 1.0 - eps || r > 1.0 + eps);
  return clip_binds ? 0.0 : -unclipped / static_cast<double>(batch);
}

// ---------------------------------------------------------------------------
// Losses over a batch of stored samples

struct PpoSample {
  std::vector<double> observation;
  std::vector<double> pre_squash;
  double log_prob_old = 0.0;
  double advantage = 0.0;
  double value_target = 0.0;
};

struct LossBreakdown {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;

  double total(double value_coef, double entropy_coef) const { return policy + value_coef * value - entropy_coef * entropy; }
};

/// Evaluates policy loss, value loss (mean squared error) and entropy over
/// the batch and, when grad is non-empty, accumulates
///   d(w_policy*policy + w_value*value - w_entropy*entropy)/d(params).
inline LossBreakdown evaluate_losses(const ActorCritic& net, std::span<const PpoSample* const> batch, double eps,
                                     double w_policy, double w_value, double w_entropy, std::span<double> grad) {
  require(!batch.empty(), "empty batch");
  LossBreakdown lb;
  const std::size_t n = batch.size();
  const std::size_t ad = net.action_dim();
  const bool want_grad = !grad.empty();
  ForwardCache cache;
  std::vector<double> d_mean(ad), d_log_std(ad);
  std::size_t clipped = 0;
  for (const PpoSample* s : batch) {
    const PolicyOutput out = net.forward(s->observation, &cache);
    const double lp = action_log_prob(out.mean, out.log_std, s->pre_squash, net.squash());
    const double log_ratio = lp - s->log_prob_old;
    const double r = std::exp(log_ratio);
    lb.policy -= clipped_objective(r, s->advantage, eps) / static_cast<double>(n);
    lb.approx_kl += ((r - 1.0) - log_ratio) / static_cast<double>(n);
    if (std::abs(r - 1.0) > eps) ++clipped;
    const double verr = out.value - s->value_target;
    lb.value += verr * verr / static_cast<double>(n);
    if (!want_grad) continue;

    const double g_lp = w_policy * ppo_loss_grad_sample(lp, s->log_prob_old, s->advantage, eps, n);
    for (std::size_t j = 0; j < ad; ++j) {
      const double ls = std::clamp(out.log_std[j], kLogStdMin, kLogStdMax);
      const double inv_var = std::exp(-2.0 * ls);
      const double diff = s->pre_squash[j] - out.mean[j];
      d_mean[j] = g_lp * diff * inv_var;
      d_log_std[j] = g_lp * (diff * diff * inv_var - 1.0);
    }
    net.backward(cache, d_mean, d_log_std, w_value * 2.0 * verr / static_cast<double>(n), grad);
  }
  lb.entropy = gaussian_entropy(net.log_std());
  lb.clip_fraction = static_cast<double>(clipped) / static_cast<double>(n);
  if (want_grad && w_entropy != 0.0) {
    // Entropy depends on log_std only: dH/dlog_std_j = 1.
    const auto offset = static_cast<std::size_t>(net.log_std().data() - net.parameters().data());
    for (std::size_t j = 0; j < ad; ++j) grad[offset + j] -= w_entropy;
  }
  return lb;
}

// ---------------------------------------------------------------------------
// Optimizer

/// Adaptive-moment optimizer with bias correction.
class Adam {
 public:
  explicit Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad) {
    require(params.size() == m_.size() && grad.size() == m_.size(), "Adam: size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
      v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

 private:
  double lr_, b1_, b2_, eps_;
  std::vector<double> m_, v_;
  std::uint64_t t_ = 0;
};

/// Rescales grad in place so its L2 norm is at most max_norm; returns the
/// norm before clipping.
inline double clip_grad_norm(std::span<double> grad, double max_norm) {
  double ss = 0.0;
  for (double g : grad) ss += g * g;
  const double norm = std::sqrt(ss);
  if (norm > max_norm && norm > 0.0) {
    const double k = max_norm / norm;
    for (auto& g : grad) g *= k;
  }
  return norm;
}

// ---------------------------------------------------------------------------
// Environments and rollout storage

struct Transition {
  double reward = 0.0;
  std::vector<double> observation;
  bool done = false;
};

/// Anything the trainer can collect experience from. Copies must be
/// independent so each rollout worker owns one.
template <typename E>
concept Environment = std::copy_constructible<E> &&
    requires(E& e, const E& ce, std::mt19937_64& rng, std::span<const double> action) {
  { e.reset(rng) } -> std::convertible_to<std::vector<double>>;
  { e.step(action) } -> std::convertible_to<Transition>;
  { ce.observation_dim() } -> std::convertible_to<std::size_t>;
  { ce.action_dim() } -> std::convertible_to<std::size_t>;
};

struct RolloutBuffer {
  std::vector<std::vector<double>> observations;
  std::vector<std::vector<double>> pre_squash;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<std::uint8_t> dones;
  double bootstrap_value = 0.0;
  std::size_t capacity = 2048;

  std::size_t size() const { return rewards.size(); }
  bool full() const { return size() >= capacity; }

  void add(std::vector<double> obs, std::vector<double> u, double log_prob, double reward, double value, bool done) {
    require(!full(), "rollout buffer is full");
    observations.push_back(std::move(obs));
    pre_squash.push_back(std::move(u));
    log_probs.push_back(log_prob);
    rewards.push_back(reward);
    values.push_back(value);
    dones.push_back(done ? 1 : 0);
  }

  /// Advantages are only available once the segment is complete.
  GaeResult advantages(double gamma, double lam) const {
    require(full() || (!dones.empty() && dones.back()) || bootstrap_set_,
            "advantages requested before the buffer is full or bootstrapped");
    return compute_gae(rewards, values, dones, bootstrap_value, gamma, lam);
  }

  void set_bootstrap(double v) {
    bootstrap_value = v;
    bootstrap_set_ = true;
  }

 private:
  bool bootstrap_set_ = false;
};

/// Scales rewards by the running standard deviation of the discounted return.
class RewardNormalizer {
 public:
  explicit RewardNormalizer(double gamma, double clip = 10.0) : gamma_(gamma), clip_(clip) {}

  double operator()(double reward, bool done, std::size_t stream) {
    if (stream >= returns_.size()) returns_.resize(stream + 1, 0.0);
    returns_[stream] = returns_[stream] * gamma_ + reward;
    ++count_;
    const double delta = returns_[stream] - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (returns_[stream] - mean_);
    if (done) returns_[stream] = 0.0;
    const double var = count_ > 1 ? m2_ / static_cast<double>(count_) : 1.0;
    return std::clamp(reward / std::sqrt(var + 1e-8), -clip_, clip_);
  }

 private:
  double gamma_, clip_;
  std::vector<double> returns_;
  std::uint64_t count_ = 0;
  double mean_ = 0.0, m2_ = 0.0;
};

struct TrainingLogRow {
  std::size_t update = 0;
  std::size_t steps = 0;
  double mean_reward = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  std::size_t epochs_run = 0;
};

struct TrainingLog {
  std::vector<TrainingLogRow> rows;

  void write_csv(std::ostream& out, const std::string& comment = {}) const {
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "update,steps,mean_reward,policy_loss,value_loss,entropy,approx_kl,clip_fraction,epochs_run\n";
    for (const auto& r : rows) {
      out << r.update << ',' << r.steps << ',' << format_double(r.mean_reward) << ',' << format_double(r.policy_loss)
          << ',' << format_double(r.value_loss) << ',' << format_double(r.entropy) << ','
          << format_double(r.approx_kl) << ',' << format_double(r.clip_fraction) << ',' << r.epochs_run << '\n';
    }
  }

  void write_csv(const std::string& path, const std::string& comment = {}) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    write_csv(out, comment);
  }
};

struct TrainResult {
  ActorCritic policy;
  TrainingLog log;
  std::size_t steps = 0;
};

using UpdateCallback = std::function<void(const TrainingLogRow&, const ActorCritic&)>;

namespace detail {

template <Environment E>
struct RolloutWorker {
  E env;
  std::mt19937_64 rng;
  std::vector<double> obs;
  bool needs_reset = true;
  RolloutBuffer buffer;

  void collect(const ActorCritic& net, std::size_t n) {
    buffer = RolloutBuffer{};
    buffer.capacity = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (needs_reset) {
        obs = env.reset(rng);
        needs_reset = false;
      }
      const PolicyOutput out = net.forward(obs);
      SampledAction a = sample_action(out.mean, out.log_std, net.squash(), rng);
      Transition tr = env.step(a.action);
      require<DivergenceError>(std::isfinite(tr.reward), "non-finite reward from environment");
      buffer.add(std::move(obs), std::move(a.pre_squash), a.log_prob, tr.reward, out.value, tr.done);
      obs = std::move(tr.observation);
      needs_reset = tr.done;
    }
    buffer.set_bootstrap(needs_reset ? 0.0 : net.forward(obs).value);
  }
};

}  // namespace detail

/// On-policy PPO: collect, estimate advantages, then minibatch epochs with
/// early stop on approximate KL. Rollouts fan out over `workers` copies of
/// the environment; with one worker and a fixed seed the run is reproducible.
template <Environment E>
TrainResult train_ppo(const E& env, ActorCritic policy, const PpoConfig& cfg, std::uint64_t seed,
                      std::size_t workers = 1, const UpdateCallback& on_update = {}) {
  cfg.validate();
  require(workers >= 1, "workers must be >= 1");
  require(env.observation_dim() == policy.input_dim(), "environment observation dim ", env.observation_dim(),
          " does not match policy input dim ", policy.input_dim());
  require(env.action_dim() == policy.action_dim(), "environment action dim ", env.action_dim(),
          " does not match policy action dim ", policy.action_dim());

  std::vector<detail::RolloutWorker<E>> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    std::seed_seq ss{seed, static_cast<std::uint64_t>(w), std::uint64_t{0x5eed}};
    pool.push_back(detail::RolloutWorker<E>{env, std::mt19937_64(ss), {}, true, {}});
  }
  std::seed_seq update_seq{seed, std::uint64_t{0xabc}};
  std::mt19937_64 update_rng(update_seq);
  RewardNormalizer normalizer(cfg.gamma);
  Adam adam(policy.parameter_count(), cfg.learning_rate);

  TrainResult result;
  std::vector<double> grad(policy.parameter_count());
  std::size_t update = 0;
  while (result.steps < cfg.total_steps) {
    const std::size_t batch_steps = std::min(cfg.steps_per_update, cfg.total_steps - result.steps);
    std::vector<std::size_t> share(workers, batch_steps / workers);
    for (std::size_t w = 0; w < batch_steps % workers; ++w) ++share[w];

    if (workers == 1) {
      pool[0].collect(policy, share[0]);
    } else {
      std::vector<std::jthread> threads;
      for (std::size_t w = 0; w < workers; ++w) {
        if (share[w] == 0) continue;
        threads.emplace_back([&, w] { pool[w].collect(policy, share[w]); });
      }
    }
    result.steps += batch_steps;

    std::vector<PpoSample> samples;
    samples.reserve(batch_steps);
    double reward_sum = 0.0;
    for (std::size_t w = 0; w < workers; ++w) {
      auto& buf = pool[w].buffer;
      if (share[w] == 0) continue;
      for (std::size_t i = 0; i < buf.size(); ++i) {
        reward_sum += buf.rewards[i];
        if (cfg.normalize_reward) buf.rewards[i] = normalizer(buf.rewards[i], buf.dones[i] != 0, w);
      }
      const GaeResult gae = buf.advantages(cfg.gamma, cfg.gae_lambda);
      for (std::size_t i = 0; i < buf.size(); ++i) {
        samples.push_back(PpoSample{std::move(buf.observations[i]), std::move(buf.pre_squash[i]), buf.log_probs[i],
                                    gae.advantages[i], gae.returns[i]});
      }
    }
    {
      std::vector<double> adv(samples.size());
      for (std::size_t i = 0; i < samples.size(); ++i) adv[i] = samples[i].advantage;
      normalize_advantages(adv);
      for (std::size_t i = 0; i < samples.size(); ++i) samples[i].advantage = adv[i];
    }

    TrainingLogRow row;
    row.update = ++update;
    row.steps = result.steps;
    row.mean_reward = reward_sum / static_cast<double>(batch_steps);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t minibatches = 0;
    bool stop = false;
    for (std::size_t epoch = 0; epoch < cfg.epochs_per_update && !stop; ++epoch) {
      std::shuffle(order.begin(), order.end(), update_rng);
      for (std::size_t start = 0; start < order.size(); start += cfg.minibatch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.minibatch_size);
        std::vector<const PpoSample*> mb;
        mb.reserve(end - start);
        for (std::size_t k = start; k < end; ++k) mb.push_back(&samples[order[k]]);
        std::fill(grad.begin(), grad.end(), 0.0);
        const LossBreakdown lb =
            evaluate_losses(policy, mb, cfg.clip_epsilon, 1.0, cfg.value_coef, cfg.entropy_coef, grad);
        const double total = lb.total(cfg.value_coef, cfg.entropy_coef);
        if (!std::isfinite(total)) throw DivergenceError("PPO loss became non-finite at update " + std::to_string(update));
        if (lb.approx_kl > cfg.target_kl) {
          stop = true;
          break;
        }
        clip_grad_norm(grad, cfg.max_grad_norm);
        adam.step(policy.parameters(), grad);
        policy.clamp_log_std();
        ++minibatches;
        row.policy_loss += lb.policy;
        row.value_loss += lb.value;
        row.entropy += lb.entropy;
        row.approx_kl += lb.approx_kl;
        row.clip_fraction += lb.clip_fraction;
      }
      row.epochs_run = epoch + 1;
    }
    if (!policy.all_finite()) throw DivergenceError("policy parameters became non-finite at update " + std::to_string(update));
    if (minibatches > 0) {
      const double k = static_cast<double>(minibatches);
      row.policy_loss /= k;
      row.value_loss /= k;
      row.entropy /= k;
      row.approx_kl /= k;
      row.clip_fraction /= k;
    } else {
      row.entropy = gaussian_entropy(policy.log_std());
    }
    result.log.rows.push_back(row);
    if (on_update) on_update(row, policy);
  }
  result.policy = std::move(policy);
  return result;
}

}  // namespace marsbid
