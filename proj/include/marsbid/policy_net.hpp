#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "marsbid/error.hpp"
#include "marsbid/text.hpp"

namespace marsbid {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kTanhEps = 1e-6;

/// Activations recorded by forward() for the backward pass.
struct ForwardCache {
  std::vector<std::vector<double>> actor;   // actor[0] is the input
  std::vector<std::vector<double>> critic;  // critic[0] is the input
};

struct PolicyOutput {
  std::vector<double> mean;
  std::vector<double> log_std;
  double value = 0.0;
};

/// Actor-critic MLP with separate tanh trunks of identical shape, a linear
/// policy-mean head, a state-independent log_std vector and a linear value
/// head. Parameters live in one flat vector in declaration order:
///   actor layers (W row-major [out][in], then b), policy head (W, b),
///   log_std, critic layers (W, b), value head (W, b).
class ActorCritic {
 public:
  ActorCritic() = default;

  /// layer_dims = {obs_dim, hidden...}. squash selects tanh squashing of
  /// sampled actions (bidding agents) versus raw Gaussian outputs (meta logits).
  ActorCritic(std::vector<std::size_t> layer_dims, std::size_t action_dim, bool squash)
      : layer_dims_(std::move(layer_dims)), action_dim_(action_dim), squash_(squash) {
    require(layer_dims_.size() >= 1, "layer_dims needs at least the input dimension");
    require(action_dim_ >= 1, "action_dim must be >= 1");
    for (auto d : layer_dims_) require(d >= 1, "layer widths must be >= 1");
    std::size_t off = 0;
    const auto add_linear = [&](std::size_t in, std::size_t out) {
      Linear l{in, out, off, off + in * out};
      off += in * out + out;
      return l;
    };
    for (std::size_t l = 0; l + 1 < layer_dims_.size(); ++l) actor_.push_back(add_linear(layer_dims_[l], layer_dims_[l + 1]));
    policy_head_ = add_linear(layer_dims_.back(), action_dim_);
    log_std_offset_ = off;
    off += action_dim_;
    for (std::size_t l = 0; l + 1 < layer_dims_.size(); ++l) critic_.push_back(add_linear(layer_dims_[l], layer_dims_[l + 1]));
    value_head_ = add_linear(layer_dims_.back(), 1);
    params_.assign(off, 0.0);
  }

  const std::vector<std::size_t>& layer_dims() const { return layer_dims_; }
  std::size_t input_dim() const { return layer_dims_.front(); }
  std::size_t action_dim() const { return action_dim_; }
  bool squash() const { return squash_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  /// Scaled-uniform init with variance gain^2/fan_in; gain 1 for hidden and
  /// value layers, 0.01 for the policy head. Biases and log_std start at 0.
  template <typename Rng>
  void initialize(Rng& rng) {
    std::fill(params_.begin(), params_.end(), 0.0);
    const auto init_linear = [&](const Linear& l, double gain) {
      const double bound = gain * std::sqrt(3.0 / static_cast<double>(l.in));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (std::size_t i = 0; i < l.in * l.out; ++i) params_[l.w + i] = u(rng);
    };
    for (const auto& l : actor_) init_linear(l, 1.0);
    init_linear(policy_head_, 0.01);
    for (const auto& l : critic_) init_linear(l, 1.0);
    init_linear(value_head_, 1.0);
  }

  void clamp_log_std() {
    for (std::size_t j = 0; j < action_dim_; ++j) {
      params_[log_std_offset_ + j] = std::clamp(params_[log_std_offset_ + j], kLogStdMin, kLogStdMax);
    }
  }

  std::span<const double> log_std() const { return {params_.data() + log_std_offset_, action_dim_}; }
  std::span<double> log_std() { return {params_.data() + log_std_offset_, action_dim_}; }
  std::size_t log_std_offset() const { return log_std_offset_; }

  PolicyOutput forward(std::span<const double> obs, ForwardCache* cache = nullptr) const {
    require(obs.size() == input_dim(), "observation dimension mismatch: network expects ", input_dim(), ", got ",
            obs.size());
    PolicyOutput out;
    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    run_trunk(actor_, obs, c.actor);
    run_trunk(critic_, obs, c.critic);
    out.mean.assign(action_dim_, 0.0);
    linear(policy_head_, c.actor.back(), out.mean);
    std::vector<double> v(1, 0.0);
    linear(value_head_, c.critic.back(), v);
    out.value = v[0];
    const auto ls = log_std();
    out.log_std.assign(ls.begin(), ls.end());
    return out;
  }

  /// Accumulates d(loss)/d(params) into grad given output sensitivities.
  void backward(const ForwardCache& cache, std::span<const double> d_mean, std::span<const double> d_log_std,
                double d_value, std::span<double> grad) const {
    require(grad.size() == params_.size(), "gradient buffer size mismatch");
    require(d_mean.size() == action_dim_ && d_log_std.size() == action_dim_, "output gradient size mismatch");
    backprop_trunk(actor_, policy_head_, cache.actor, d_mean, grad);
    for (std::size_t j = 0; j < action_dim_; ++j) grad[log_std_offset_ + j] += d_log_std[j];
    const double dv[1] = {d_value};
    backprop_trunk(critic_, value_head_, cache.critic, dv, grad);
  }

  friend bool operator==(const ActorCritic& a, const ActorCritic& b) {
    return a.layer_dims_ == b.layer_dims_ && a.action_dim_ == b.action_dim_ && a.squash_ == b.squash_ &&
           a.params_ == b.params_;
  }

  /// Hash of the exact parameter bytes.
  std::uint64_t parameter_hash() const {
    return fnv1a(std::string_view(reinterpret_cast<const char*>(params_.data()), params_.size() * sizeof(double)));
  }

  bool all_finite() const {
    return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
  }

 private:
  struct Linear {
    std::size_t in = 0, out = 0;
    std::size_t w = 0, b = 0;
  };

  void linear(const Linear& l, std::span<const double> x, std::span<double> y) const {
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* row = params_.data() + l.w + o * l.in;
      double s = params_[l.b + o];
      for (std::size_t i = 0; i < l.in; ++i) s += row[i] * x[i];
      y[o] = s;
    }
  }

  void run_trunk(const std::vector<Linear>& layers, std::span<const double> obs,
                 std::vector<std::vector<double>>& acts) const {
    acts.resize(layers.size() + 1);
    acts[0].assign(obs.begin(), obs.end());
    for (std::size_t l = 0; l < layers.size(); ++l) {
      acts[l + 1].assign(layers[l].out, 0.0);
      linear(layers[l], acts[l], acts[l + 1]);
      for (auto& v : acts[l + 1]) v = std::tanh(v);
    }
  }

  void backprop_trunk(const std::vector<Linear>& layers, const Linear& head,
                      const std::vector<std::vector<double>>& acts, std::span<const double> d_out,
                      std::span<double> grad) const {
    std::vector<double> delta(d_out.begin(), d_out.end());
    std::vector<double> d_in;
    const auto back_linear = [&](const Linear& l, const std::vector<double>& x) {
      d_in.assign(l.in, 0.0);
      for (std::size_t o = 0; o < l.out; ++o) {
        const double g = delta[o];
        if (g == 0.0) continue;
        const double* row = params_.data() + l.w + o * l.in;
        double* grow = grad.data() + l.w + o * l.in;
        for (std::size_t i = 0; i < l.in; ++i) {
          grow[i] += g * x[i];
          d_in[i] += g * row[i];
        }
        grad[l.b + o] += g;
      }
    };
    back_linear(head, acts.back());
    for (std::size_t l = layers.size(); l-- > 0;) {
      const auto& y = acts[l + 1];
      for (std::size_t i = 0; i < d_in.size(); ++i) d_in[i] *= (1.0 - y[i] * y[i]);
      delta.swap(d_in);
      back_linear(layers[l], acts[l]);
    }
  }

  std::vector<std::size_t> layer_dims_;
  std::size_t action_dim_ = 1;
  bool squash_ = true;
  std::vector<Linear> actor_, critic_;
  Linear policy_head_, value_head_;
  std::size_t log_std_offset_ = 0;
  std::vector<double> params_;
};

// ---------------------------------------------------------------------------
// Diagonal Gaussian action distribution

struct SampledAction {
  std::vector<double> pre_squash;  // Gaussian sample u
  std::vector<double> action;      // tanh(u) when squashed, else u
  double log_prob = 0.0;
};

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2*pi)

/// Log-density of the Gaussian part at u (no squash correction).
inline double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                                std::span<const double> u) {
  double lp = 0.0;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const double ls = std::clamp(log_std[j], kLogStdMin, kLogStdMax);
    const double z = (u[j] - mean[j]) * std::exp(-ls);
    lp += -0.5 * z * z - ls - kHalfLog2Pi;
  }
  return lp;
}

/// Change-of-variables term subtracted for tanh squashing.
inline double tanh_correction(std::span<const double> u) {
  double c = 0.0;
  for (double v : u) {
    const double a = std::tanh(v);
    c += std::log(1.0 - a * a + kTanhEps);
  }
  return c;
}

inline double action_log_prob(std::span<const double> mean, std::span<const double> log_std,
                              std::span<const double> u, bool squash) {
  const double lp = gaussian_log_prob(mean, log_std, u);
  return squash ? lp - tanh_correction(u) : lp;
}

/// Entropy of the pre-squash Gaussian (nats).
inline double gaussian_entropy(std::span<const double> log_std) {
  double h = 0.0;
  for (double ls : log_std) h += std::clamp(ls, kLogStdMin, kLogStdMax) + 0.5 + kHalfLog2Pi;
  return h;
}

template <typename Rng>
SampledAction sample_action(std::span<const double> mean, std::span<const double> log_std, bool squash, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  SampledAction s;
  s.pre_squash.resize(mean.size());
  s.action.resize(mean.size());
  for (std::size_t j = 0; j < mean.size(); ++j) {
    require(std::isfinite(mean[j]) && std::isfinite(log_std[j]), "non-finite policy output");
    const double ls = std::clamp(log_std[j], kLogStdMin, kLogStdMax);
    s.pre_squash[j] = mean[j] + std::exp(ls) * normal(rng);
    s.action[j] = squash ? std::tanh(s.pre_squash[j]) : s.pre_squash[j];
  }
  s.log_prob = action_log_prob(mean, log_std, s.pre_squash, squash);
  return s;
}

/// Deterministic action: tanh(mean) when squashed, else the mean itself.
inline std::vector<double> deterministic_action(std::span<const double> mean, bool squash) {
  std::vector<double> a(mean.begin(), mean.end());
  if (squash) {
    for (auto& v : a) v = std::tanh(v);
  }
  return a;
}

}  // namespace marsbid
