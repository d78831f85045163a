#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "marsbid/ppo.hpp"

namespace marsbid::testing {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

/// Random batch for a network: pre-squash actions drawn from the current
/// policy, log_prob_old perturbed so ratios sit away from the clip kinks.
inline std::vector<PpoSample> random_batch(const ActorCritic& net, std::size_t n, std::mt19937_64& rng,
                                           double eps = 0.2) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> shift(0.02, 0.12);
  std::vector<PpoSample> batch;
  for (std::size_t i = 0; i < n; ++i) {
    PpoSample s;
    s.observation.resize(net.input_dim());
    for (auto& v : s.observation) v = z(rng);
    const PolicyOutput out = net.forward(s.observation);
    s.pre_squash.resize(net.action_dim());
    for (std::size_t j = 0; j < net.action_dim(); ++j) s.pre_squash[j] = out.mean[j] + std::exp(out.log_std[j]) * z(rng);
    const double lp = action_log_prob(out.mean, out.log_std, s.pre_squash, net.squash());
    // Half the samples inside the trust region, half well outside it.
    const double log_ratio = (i % 2 == 0) ? (z(rng) > 0 ? 1 : -1) * shift(rng) : (z(rng) > 0 ? 1 : -1) * (std::log1p(eps) + 0.2);
    s.log_prob_old = lp - log_ratio;
    s.advantage = z(rng);
    s.value_target = z(rng);
    batch.push_back(std::move(s));
  }
  return batch;
}

/// Central finite differences (h = 1e-5) against the analytic gradient of
/// w_p*policy + w_v*value - w_e*entropy, every parameter.
inline GradCheckResult check_gradients(ActorCritic net, const std::vector<PpoSample>& batch, double w_p, double w_v,
                                       double w_e, double eps = 0.2, double h = 1e-5) {
  std::vector<const PpoSample*> ptrs;
  for (const auto& s : batch) ptrs.push_back(&s);
  std::vector<double> grad(net.parameter_count(), 0.0);
  evaluate_losses(net, ptrs, eps, w_p, w_v, w_e, grad);
  const auto loss = [&](const ActorCritic& n) {
    const LossBreakdown lb = evaluate_losses(n, ptrs, eps, w_p, w_v, w_e, {});
    return w_p * lb.policy + w_v * lb.value - w_e * lb.entropy;
  };
  GradCheckResult r;
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params[i];
    params[i] = orig + h;
    const double up = loss(net);
    params[i] = orig - h;
    const double down = loss(net);
    params[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(grad[i]), 1e-6});
    r.max_rel_err = std::max(r.max_rel_err, std::abs(numeric - grad[i]) / denom);
    ++r.checked;
  }
  return r;
}

}  // namespace marsbid::testing
