#pragma once

#include <concepts>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "safepg/gradient.hpp"
#include "safepg/trajectory.hpp"

namespace safepg {

template <class P, class S, class A>
concept ScorePolicy = requires(const P& p, GradientVector& g, const S& s,
                               const A& a) {
  { p.param_count() } -> std::convertible_to<std::size_t>;
  p.score_accumulate(g, s, a, 0, 1.0);
};

// Stochastic gradient of P(all states safe): G_1 * sum_t score(S_t, A_t).
// Exactly zero for any episode with a violation at t >= 1.
template <class S, class A, class Policy>
  requires ScorePolicy<Policy, S, A>
GradientVector grad_safety_prob(const Trajectory<S, A>& traj,
                                const Policy& policy) {
  if (traj.safe_flags.empty() || traj.safe_flags[0] != 1) {
    throw std::invalid_argument("grad_safety_prob: initial state is unsafe");
  }
  GradientVector g(policy.param_count());
  if (indicator_tail_product(traj, 1) == 0) return g;
  for (int t = 0; t < traj.horizon(); ++t) {
    policy.score_accumulate(g, traj.states[static_cast<std::size_t>(t)],
                            traj.actions[static_cast<std::size_t>(t)], t, 1.0);
  }
  return g;
}

// Reward-to-go REINFORCE on the mu-augmented reward:
// sum_t R_{t,mu} * score(S_t, A_t). The optional mean baseline subtracts
// the average reward-to-go of the episode.
template <class S, class A, class Policy>
  requires ScorePolicy<Policy, S, A>
GradientVector grad_value(const Trajectory<S, A>& traj, const Policy& policy,
                          double mu, bool terminal_bonus = false,
                          bool mean_baseline = false) {
  const int horizon = traj.horizon();
  std::vector<double> rtg(static_cast<std::size_t>(horizon));
  double acc = terminal_bonus
                   ? mu * traj.safe_flags[static_cast<std::size_t>(horizon)]
                   : 0.0;
  for (int t = horizon - 1; t >= 0; --t) {
    acc += augmented_reward(traj.rewards[static_cast<std::size_t>(t)],
                            traj.safe_flags[static_cast<std::size_t>(t)], mu);
    rtg[static_cast<std::size_t>(t)] = acc;
  }
  double baseline = 0.0;
  if (mean_baseline) {
    for (double r : rtg) baseline += r;
    baseline /= static_cast<double>(horizon);
  }
  GradientVector g(policy.param_count());
  for (int t = 0; t < horizon; ++t) {
    policy.score_accumulate(g, traj.states[static_cast<std::size_t>(t)],
                            traj.actions[static_cast<std::size_t>(t)], t,
                            rtg[static_cast<std::size_t>(t)] - baseline);
  }
  return g;
}

// grad_value at mu = 0 plus lambda times the safety-probability gradient.
template <class S, class A, class Policy>
  requires ScorePolicy<Policy, S, A>
GradientVector grad_lagrangian(const Trajectory<S, A>& traj,
                               const Policy& policy, double lambda) {
  GradientVector g = grad_value(traj, policy, 0.0);
  g.add_scaled(grad_safety_prob(traj, policy), lambda);
  return g;
}

inline GradientVector batch_average(const std::vector<GradientVector>& grads) {
  if (grads.empty()) {
    throw std::invalid_argument("batch_average: empty batch");
  }
  GradientVector mean(grads.front().size());
  for (const GradientVector& g : grads) {
    mean.add_scaled(g, 1.0);
  }
  mean.scale(1.0 / static_cast<double>(grads.size()));
  return mean;
}

}  // namespace safepg
