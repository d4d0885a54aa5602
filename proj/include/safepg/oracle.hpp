#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "safepg/estimators.hpp"
#include "safepg/gradient.hpp"
#include "safepg/tabular_mdp.hpp"
#include "safepg/tabular_policy.hpp"
#include "safepg/trajectory.hpp"

namespace safepg {

using TabularTrajectory = Trajectory<int, int>;

struct WeightedTrajectory {
  TabularTrajectory traj;
  double prob = 0.0;
};

namespace detail {

inline void check_enumeration_guard(const TabularMdp& mdp) {
  const double paths = std::pow(
      static_cast<double>(mdp.n_states) * mdp.n_actions, mdp.horizon);
  if (paths > 1e7) {
    throw std::length_error("trajectory enumeration guard exceeded");
  }
}

// Depth-first walk over every positive-probability trajectory.
template <class Fn>
void for_each_trajectory_impl(const TabularMdp& mdp,
                              const SoftmaxTabularPolicy& policy,
                              TabularTrajectory& traj, int t, int s,
                              double prob, Fn&& fn) {
  if (t == mdp.horizon) {
    fn(const_cast<const TabularTrajectory&>(traj), prob);
    return;
  }
  const std::vector<double> pa = policy.probs(s, t);
  for (int a = 0; a < mdp.n_actions; ++a) {
    if (pa[static_cast<std::size_t>(a)] == 0.0) continue;
    for (int s2 = 0; s2 < mdp.n_states; ++s2) {
      const double pt = mdp.p(s, a, s2);
      if (pt == 0.0) continue;
      traj.actions.push_back(a);
      traj.rewards.push_back(mdp.r(s, a));
      traj.states.push_back(s2);
      traj.safe_flags.push_back(mdp.is_safe_state(s2) ? 1 : 0);
      for_each_trajectory_impl(mdp, policy, traj, t + 1, s2,
                               prob * pa[static_cast<std::size_t>(a)] * pt,
                               fn);
      traj.actions.pop_back();
      traj.rewards.pop_back();
      traj.states.pop_back();
      traj.safe_flags.pop_back();
    }
  }
}

template <class Fn>
void for_each_trajectory(const TabularMdp& mdp,
                         const SoftmaxTabularPolicy& policy, Fn&& fn) {
  check_enumeration_guard(mdp);
  TabularTrajectory traj;
  traj.states.push_back(mdp.s0);
  traj.safe_flags.push_back(mdp.is_safe_state(mdp.s0) ? 1 : 0);
  for_each_trajectory_impl(mdp, policy, traj, 0, mdp.s0, 1.0,
                           std::forward<Fn>(fn));
}

}  // namespace detail

inline std::vector<WeightedTrajectory> enumerate_trajectories(
    const TabularMdp& mdp, const SoftmaxTabularPolicy& policy) {
  std::vector<WeightedTrajectory> out;
  detail::for_each_trajectory(mdp, policy,
                              [&](const TabularTrajectory& traj, double p) {
                                out.push_back({traj, p});
                              });
  return out;
}

// P(all of S_0..S_T safe), by weighted summation over all trajectories.
inline double exact_safety_prob(const TabularMdp& mdp,
                                const SoftmaxTabularPolicy& policy) {
  double total = 0.0;
  detail::for_each_trajectory(
      mdp, policy, [&](const TabularTrajectory& traj, double p) {
        total += p * indicator_tail_product(traj, 0);
      });
  return total;
}

// E[sum_t r_mu(S_t, A_t)] under the library's return convention.
inline double exact_value(const TabularMdp& mdp,
                          const SoftmaxTabularPolicy& policy, double mu,
                          bool terminal_bonus = false) {
  double total = 0.0;
  detail::for_each_trajectory(
      mdp, policy, [&](const TabularTrajectory& traj, double p) {
        total += p * reward_to_go(traj, 0, mu, terminal_bonus);
      });
  return total;
}

// E[(1/(T+1)) sum_t 1(S_t safe)]; the normalization is dropped when
// normalized = false.
inline double exact_vc(const TabularMdp& mdp,
                       const SoftmaxTabularPolicy& policy,
                       bool normalized = true) {
  double total = 0.0;
  detail::for_each_trajectory(
      mdp, policy, [&](const TabularTrajectory& traj, double p) {
        int count = 0;
        for (int b : traj.safe_flags) count += b;
        total += p * count;
      });
  return normalized ? total / (mdp.horizon + 1) : total;
}

enum class EstimatorKind { safety, value };

// Exact expectation of a stochastic estimator: sum_tau Pr(tau) g(tau).
inline GradientVector exact_estimator_expectation(
    const TabularMdp& mdp, const SoftmaxTabularPolicy& policy,
    EstimatorKind which, double mu = 0.0, bool terminal_bonus = false) {
  GradientVector total(policy.param_count());
  detail::for_each_trajectory(
      mdp, policy, [&](const TabularTrajectory& traj, double p) {
        if (which == EstimatorKind::safety) {
          total.add_scaled(grad_safety_prob(traj, policy), p);
        } else {
          total.add_scaled(grad_value(traj, policy, mu, terminal_bonus), p);
        }
      });
  return total;
}

enum class ExactTarget { safety_prob, value, vc };

// Central finite differences of an exact scalar target over every logit.
// Independent of the score-function path: only forward evaluations of the
// enumeration oracle are used.
inline GradientVector finite_diff_grad(const TabularMdp& mdp,
                                       const SoftmaxTabularPolicy& policy,
                                       ExactTarget target, double h = 1e-4,
                                       double mu = 0.0,
                                       bool terminal_bonus = false) {
  if (!(h >= 1e-7 && h <= 1e-3)) {
    throw std::invalid_argument("finite_diff_grad: h outside [1e-7, 1e-3]");
  }
  auto eval = [&](const SoftmaxTabularPolicy& pol) -> double {
    switch (target) {
      case ExactTarget::safety_prob:
        return exact_safety_prob(mdp, pol);
      case ExactTarget::value:
        return exact_value(mdp, pol, mu, terminal_bonus);
      case ExactTarget::vc:
        return exact_vc(mdp, pol);
    }
    return 0.0;
  };
  SoftmaxTabularPolicy perturbed = policy;
  GradientVector g(policy.param_count());
  for (std::size_t i = 0; i < policy.param_count(); ++i) {
    const double saved = perturbed.params()[i];
    perturbed.params()[i] = saved + h;
    const double up = eval(perturbed);
    perturbed.params()[i] = saved - h;
    const double down = eval(perturbed);
    perturbed.params()[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Value and exact gradient of E[G_t | S_{t-1} = s], t in [1, T], by
// enumerating every continuation from stage t-1. The gradient of each
// path weight is taken analytically via its score sum.
inline std::pair<double, GradientVector> tail_value_and_grad(
    const TabularMdp& mdp, const SoftmaxTabularPolicy& policy, int t, int s) {
  if (t < 1 || t > mdp.horizon) {
    throw std::out_of_range("tail_value_and_grad: t out of [1, T]");
  }
  double value = 0.0;
  GradientVector grad(policy.param_count());

  std::function<void(int, int, double, const GradientVector&)> recurse =
      [&](int stage, int cur, double prob, const GradientVector& score_sum) {
        if (stage == mdp.horizon) {
          value += prob;
          grad.add_scaled(score_sum, prob);
          return;
        }
        const std::vector<double> pa = policy.probs(cur, stage);
        for (int a = 0; a < mdp.n_actions; ++a) {
          if (pa[static_cast<std::size_t>(a)] == 0.0) continue;
          GradientVector with_score = score_sum;
          policy.score_accumulate(with_score, cur, a, stage, 1.0);
          for (int s2 = 0; s2 < mdp.n_states; ++s2) {
            const double pt = mdp.p(cur, a, s2);
            if (pt == 0.0 || !mdp.is_safe_state(s2)) continue;
            recurse(stage + 1, s2,
                    prob * pa[static_cast<std::size_t>(a)] * pt, with_score);
          }
        }
      };
  recurse(t - 1, s, 1.0, GradientVector(policy.param_count()));
  return {value, std::move(grad)};
}

struct RecursionCheck {
  GradientVector lhs;  // gradient pair at the worst safe state
  GradientVector rhs;
  double max_abs_diff = 0.0;
};

// Checks the one-step gradient recursion
//   grad E[G_t|S_{t-1}] = E[grad E[G_{t+1}|S_t] 1(S_t safe) | S_{t-1}]
//                        + E[G_t grad log pi(A_{t-1}|S_{t-1}) | S_{t-1}]
// at every safe state for stage t, 1 <= t <= T-1.
inline RecursionCheck verify_recursion(const TabularMdp& mdp,
                                       const SoftmaxTabularPolicy& policy,
                                       int t) {
  if (t < 1 || t > mdp.horizon - 1) {
    throw std::out_of_range("verify_recursion: t out of [1, T-1]");
  }
  detail::check_enumeration_guard(mdp);

  // E[G_{t+1} | S_t = s'] for every s', t+1 <= T.
  std::vector<double> next_value(static_cast<std::size_t>(mdp.n_states));
  std::vector<GradientVector> next_grad(
      static_cast<std::size_t>(mdp.n_states));
  for (int s2 = 0; s2 < mdp.n_states; ++s2) {
    auto [v, g] = tail_value_and_grad(mdp, policy, t + 1, s2);
    next_value[static_cast<std::size_t>(s2)] = v;
    next_grad[static_cast<std::size_t>(s2)] = std::move(g);
  }

  RecursionCheck result;
  for (int s = 0; s < mdp.n_states; ++s) {
    if (!mdp.is_safe_state(s)) continue;
    auto [value, lhs] = tail_value_and_grad(mdp, policy, t, s);
    (void)value;

    GradientVector rhs(policy.param_count());
    const std::vector<double> pa = policy.probs(s, t - 1);
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double pia = pa[static_cast<std::size_t>(a)];
      if (pia == 0.0) continue;
      double q = 0.0;  // E[G_t | S_{t-1}=s, A_{t-1}=a]
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        const double pt = mdp.p(s, a, s2);
        if (pt == 0.0 || !mdp.is_safe_state(s2)) continue;
        rhs.add_scaled(next_grad[static_cast<std::size_t>(s2)], pia * pt);
        q += pt * next_value[static_cast<std::size_t>(s2)];
      }
      policy.score_accumulate(rhs, s, a, t - 1, pia * q);
    }

    const double diff = (lhs - rhs).max_abs();
    if (diff >= result.max_abs_diff) {
      result.max_abs_diff = diff;
      result.lhs = std::move(lhs);
      result.rhs = std::move(rhs);
    }
  }
  return result;
}

}  // namespace safepg
