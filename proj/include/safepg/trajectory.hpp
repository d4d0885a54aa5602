#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace safepg {

// Per-episode record. For a horizon-T episode there are T+1 states and
// safety flags, and T actions and rewards; rewards are evaluated at
// (S_t, A_t) for t = 0..T-1.
template <class State, class Action>
struct Trajectory {
  std::vector<State> states;    // S_0 .. S_T
  std::vector<Action> actions;  // A_0 .. A_{T-1}
  std::vector<double> rewards;  // r_0 .. r_{T-1}
  std::vector<int> safe_flags;  // b_0 .. b_T, each 0 or 1

  int horizon() const { return static_cast<int>(actions.size()); }

  bool well_formed() const {
    const std::size_t t = actions.size();
    if (t < 1) return false;
    if (states.size() != t + 1 || rewards.size() != t ||
        safe_flags.size() != t + 1) {
      return false;
    }
    for (int b : safe_flags) {
      if (b != 0 && b != 1) return false;
    }
    return true;
  }
};

// G_t = prod_{u=t}^{T} b_u. Tail product of the safety indicators, so
// G_T = b_T and G_t = b_t * G_{t+1}.
template <class State, class Action>
int indicator_tail_product(const Trajectory<State, Action>& traj, int t) {
  const int horizon = traj.horizon();
  if (t < 0 || t > horizon) {
    throw std::out_of_range("indicator_tail_product: t out of [0, T]");
  }
  for (int u = t; u <= horizon; ++u) {
    if (traj.safe_flags[static_cast<std::size_t>(u)] == 0) return 0;
  }
  return 1;
}

inline double augmented_reward(double r, int safe, double mu) {
  return r + mu * safe;
}

// R_{t,mu} = sum_{u=t}^{T-1} (r_u + mu * b_u). With terminal_bonus the
// bonus of the terminal state, mu * b_T, is folded into the last step.
template <class State, class Action>
double reward_to_go(const Trajectory<State, Action>& traj, int t, double mu,
                    bool terminal_bonus = false) {
  const int horizon = traj.horizon();
  if (t < 0 || t > horizon - 1) {
    throw std::out_of_range("reward_to_go: t out of [0, T-1]");
  }
  double sum = 0.0;
  for (int u = t; u < horizon; ++u) {
    sum += augmented_reward(traj.rewards[static_cast<std::size_t>(u)],
                            traj.safe_flags[static_cast<std::size_t>(u)], mu);
  }
  if (terminal_bonus) {
    sum += mu * traj.safe_flags[static_cast<std::size_t>(horizon)];
  }
  return sum;
}

}  // namespace safepg
