#pragma once

#include "safepg/oracle.hpp"
#include "safepg/tabular_mdp.hpp"
#include "safepg/tabular_policy.hpp"

namespace safepg {

// Membership of one policy in the three nested feasible sets:
//   F_hat: E[sum_t 1(S_t unsafe)] <= delta      (strict surrogate)
//   F:     P(all S_t safe)        >= 1 - delta  (joint constraint)
//   F_bar: E[(1/(T+1)) sum_t 1(S_t safe)] >= 1 - delta  (cumulative)
struct FeasibilityVerdict {
  bool in_F_hat = false;
  bool in_F = false;
  bool in_F_bar = false;
  double p_joint = 0.0;
  double v_c = 0.0;
  double expected_unsafe = 0.0;
  double delta = 0.0;
};

inline FeasibilityVerdict feasibility_verdict(
    const TabularMdp& mdp, const SoftmaxTabularPolicy& policy, double delta) {
  FeasibilityVerdict v;
  v.delta = delta;
  v.p_joint = exact_safety_prob(mdp, policy);
  double safe_count = 0.0;
  detail::for_each_trajectory(
      mdp, policy, [&](const TabularTrajectory& traj, double p) {
        int count = 0;
        for (int b : traj.safe_flags) count += b;
        safe_count += p * count;
      });
  v.v_c = safe_count / (mdp.horizon + 1);
  v.expected_unsafe = (mdp.horizon + 1) - safe_count;
  v.in_F_hat = v.expected_unsafe <= delta;
  v.in_F = v.p_joint >= 1.0 - delta;
  v.in_F_bar = v.v_c >= 1.0 - delta;
  return v;
}

}  // namespace safepg
