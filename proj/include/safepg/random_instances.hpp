#pragma once

#include "safepg/dual.hpp"
#include "safepg/rng.hpp"
#include "safepg/tabular_mdp.hpp"
#include "safepg/tabular_policy.hpp"

namespace safepg {

struct InstanceOptions {
  int min_states = 2;
  int max_states = 4;
  int n_actions = 2;
  int min_horizon = 2;
  int max_horizon = 4;
  // Tilt transition mass toward safe destinations, producing policies
  // close enough to the feasibility thresholds to exercise all three sets.
  bool safety_biased = false;
};

inline int uniform_int(RngStream& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.uniform() * (hi - lo + 1));
}

inline TabularMdp random_mdp(RngStream& rng,
                             const InstanceOptions& opt = {}) {
  TabularMdp mdp;
  mdp.n_states = uniform_int(rng, opt.min_states, opt.max_states);
  mdp.n_actions = opt.n_actions;
  mdp.horizon = uniform_int(rng, opt.min_horizon, opt.max_horizon);
  mdp.s0 = 0;
  mdp.resize_tables();

  // At least one unsafe state; s0 = 0 stays safe.
  const int n_unsafe = uniform_int(rng, 1, mdp.n_states - 1);
  for (int i = 0; i < n_unsafe; ++i) {
    mdp.safe[static_cast<std::size_t>(mdp.n_states - 1 - i)] = 0;
  }

  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      mdp.r(s, a) = 2.0 * rng.uniform() - 1.0;
      double sum = 0.0;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        double w = 0.05 + rng.uniform();
        if (opt.safety_biased && mdp.is_safe_state(s2)) w *= 8.0;
        mdp.p(s, a, s2) = w;
        sum += w;
      }
      for (int s2 = 0; s2 < mdp.n_states; ++s2) mdp.p(s, a, s2) /= sum;
    }
  }
  mdp.validate();
  return mdp;
}

// Time-dependent softmax policy with Gaussian logits.
inline SoftmaxTabularPolicy random_policy(const TabularMdp& mdp,
                                          RngStream& rng,
                                          double logit_scale = 1.0) {
  SoftmaxTabularPolicy policy(mdp.n_states, mdp.n_actions, mdp.horizon);
  for (double& l : policy.params()) l = logit_scale * rng.normal();
  return policy;
}

// Instance generator for the dual-bound checks: resamples until the
// frontier's steepest slope sits far inside the lambda search bound, so the
// golden-section dual is exact for every constraint level on the grid.
inline TabularMdp random_mdp_for_dual(RngStream& rng, double max_slope = 100.0,
                                      bool vc_normalized = true) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    InstanceOptions opt;
    opt.safety_biased = (rng.uniform() < 0.5);
    TabularMdp mdp = random_mdp(rng, opt);
    const PolicyFrontier frontier = policy_frontier(mdp, vc_normalized);
    if (frontier.hull.size() >= 2 &&
        max_mixture_slope(frontier) <= max_slope) {
      return mdp;
    }
  }
  throw std::runtime_error("random_mdp_for_dual: no acceptable instance");
}

}  // namespace safepg
