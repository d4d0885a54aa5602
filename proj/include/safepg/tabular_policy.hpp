#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "safepg/gradient.hpp"

namespace safepg {

// Softmax policy over a finite state/action space, optionally indexed by
// time stage (n_stages = T gives a nonstationary Markov policy). Used as
// the oracle-side stand-in for the parametric policy.
class SoftmaxTabularPolicy {
 public:
  SoftmaxTabularPolicy(int n_states, int n_actions, int n_stages = 1)
      : n_states_(n_states), n_actions_(n_actions), n_stages_(n_stages) {
    if (n_states < 1 || n_actions < 1 || n_stages < 1) {
      throw std::invalid_argument("SoftmaxTabularPolicy: bad dimensions");
    }
    logits_.assign(static_cast<std::size_t>(n_states) * n_actions * n_stages,
                   0.0);
  }

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  int n_stages() const { return n_stages_; }
  std::size_t param_count() const { return logits_.size(); }

  std::size_t logit_index(int s, int a, int t) const {
    check_indices(s, a, t);
    const int stage = stage_of(t);
    return (static_cast<std::size_t>(stage) * n_states_ + s) * n_actions_ + a;
  }

  double logit(int s, int a, int t) const { return logits_[logit_index(s, a, t)]; }
  double& logit(int s, int a, int t) { return logits_[logit_index(s, a, t)]; }

  std::vector<double>& params() { return logits_; }
  const std::vector<double>& params() const { return logits_; }

  std::vector<double> probs(int s, int t) const {
    check_indices(s, 0, t);
    const int stage = stage_of(t);
    const std::size_t base =
        (static_cast<std::size_t>(stage) * n_states_ + s) * n_actions_;
    double mx = logits_[base];
    for (int a = 1; a < n_actions_; ++a) mx = std::max(mx, logits_[base + a]);
    std::vector<double> p(static_cast<std::size_t>(n_actions_));
    double z = 0.0;
    for (int a = 0; a < n_actions_; ++a) {
      p[a] = std::exp(logits_[base + a] - mx);
      z += p[a];
    }
    for (double& x : p) x /= z;
    return p;
  }

  double prob(int s, int a, int t) const {
    check_indices(s, a, t);
    return probs(s, t)[static_cast<std::size_t>(a)];
  }

  // d log pi(a|s,t) / d logit(s,b,t) = delta_{ab} - pi(b|s,t); zero on
  // every other slice.
  void score_accumulate(GradientVector& g, int s, int a, int t,
                        double w) const {
    if (g.size() != logits_.size()) {
      throw std::invalid_argument("score_accumulate: dimension mismatch");
    }
    const std::vector<double> p = probs(s, t);
    const int stage = stage_of(t);
    const std::size_t base =
        (static_cast<std::size_t>(stage) * n_states_ + s) * n_actions_;
    for (int b = 0; b < n_actions_; ++b) {
      g[base + b] += w * ((b == a ? 1.0 : 0.0) - p[b]);
    }
  }

  GradientVector score(int s, int a, int t) const {
    GradientVector g(param_count());
    score_accumulate(g, s, a, t, 1.0);
    return g;
  }

 private:
  int stage_of(int t) const { return n_stages_ == 1 ? 0 : t; }

  void check_indices(int s, int a, int t) const {
    if (s < 0 || s >= n_states_ || a < 0 || a >= n_actions_ || t < 0 ||
        (n_stages_ > 1 && t >= n_stages_)) {
      throw std::out_of_range("SoftmaxTabularPolicy: index out of range");
    }
  }

  int n_states_;
  int n_actions_;
  int n_stages_;
  std::vector<double> logits_;  // [(t*S + s)*A + a]
};

}  // namespace safepg
