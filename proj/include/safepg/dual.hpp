#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "safepg/tabular_mdp.hpp"

namespace safepg {

// Time-dependent deterministic Markov policy: action[t * n_states + s].
struct DeterministicPolicy {
  int n_states = 0;
  int n_stages = 0;
  std::vector<int> action;

  int at(int t, int s) const {
    return action[static_cast<std::size_t>(t) * n_states + s];
  }
};

struct DualFunctionResult {
  double value = 0.0;
  DeterministicPolicy argmax;
};

namespace detail {

inline double indicator_weight(const TabularMdp& mdp, bool vc_normalized) {
  return vc_normalized ? 1.0 / (mdp.horizon + 1) : 1.0;
}

}  // namespace detail

// max over deterministic Markov policies of V + lambda (V_c - xi), by
// backward dynamic programming with stage reward
// r(s,a) + lambda * 1(s safe)/(T+1) and the terminal indicator at stage T.
inline DualFunctionResult dual_function(const TabularMdp& mdp, double lambda,
                                        double xi, bool vc_normalized = true) {
  if (lambda < 0.0) {
    throw std::invalid_argument("dual_function: lambda must be >= 0");
  }
  const int S = mdp.n_states;
  const int T = mdp.horizon;
  const double w = lambda * detail::indicator_weight(mdp, vc_normalized);

  DualFunctionResult out;
  out.argmax.n_states = S;
  out.argmax.n_stages = T;
  out.argmax.action.assign(static_cast<std::size_t>(T) * S, 0);

  std::vector<double> next(static_cast<std::size_t>(S));
  std::vector<double> cur(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s) {
    next[static_cast<std::size_t>(s)] = w * (mdp.is_safe_state(s) ? 1.0 : 0.0);
  }
  for (int t = T - 1; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < mdp.n_actions; ++a) {
        double q = mdp.r(s, a);
        for (int s2 = 0; s2 < S; ++s2) {
          q += mdp.p(s, a, s2) * next[static_cast<std::size_t>(s2)];
        }
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      cur[static_cast<std::size_t>(s)] =
          best + w * (mdp.is_safe_state(s) ? 1.0 : 0.0);
      out.argmax.action[static_cast<std::size_t>(t) * S + s] = best_a;
    }
    std::swap(cur, next);
  }
  out.value = next[static_cast<std::size_t>(mdp.s0)] - lambda * xi;
  return out;
}

// (V, V_c) of a deterministic policy by forward propagation of the state
// distribution.
inline std::pair<double, double> policy_value_and_vc(
    const TabularMdp& mdp, const DeterministicPolicy& pol,
    bool vc_normalized = true) {
  const int S = mdp.n_states;
  std::vector<double> dist(static_cast<std::size_t>(S), 0.0);
  dist[static_cast<std::size_t>(mdp.s0)] = 1.0;
  double v = 0.0;
  double safe_count = 0.0;
  for (int t = 0; t < mdp.horizon; ++t) {
    std::vector<double> nxt(static_cast<std::size_t>(S), 0.0);
    for (int s = 0; s < S; ++s) {
      const double d = dist[static_cast<std::size_t>(s)];
      if (d == 0.0) continue;
      if (mdp.is_safe_state(s)) safe_count += d;
      const int a = pol.at(t, s);
      v += d * mdp.r(s, a);
      for (int s2 = 0; s2 < S; ++s2) {
        nxt[static_cast<std::size_t>(s2)] += d * mdp.p(s, a, s2);
      }
    }
    dist.swap(nxt);
  }
  for (int s = 0; s < S; ++s) {
    if (mdp.is_safe_state(s)) safe_count += dist[static_cast<std::size_t>(s)];
  }
  const double vc =
      vc_normalized ? safe_count / (mdp.horizon + 1) : safe_count;
  return {v, vc};
}

struct PolicyPoint {
  double v = 0.0;
  double vc = 0.0;
  DeterministicPolicy pol;
};

// The achievable (V_c, V) set of episode-level policy mixtures is the
// convex hull of the deterministic-policy points; only its upper concave
// envelope can enter an optimal mixture.
struct PolicyFrontier {
  std::vector<PolicyPoint> hull;  // sorted by vc ascending, upper envelope
  double vc_max = 0.0;
  double v_max = 0.0;
};

inline PolicyFrontier policy_frontier(const TabularMdp& mdp,
                                      bool vc_normalized = true) {
  const int S = mdp.n_states;
  const int T = mdp.horizon;
  const double count_d = std::pow(static_cast<double>(mdp.n_actions),
                                  static_cast<double>(S) * T);
  if (count_d > 4e6) {
    throw std::length_error("deterministic policy enumeration guard exceeded");
  }
  const long long count = static_cast<long long>(count_d);

  std::vector<PolicyPoint> points;
  points.reserve(static_cast<std::size_t>(count));
  DeterministicPolicy pol;
  pol.n_states = S;
  pol.n_stages = T;
  pol.action.assign(static_cast<std::size_t>(T) * S, 0);
  for (long long idx = 0; idx < count; ++idx) {
    long long rem = idx;
    for (std::size_t slot = 0; slot < pol.action.size(); ++slot) {
      pol.action[slot] = static_cast<int>(rem % mdp.n_actions);
      rem /= mdp.n_actions;
    }
    auto [v, vc] = policy_value_and_vc(mdp, pol, vc_normalized);
    points.push_back({v, vc, pol});
  }

  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return a.vc < b.vc || (a.vc == b.vc && a.v < b.v);
  });
  // Keep only the best V at each distinct V_c.
  std::vector<PolicyPoint> best;
  for (auto& pt : points) {
    if (!best.empty() && best.back().vc == pt.vc) {
      best.back() = std::move(pt);
    } else {
      best.push_back(std::move(pt));
    }
  }
  // Upper concave envelope (monotone chain over vc).
  PolicyFrontier frontier;
  for (auto& pt : best) {
    auto& hull = frontier.hull;
    while (hull.size() >= 2) {
      const PolicyPoint& p1 = hull[hull.size() - 2];
      const PolicyPoint& p2 = hull[hull.size() - 1];
      const double cross = (p2.vc - p1.vc) * (pt.v - p1.v) -
                           (p2.v - p1.v) * (pt.vc - p1.vc);
      if (cross >= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(std::move(pt));
  }
  frontier.vc_max = frontier.hull.back().vc;
  frontier.v_max = -std::numeric_limits<double>::infinity();
  for (const auto& pt : frontier.hull) {
    frontier.v_max = std::max(frontier.v_max, pt.v);
  }
  return frontier;
}

// Steepest descending slope |dV/dV_c| along the frontier; the dual optimum
// lambda*(xi) never exceeds it, so it bounds the lambda search range needed.
inline double max_mixture_slope(const PolicyFrontier& frontier) {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < frontier.hull.size(); ++i) {
    const PolicyPoint& p1 = frontier.hull[i];
    const PolicyPoint& p2 = frontier.hull[i + 1];
    if (p2.v < p1.v) {
      m = std::max(m, (p1.v - p2.v) / (p2.vc - p1.vc));
    }
  }
  return m;
}

// One evaluated constraint level: the dual side (lambda_star, d_tilde_star)
// from golden-section over the DP dual, and the primal side (p_tilde_star
// plus the optimal two-policy mixture) from the enumerated frontier.
struct DualResult {
  double xi = 0.0;
  double lambda_star = 0.0;
  double p_tilde_star = 0.0;
  double d_tilde_star = 0.0;
  bool feasible = true;
  DeterministicPolicy mix_a, mix_b;
  double alpha = 1.0;  // weight on mix_a
};

inline DualResult dual_optimum(const TabularMdp& mdp,
                               const PolicyFrontier& frontier, double xi,
                               double lambda_max = 1e3,
                               bool vc_normalized = true) {
  DualResult res;
  res.xi = xi;

  // Dual route: minimize the convex piecewise-linear dual over
  // [0, lambda_max] by golden section, tracking the best evaluated point.
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0;
  double b = lambda_max;
  double best_lambda = 0.0;
  double best_value = std::numeric_limits<double>::infinity();
  auto eval = [&](double lam) -> double {
    const double val = dual_function(mdp, lam, xi, vc_normalized).value;
    if (val < best_value) {
      best_value = val;
      best_lambda = lam;
    }
    return val;
  };
  eval(a);
  eval(b);
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = eval(x1);
  double f2 = eval(x2);
  while (b - a > 1e-10) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = eval(x2);
    }
  }
  res.lambda_star = best_lambda;
  res.d_tilde_star = best_value;

  // Primal route: best mixture of at most two deterministic policies with
  // alpha chosen in closed form so the constraint is tight.
  const auto& hull = frontier.hull;
  if (xi > frontier.vc_max) {
    res.feasible = false;
    res.p_tilde_star = -std::numeric_limits<double>::infinity();
    return res;
  }
  double best_p = -std::numeric_limits<double>::infinity();
  for (const auto& pt : hull) {
    if (pt.vc >= xi && pt.v > best_p) {
      best_p = pt.v;
      res.mix_a = pt.pol;
      res.mix_b = pt.pol;
      res.alpha = 1.0;
    }
  }
  for (std::size_t i = 0; i < hull.size(); ++i) {
    if (hull[i].vc >= xi) continue;
    for (std::size_t j = 0; j < hull.size(); ++j) {
      if (hull[j].vc < xi) continue;
      // alpha * vc_i + (1 - alpha) * vc_j = xi
      const double alpha = (hull[j].vc - xi) / (hull[j].vc - hull[i].vc);
      const double val = alpha * hull[i].v + (1.0 - alpha) * hull[j].v;
      if (val > best_p) {
        best_p = val;
        res.mix_a = hull[i].pol;
        res.mix_b = hull[j].pol;
        res.alpha = alpha;
      }
    }
  }
  res.p_tilde_star = best_p;
  return res;
}

inline DualResult dual_optimum(const TabularMdp& mdp, double xi,
                               double lambda_max = 1e3,
                               bool vc_normalized = true) {
  return dual_optimum(mdp, policy_frontier(mdp, vc_normalized), xi,
                      lambda_max, vc_normalized);
}

struct DualBoundCheck {
  bool holds = false;
  double slack = 0.0;
};

// P*(xi1) <= P*(xi0) + lambda*(xi0) (xi0 - xi1); slack is rhs - lhs.
inline DualBoundCheck check_dual_bound(const TabularMdp& mdp,
                                       const PolicyFrontier& frontier,
                                       double xi0, double xi1,
                                       double lambda_max = 1e3,
                                       bool vc_normalized = true) {
  const DualResult r0 =
      dual_optimum(mdp, frontier, xi0, lambda_max, vc_normalized);
  const DualResult r1 =
      dual_optimum(mdp, frontier, xi1, lambda_max, vc_normalized);
  if (!r0.feasible || !r1.feasible) {
    throw std::domain_error("check_dual_bound: infeasible constraint level");
  }
  DualBoundCheck out;
  out.slack =
      r0.p_tilde_star + r0.lambda_star * (xi0 - xi1) - r1.p_tilde_star;
  out.holds = out.slack >= -1e-9;
  return out;
}

inline DualBoundCheck check_dual_bound(const TabularMdp& mdp, double xi0,
                                       double xi1, double lambda_max = 1e3,
                                       bool vc_normalized = true) {
  return check_dual_bound(mdp, policy_frontier(mdp, vc_normalized), xi0, xi1,
                          lambda_max, vc_normalized);
}

}  // namespace safepg
