#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "safepg/dual.hpp"
#include "safepg/feasibility.hpp"
#include "safepg/oracle.hpp"
#include "safepg/random_instances.hpp"
#include "safepg/rng.hpp"
#include "safepg/tabular_mdp.hpp"

namespace safepg {

// ---------------------------------------------------------------------------
// Gradient checks: exact estimator expectations against central finite
// differences of the enumeration oracle, plus the one-step recursion.

struct GradCheckRow {
  int instance = 0;
  int n_states = 0;
  int horizon = 0;
  double safety_rel_err = 0.0;
  double value_rel_err = 0.0;
  double recursion_max_diff = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  double max_estimator_rel_err = 0.0;
  double max_recursion_diff = 0.0;
  bool pass = false;
  std::string counterexample;  // serialized offending instance, if any

  static constexpr double kEstimatorTol = 1e-6;
  static constexpr double kRecursionTol = 1e-9;
};

struct GradCheckOptions {
  int instances = 25;
  std::uint64_t seed = 20240901;
  double fd_step = 1e-4;
  bool corrupt_estimator = false;  // negative-control hook
};

inline GradCheckReport run_gradcheck(const GradCheckOptions& opt) {
  GradCheckReport report;
  RngStream rng(opt.seed, 0);
  for (int i = 0; i < opt.instances; ++i) {
    const TabularMdp mdp = random_mdp(rng);
    const SoftmaxTabularPolicy policy = random_policy(mdp, rng);
    const double mu = 2.0 * rng.uniform();
    const bool terminal_bonus = rng.uniform() < 0.5;

    GradCheckRow row;
    row.instance = i;
    row.n_states = mdp.n_states;
    row.horizon = mdp.horizon;

    GradientVector est_safety =
        exact_estimator_expectation(mdp, policy, EstimatorKind::safety);
    if (opt.corrupt_estimator) est_safety.scale(1.0 + 1e-3);
    const GradientVector fd_safety =
        finite_diff_grad(mdp, policy, ExactTarget::safety_prob, opt.fd_step);
    row.safety_rel_err = rel_err(est_safety, fd_safety);

    const GradientVector est_value = exact_estimator_expectation(
        mdp, policy, EstimatorKind::value, mu, terminal_bonus);
    const GradientVector fd_value = finite_diff_grad(
        mdp, policy, ExactTarget::value, opt.fd_step, mu, terminal_bonus);
    row.value_rel_err = rel_err(est_value, fd_value);

    for (int t = 1; t <= mdp.horizon - 1; ++t) {
      row.recursion_max_diff = std::max(
          row.recursion_max_diff, verify_recursion(mdp, policy, t).max_abs_diff);
    }

    report.max_estimator_rel_err =
        std::max({report.max_estimator_rel_err, row.safety_rel_err,
                  row.value_rel_err});
    report.max_recursion_diff =
        std::max(report.max_recursion_diff, row.recursion_max_diff);
    if ((row.safety_rel_err >= GradCheckReport::kEstimatorTol ||
         row.value_rel_err >= GradCheckReport::kEstimatorTol ||
         row.recursion_max_diff >= GradCheckReport::kRecursionTol) &&
        report.counterexample.empty()) {
      report.counterexample = format_tabular_mdp(mdp);
    }
    report.rows.push_back(row);
  }
  report.pass =
      report.max_estimator_rel_err < GradCheckReport::kEstimatorTol &&
      report.max_recursion_diff < GradCheckReport::kRecursionTol;
  return report;
}

// ---------------------------------------------------------------------------
// Lemma checks: nested feasible sets on random (mdp, policy, delta) triples
// and the dual bound / duality gap / concavity sweep on a constraint grid.

struct LemmaCheckOptions {
  long feasibility_samples = 10000;
  int dual_instances = 10;
  int xi_grid_points = 11;  // uniform grid on [0, 1], endpoints included
  double lambda_max = 1e3;
  std::uint64_t seed = 20240902;
  bool vc_normalized = true;
};

struct LemmaCheckReport {
  long feasibility_samples = 0;
  long inclusion_violations = 0;
  long markov_violations = 0;
  long hat_members = 0;
  long f_members = 0;
  long fbar_members = 0;

  int dual_cells = 0;
  int infeasible_cells = 0;
  double min_bound_slack = 0.0;
  double max_duality_gap = 0.0;
  double worst_monotonicity = 0.0;  // max increase of P* along the grid
  double worst_concavity = 0.0;     // max chord-over-midpoint excess

  bool pass = false;
  std::string counterexample;

  static constexpr double kSlackTol = -1e-9;
  static constexpr double kGapTol = 1e-8;
  static constexpr double kShapeTol = 1e-9;
};

inline LemmaCheckReport run_lemmacheck(const LemmaCheckOptions& opt) {
  LemmaCheckReport report;
  report.feasibility_samples = opt.feasibility_samples;

  RngStream rng(opt.seed, 0);
  for (long i = 0; i < opt.feasibility_samples; ++i) {
    InstanceOptions gen;
    gen.safety_biased = (i % 2 == 0);
    const TabularMdp mdp = random_mdp(rng, gen);
    const SoftmaxTabularPolicy policy = random_policy(mdp, rng);
    const double delta = rng.uniform();
    const FeasibilityVerdict v = feasibility_verdict(mdp, policy, delta);
    report.hat_members += v.in_F_hat ? 1 : 0;
    report.f_members += v.in_F ? 1 : 0;
    report.fbar_members += v.in_F_bar ? 1 : 0;
    const bool inclusion_ok =
        (!v.in_F_hat || v.in_F) && (!v.in_F || v.in_F_bar);
    // E[sum 1(safe)] >= P(all safe) * (T+1), the Markov step.
    const bool markov_ok = v.v_c >= v.p_joint - 1e-12;
    if (!inclusion_ok) ++report.inclusion_violations;
    if (!markov_ok) ++report.markov_violations;
    if ((!inclusion_ok || !markov_ok) && report.counterexample.empty()) {
      report.counterexample = format_tabular_mdp(mdp);
    }
  }

  RngStream dual_rng(opt.seed, 1);
  for (int i = 0; i < opt.dual_instances; ++i) {
    const TabularMdp mdp =
        random_mdp_for_dual(dual_rng, 100.0, opt.vc_normalized);
    const PolicyFrontier frontier = policy_frontier(mdp, opt.vc_normalized);

    std::vector<double> xis;
    std::vector<DualResult> results;
    for (int k = 0; k < opt.xi_grid_points; ++k) {
      const double xi =
          static_cast<double>(k) / (opt.xi_grid_points - 1);
      ++report.dual_cells;
      if (xi > frontier.vc_max) {
        ++report.infeasible_cells;
        continue;
      }
      const DualResult r =
          dual_optimum(mdp, frontier, xi, opt.lambda_max, opt.vc_normalized);
      const double gap = std::abs(r.p_tilde_star - r.d_tilde_star);
      report.max_duality_gap = std::max(report.max_duality_gap, gap);
      if (gap >= LemmaCheckReport::kGapTol && report.counterexample.empty()) {
        report.counterexample = format_tabular_mdp(mdp);
      }
      xis.push_back(xi);
      results.push_back(r);
    }

    for (std::size_t a = 0; a < results.size(); ++a) {
      for (std::size_t b = 0; b < results.size(); ++b) {
        if (a == b) continue;
        const double slack = results[a].p_tilde_star +
                             results[a].lambda_star * (xis[a] - xis[b]) -
                             results[b].p_tilde_star;
        report.min_bound_slack = std::min(report.min_bound_slack, slack);
        if (slack < LemmaCheckReport::kSlackTol &&
            report.counterexample.empty()) {
          report.counterexample = format_tabular_mdp(mdp);
        }
      }
    }
    for (std::size_t a = 0; a + 1 < results.size(); ++a) {
      report.worst_monotonicity =
          std::max(report.worst_monotonicity,
                   results[a + 1].p_tilde_star - results[a].p_tilde_star);
    }
    // Midpoint concavity on consecutive uniformly spaced feasible triples.
    for (std::size_t a = 0; a + 2 < results.size(); ++a) {
      if (std::abs((xis[a + 2] - xis[a + 1]) - (xis[a + 1] - xis[a])) > 1e-12) {
        continue;
      }
      const double chord =
          0.5 * (results[a].p_tilde_star + results[a + 2].p_tilde_star);
      report.worst_concavity = std::max(
          report.worst_concavity, chord - results[a + 1].p_tilde_star);
    }
  }

  report.pass = report.inclusion_violations == 0 &&
                report.markov_violations == 0 &&
                report.min_bound_slack >= LemmaCheckReport::kSlackTol &&
                report.max_duality_gap < LemmaCheckReport::kGapTol &&
                report.worst_monotonicity <= LemmaCheckReport::kShapeTol &&
                report.worst_concavity <= LemmaCheckReport::kShapeTol;
  return report;
}

}  // namespace safepg
