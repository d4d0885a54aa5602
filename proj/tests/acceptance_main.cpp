// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Spawns the CLI binary for the exit-code and byte-determinism criteria and
// runs everything else in process.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "safepg/checks.hpp"
#include "safepg/config.hpp"
#include "safepg/oracle.hpp"
#include "safepg/rbf_policy.hpp"
#include "safepg/sweep.hpp"
#include "safepg/trainer.hpp"

namespace fs = std::filesystem;
using namespace safepg;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int criterion, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[%d] %-28s %s  (%s)\n", criterion, name.c_str(),
              pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(SAFEPG_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return "<missing:" + p.string() + ">";
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

// Criteria 1 and 2: estimator unbiasedness and the gradient recursion on 25
// random tabular instances, plus the gradcheck command's exit code.
void criteria_estimator_and_recursion() {
  const auto t0 = Clock::now();
  GradCheckOptions opt;  // 25 instances, manifest seed
  const GradCheckReport rep = run_gradcheck(opt);
  const double elapsed = seconds_since(t0);
  const int cli_exit = run_cli("gradcheck --out acceptance_artifacts/gradcheck");

  const bool pass1 = rep.max_estimator_rel_err < 1e-6 && elapsed < 10.0 &&
                     cli_exit == 0;
  report(1, "estimator-unbiasedness", pass1,
         fmt("max rel err %.2e < 1e-6, %d instances, %.1f s, "
             "cmd_gradcheck exit %d",
             rep.max_estimator_rel_err, opt.instances, elapsed, cli_exit));

  const bool pass2 = rep.max_recursion_diff < 1e-9;
  report(2, "gradient-recursion", pass2,
         fmt("max abs diff %.2e < 1e-9 over all stages",
             rep.max_recursion_diff));
}

// Criterion 3: feasible-set inclusions and the Markov step on 1e4 triples.
void criterion_feasibility() {
  const auto t0 = Clock::now();
  LemmaCheckOptions opt;
  opt.feasibility_samples = 10000;
  opt.dual_instances = 0;
  const LemmaCheckReport rep = run_lemmacheck(opt);
  const double elapsed = seconds_since(t0);
  const bool nonvacuous =
      rep.hat_members > 0 && rep.f_members > 0 && rep.fbar_members > 0;
  const bool pass = rep.inclusion_violations == 0 &&
                    rep.markov_violations == 0 && nonvacuous &&
                    elapsed < 30.0;
  report(3, "feasible-set-inclusions", pass,
         fmt("%ld samples, %ld inclusion / %ld markov violations, members "
             "%ld/%ld/%ld, %.1f s",
             rep.feasibility_samples, rep.inclusion_violations,
             rep.markov_violations, rep.hat_members, rep.f_members,
             rep.fbar_members, elapsed));
}

// Criterion 4: dual bound, duality gap, monotone and concave P* on a grid.
void criterion_dual_bound() {
  const auto t0 = Clock::now();
  LemmaCheckOptions opt;
  opt.feasibility_samples = 0;
  opt.dual_instances = 10;
  const LemmaCheckReport rep = run_lemmacheck(opt);
  const bool pass = rep.min_bound_slack >= -1e-9 &&
                    rep.max_duality_gap < 1e-8 &&
                    rep.worst_monotonicity <= 1e-9 &&
                    rep.worst_concavity <= 1e-9;
  report(4, "dual-bound", pass,
         fmt("min slack %.2e >= -1e-9, max gap %.2e < 1e-8, monotone %.2e, "
             "concave %.2e, %d/%d cells feasible, %.1f s",
             rep.min_bound_slack, rep.max_duality_gap,
             rep.worst_monotonicity, rep.worst_concavity,
             rep.dual_cells - rep.infeasible_cells, rep.dual_cells,
             seconds_since(t0)));
}

// Criterion 5: analytic scores against central finite differences of the
// log density, both policy families, 100 random points each.
void criterion_score_correctness() {
  const auto t0 = Clock::now();
  RngStream rng(20240905, 0);

  double worst = 0.0;
  RbfGaussianPolicy::Options opt;
  opt.spacing = 0.5;
  RbfGaussianPolicy p(opt);
  for (double& w : p.params()) w = 0.5 * rng.normal();
  const double h = 1e-5;
  for (int i = 0; i < 100; ++i) {
    const Vec2 s{10.0 * rng.uniform(), 10.0 * rng.uniform()};
    const Vec2 m = p.mean(s);
    const Vec2 a{m.x + 2.0 * rng.normal(), m.y + 2.0 * rng.normal()};
    const GradientVector analytic = p.score(s, a);
    GradientVector fd(p.param_count());
    for (std::size_t k = 0; k < p.param_count(); ++k) {
      const double saved = p.params()[k];
      p.params()[k] = saved + h;
      const double up = p.log_prob(s, a);
      p.params()[k] = saved - h;
      const double down = p.log_prob(s, a);
      p.params()[k] = saved;
      fd[k] = (up - down) / (2.0 * h);
    }
    worst = std::max(worst, rel_err(analytic, fd));
  }

  double worst_tab = 0.0;
  for (int i = 0; i < 100; ++i) {
    const TabularMdp mdp = random_mdp(rng);
    SoftmaxTabularPolicy pol = random_policy(mdp, rng);
    const int s = uniform_int(rng, 0, mdp.n_states - 1);
    const int a = uniform_int(rng, 0, mdp.n_actions - 1);
    const int t = uniform_int(rng, 0, mdp.horizon - 1);
    const GradientVector analytic = pol.score(s, a, t);
    GradientVector fd(pol.param_count());
    for (std::size_t k = 0; k < pol.param_count(); ++k) {
      const double saved = pol.params()[k];
      pol.params()[k] = saved + h;
      const double up = std::log(pol.prob(s, a, t));
      pol.params()[k] = saved - h;
      const double down = std::log(pol.prob(s, a, t));
      pol.params()[k] = saved;
      fd[k] = (up - down) / (2.0 * h);
    }
    worst_tab = std::max(worst_tab, rel_err(analytic, fd));
  }

  const bool pass = worst < 1e-6 && worst_tab < 1e-6;
  report(5, "score-correctness", pass,
         fmt("gaussian max rel err %.2e, tabular %.2e, 100 points each, "
             "%.1f s",
             worst, worst_tab, seconds_since(t0)));
}

// Criterion 6: desk-scale sweep over both formulations.
void criterion_desk_sweep() {
  const auto t0 = Clock::now();
  SweepOptions opt;
  opt.weights = {0.45, 1.5, 6.0, 14.0};
  opt.seeds = {1, 2, 3};
  opt.train_episodes = 10000;
  opt.eval_episodes = 500;
  const unsigned hw = std::thread::hardware_concurrency();
  opt.jobs = static_cast<int>(hw == 0 ? 1 : std::min(hw, 8u));

  TrainConfig tmpl;  // paper defaults: eta 0.002, batch 1, fixed start
  const NavEnvConfig env;
  const SweepOutcome outcome = sweep(opt, tmpl, env, 20240906);

  fs::create_directories("acceptance_artifacts");
  emit_csv(outcome.records, "acceptance_artifacts/sweep.csv");
  emit_svg_scatter(outcome.records, "acceptance_artifacts/pareto.svg");

  bool pass = outcome.failures.empty() && outcome.records.size() == 24;

  double rho_prob = 0.0, rho_cum = 0.0;
  for (Formulation f : {Formulation::probabilistic, Formulation::cumulative}) {
    std::vector<double> w, s;
    for (const SweepRecord& r : outcome.records) {
      if (r.formulation == f) {
        w.push_back(r.weight);
        s.push_back(r.safety_rate);
      }
    }
    const double rho = spearman_rank_correlation(w, s);
    (f == Formulation::probabilistic ? rho_prob : rho_cum) = rho;
    if (rho <= 0.5) pass = false;
  }

  const auto bands = matched_safety_bands(outcome.records);
  int strictly_greater = 0;
  for (const SafetyBand& b : bands) {
    if (b.prob_mean_return < b.cum_mean_return - 1.0) pass = false;
    if (b.prob_mean_return > b.cum_mean_return) ++strictly_greater;
  }
  if (2 * strictly_greater < static_cast<int>(bands.size())) pass = false;

  const double elapsed = seconds_since(t0);
  if (elapsed >= 1800.0) pass = false;
  report(6, "desk-scale-sweep", pass,
         fmt("spearman prob %.2f / cum %.2f (> 0.5), %zu matched bands, "
             "%d strictly better, %zu cells, %.0f s",
             rho_prob, rho_cum, bands.size(), strictly_greater,
             outcome.records.size(), elapsed));
}

// Criterion 7: byte-identical replays from resolved_config.txt.
void criterion_determinism() {
  const auto t0 = Clock::now();
  const fs::path root = "acceptance_artifacts/determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string a = (root / "a").string();
  const std::string b = (root / "b").string();

  bool pass = true;
  pass &= run_cli("train --episodes 40 --seed 13 --out " + a) == 0;
  pass &= run_cli("train --config " + a + "/resolved_config.txt --out " + b) ==
          0;
  pass &= slurp(a + "/train_log.csv") == slurp(b + "/train_log.csv");
  pass &= slurp(a + "/checkpoint.txt") == slurp(b + "/checkpoint.txt");
  pass &= slurp(a + "/resolved_config.txt") == slurp(b + "/resolved_config.txt");

  const std::string ea = (root / "ea").string();
  const std::string eb = (root / "eb").string();
  pass &= run_cli("evaluate --episodes 50 --seed 9 --checkpoint " + a +
                  "/checkpoint.txt --out " + ea) == 0;
  pass &= run_cli("evaluate --config " + ea +
                  "/resolved_config.txt --checkpoint " + a +
                  "/checkpoint.txt --out " + eb) == 0;
  pass &= slurp(ea + "/eval.csv") == slurp(eb + "/eval.csv");

  std::ofstream conf(root / "sweep.ini");
  conf << "[sweep]\nweights = 0.45,6\nseeds = 1\ntrain_episodes = 15\n"
          "eval_episodes = 10\n";
  conf.close();
  const std::string sa = (root / "sa").string();
  const std::string sb = (root / "sb").string();
  pass &= run_cli("sweep --config " + (root / "sweep.ini").string() +
                  " --seed 4 --out " + sa) == 0;
  pass &= run_cli("sweep --config " + sa + "/resolved_config.txt --out " +
                  sb) == 0;
  pass &= slurp(sa + "/sweep.csv") == slurp(sb + "/sweep.csv");
  pass &= slurp(sa + "/pareto.svg") == slurp(sb + "/pareto.svg");

  report(7, "determinism", pass,
         fmt("train/evaluate/sweep replayed byte-identically, %.1f s",
             seconds_since(t0)));
}

}  // namespace

int main() {
  std::printf("acceptance suite (cli: %s)\n", SAFEPG_CLI_PATH);
  criteria_estimator_and_recursion();
  criterion_feasibility();
  criterion_dual_bound();
  criterion_score_correctness();
  criterion_desk_sweep();
  criterion_determinism();
  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", g_failures);
  return 1;
}
