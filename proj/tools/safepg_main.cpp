// Command-line front end: train / evaluate / sweep are the experiment
// pipeline, gradcheck / lemmacheck drive the exact tabular oracle.
//
// Exit codes: 0 success, 1 usage or validation error, 2 runtime failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "safepg/checks.hpp"
#include "safepg/config.hpp"
#include "safepg/nav2d.hpp"
#include "safepg/rbf_policy.hpp"
#include "safepg/sweep.hpp"
#include "safepg/trainer.hpp"

namespace fs = std::filesystem;
using namespace safepg;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> formulation;
  std::optional<double> weight;
  std::optional<int> episodes;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_train_flags) {
  cmd->add_option("--config", args.config_path, "configuration file (INI)");
  cmd->add_option("--out", args.out_dir, "output directory")
      ->capture_default_str();
  cmd->add_option("--seed", args.seed, "master seed (overrides file)");
  if (with_train_flags) {
    cmd->add_option("--formulation", args.formulation,
                    "probabilistic|cumulative (or prob|cum)");
    cmd->add_option("--weight", args.weight, "lambda or mu (> 0)");
    cmd->add_option("--episodes", args.episodes, "episode/iteration count");
  }
}

// Flag overrides beat file values beat defaults; SAFEPG_SEED is the
// last-resort seed default.
RunConfig resolve_config(const CommonArgs& args, bool episodes_are_eval,
                         bool episodes_are_sweep) {
  RunConfig cfg;
  if (!args.config_path.empty()) {
    cfg = parse_config(args.config_path);
  }
  if (args.formulation) {
    cfg_detail::Context ctx;
    ctx.file = "<flag --formulation>";
    cfg.train.formulation = cfg_detail::parse_formulation(ctx, *args.formulation);
  }
  if (args.weight) cfg.train.weight = *args.weight;
  if (args.episodes) {
    if (episodes_are_eval) {
      cfg.eval.episodes = *args.episodes;
    } else if (episodes_are_sweep) {
      cfg.sweep.train_episodes = *args.episodes;
    } else {
      cfg.train.episodes = *args.episodes;
    }
  }
  if (args.seed) {
    cfg.train.seed = *args.seed;
    cfg.seed_set = true;
  } else if (!cfg.seed_set) {
    if (const char* env_seed = std::getenv("SAFEPG_SEED")) {
      cfg.train.seed = std::strtoull(env_seed, nullptr, 10);
      cfg.seed_set = true;
    }
  }
  validate_config(cfg);
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

fs::path prepare_out_dir(const CommonArgs& args, const RunConfig& cfg) {
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  write_text(dir / "resolved_config.txt", format_config(cfg));
  return dir;
}

std::string format_train_log_csv(const std::vector<TrainLogRow>& rows) {
  std::string out = "iter,episode_return,joint_safe,grad_norm,wall_ms\n";
  char buf[200];
  for (const TrainLogRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", r.iter,
                  r.episode_return, r.joint_safe, r.grad_norm, r.wall_ms);
    out += buf;
  }
  return out;
}

int cmd_train(const CommonArgs& args) {
  const RunConfig cfg = resolve_config(args, false, false);
  const fs::path dir = prepare_out_dir(args, cfg);

  RbfGaussianPolicy policy(cfg.policy);
  TrainResult result = train(cfg.train, cfg.env, std::move(policy),
                             RngStream(cfg.train.seed, 0),
                             cfg.output.real_timing);
  write_text(dir / "train_log.csv", format_train_log_csv(result.log));
  result.policy.save((dir / "checkpoint.txt").string());
  if (result.aborted) {
    std::cerr << "training aborted: " << result.abort_reason
              << " (partial checkpoint retained)\n";
    return 2;
  }
  if (!result.log.empty()) {
    std::cout << "trained " << cfg.train.episodes << " episodes ("
              << formulation_name(cfg.train.formulation)
              << ", weight=" << cfg.train.weight
              << "); last logged return=" << result.log.back().episode_return
              << "\n";
  }
  std::cout << "wrote " << (dir / "train_log.csv").string() << " and "
            << (dir / "checkpoint.txt").string() << "\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& checkpoint) {
  const RunConfig cfg = resolve_config(args, true, false);
  const fs::path dir = prepare_out_dir(args, cfg);

  RbfGaussianPolicy policy = checkpoint.empty()
                                 ? RbfGaussianPolicy(cfg.policy)
                                 : RbfGaussianPolicy::load(checkpoint);
  RngStream rng(cfg.train.seed, 1);
  const EvalResult ev = evaluate(policy, cfg.env, cfg.eval.episodes, rng);

  char buf[160];
  std::snprintf(buf, sizeof(buf), "episodes,safety_rate,mean_return\n%d,%.17g,%.17g\n",
                cfg.eval.episodes, ev.safety_rate, ev.mean_return);
  write_text(dir / "eval.csv", buf);
  std::cout << "evaluated " << cfg.eval.episodes
            << " episodes: safety_rate=" << ev.safety_rate
            << " mean_return=" << ev.mean_return << "\n";
  return 0;
}

int cmd_sweep(const CommonArgs& args, std::optional<int> jobs) {
  RunConfig cfg = resolve_config(args, false, true);
  if (jobs) cfg.sweep.jobs = *jobs;
  if (args.formulation) {
    cfg.sweep.formulations = {cfg.train.formulation};
  }
  if (args.weight) {
    cfg.sweep.weights = {*args.weight};
  }
  validate_config(cfg);
  const fs::path dir = prepare_out_dir(args, cfg);

  const SweepOutcome outcome = sweep(cfg.sweep, cfg.train, cfg.env,
                                     cfg.train.seed, cfg.output.real_timing);
  emit_csv(outcome.records, (dir / "sweep.csv").string());
  emit_svg_scatter(outcome.records, (dir / "pareto.svg").string());
  std::cout << "sweep finished: " << outcome.records.size() << " cells, "
            << outcome.failures.size() << " failures\n";
  for (const SweepFailure& f : outcome.failures) {
    std::cerr << "cell " << f.cell << " failed: " << f.message << "\n";
  }
  std::cout << "wrote " << (dir / "sweep.csv").string() << " and "
            << (dir / "pareto.svg").string() << "\n";
  return outcome.failures.empty() ? 0 : 2;
}

int cmd_gradcheck(const CommonArgs& args, std::optional<int> instances,
                  bool corrupt) {
  RunConfig cfg = resolve_config(args, false, false);
  if (instances) cfg.oracle.instances = *instances;
  validate_config(cfg);
  const fs::path dir = prepare_out_dir(args, cfg);

  GradCheckOptions opt;
  opt.instances = cfg.oracle.instances;
  opt.fd_step = cfg.oracle.fd_step;
  if (cfg.seed_set) opt.seed = cfg.train.seed;
  opt.corrupt_estimator = corrupt;

  const GradCheckReport report = run_gradcheck(opt);
  std::printf("%-9s %2s %2s   %-13s %-13s %-13s\n", "instance", "S", "T",
              "safety_relerr", "value_relerr", "recursion");
  for (const GradCheckRow& row : report.rows) {
    std::printf("%-9d %2d %2d   %-13.3e %-13.3e %-13.3e\n", row.instance,
                row.n_states, row.horizon, row.safety_rel_err,
                row.value_rel_err, row.recursion_max_diff);
  }
  std::printf("max estimator rel err: %.3e (tol %.0e)\n",
              report.max_estimator_rel_err, GradCheckReport::kEstimatorTol);
  std::printf("max recursion abs diff: %.3e (tol %.0e)\n",
              report.max_recursion_diff, GradCheckReport::kRecursionTol);
  std::printf("gradcheck: %s\n", report.pass ? "PASS" : "FAIL");
  if (!report.pass) {
    if (!report.counterexample.empty()) {
      const fs::path dump = dir / "gradcheck_counterexample.txt";
      write_text(dump, report.counterexample);
      std::cerr << "offending instance written to " << dump.string() << "\n";
    }
    return 2;
  }
  return 0;
}

int cmd_lemmacheck(const CommonArgs& args, std::optional<long> samples) {
  RunConfig cfg = resolve_config(args, false, false);
  if (samples) cfg.oracle.samples = *samples;
  validate_config(cfg);
  const fs::path dir = prepare_out_dir(args, cfg);

  LemmaCheckOptions opt;
  opt.feasibility_samples = cfg.oracle.samples;
  opt.lambda_max = cfg.oracle.lambda_max;
  opt.vc_normalized = cfg.oracle.vc_normalized;
  if (cfg.seed_set) opt.seed = cfg.train.seed;

  const LemmaCheckReport report = run_lemmacheck(opt);
  std::printf("feasibility samples: %ld (F_hat %ld, F %ld, F_bar %ld)\n",
              report.feasibility_samples, report.hat_members,
              report.f_members, report.fbar_members);
  std::printf("inclusion violations: %ld, markov violations: %ld\n",
              report.inclusion_violations, report.markov_violations);
  std::printf("dual cells: %d (%d infeasible)\n", report.dual_cells,
              report.infeasible_cells);
  std::printf("min dual-bound slack: %.3e (tol %.0e)\n",
              report.min_bound_slack, -LemmaCheckReport::kSlackTol);
  std::printf("max duality gap: %.3e (tol %.0e)\n", report.max_duality_gap,
              LemmaCheckReport::kGapTol);
  std::printf("worst monotonicity excess: %.3e, worst concavity excess: %.3e\n",
              report.worst_monotonicity, report.worst_concavity);
  std::printf("lemmacheck: %s\n", report.pass ? "PASS" : "FAIL");
  if (!report.pass) {
    if (!report.counterexample.empty()) {
      const fs::path dump = dir / "lemmacheck_counterexample.txt";
      write_text(dump, report.counterexample);
      std::cerr << "counterexample written to " << dump.string() << "\n";
    }
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"policy-gradient learning with joint safety constraints"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, sweep_args, grad_args, lemma_args;
  std::string checkpoint;
  std::optional<int> jobs;
  std::optional<int> instances;
  std::optional<long> samples;
  bool corrupt = false;

  CLI::App* train_cmd = app.add_subcommand("train", "train one policy");
  add_common(train_cmd, train_args, true);

  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "evaluate a policy checkpoint");
  add_common(eval_cmd, eval_args, true);
  eval_cmd->add_option("--checkpoint", checkpoint,
                       "policy checkpoint to evaluate (default: zero policy)");

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "train/evaluate a weight grid");
  add_common(sweep_cmd, sweep_args, true);
  sweep_cmd->add_option("--jobs", jobs, "parallel cells (default 1)");

  CLI::App* grad_cmd = app.add_subcommand(
      "gradcheck", "estimator vs finite differences on random tabular MDPs");
  add_common(grad_cmd, grad_args, false);
  grad_cmd->add_option("--instances", instances, "number of random instances");
  grad_cmd->add_flag("--corrupt-estimator", corrupt)->group("");

  CLI::App* lemma_cmd = app.add_subcommand(
      "lemmacheck", "feasible-set inclusions and dual bound checks");
  add_common(lemma_cmd, lemma_args, false);
  lemma_cmd->add_option("--samples", samples, "feasibility sample count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_args, checkpoint);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_args, jobs);
    if (grad_cmd->parsed()) return cmd_gradcheck(grad_args, instances, corrupt);
    if (lemma_cmd->parsed()) return cmd_lemmacheck(lemma_args, samples);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
