#include <catch2/catch_amalgamated.hpp>
#include <filesystem>

#include "safepg/sweep.hpp"

using namespace safepg;

namespace {

SweepRecord rec(Formulation f, double w, std::uint64_t seed, double safety,
                double ret) {
  SweepRecord r;
  r.formulation = f;
  r.weight = w;
  r.seed = seed;
  r.train_episodes = 100;
  r.eval_episodes = 50;
  r.safety_rate = safety;
  r.mean_return = ret;
  r.wall_seconds = 0.0;
  return r;
}

struct PullPolicy {
  Vec2 target;
  Vec2 sample_action(Vec2 s, RngStream&) const {
    return 5.0 * (target - s);
  }
};

}  // namespace

TEST_CASE("evaluate: always-safe policy scores a safety rate of one") {
  NavEnvConfig env;
  env.obstacles.clear();
  RngStream rng(61, 0);
  const RbfGaussianPolicy policy;  // zero mean everywhere
  const EvalResult ev = evaluate(policy, env, 50, rng);
  CHECK(ev.safety_rate == 1.0);
  CHECK(ev.mean_return < 0.0);
  CHECK_THROWS_AS(evaluate(policy, env, 0, rng), std::invalid_argument);
}

TEST_CASE("evaluate counts joint safety, not per-step averages") {
  NavEnvConfig env;
  env.obstacles = {{{5.0, 5.0}, 1.0}};
  // Every episode is pulled into the obstacle, so each one ends unsafe even
  // though most of its steps are safe.
  const PullPolicy policy{{5.0, 5.0}};
  RngStream rng(62, 0);
  const EvalResult ev = evaluate(policy, env, 40, rng);
  CHECK(ev.safety_rate == 0.0);
}

TEST_CASE("evaluations concentrate across disjoint streams") {
  const NavEnvConfig env;
  RbfGaussianPolicy::Options opt;
  opt.spacing = 2.5;
  const RbfGaussianPolicy policy(opt);
  const int n = 300;
  const int pairs = 100;
  int within = 0;
  double pooled = 0.0;
  std::vector<std::pair<double, double>> rates;
  for (int i = 0; i < pairs; ++i) {
    RngStream r1(63, 2 * static_cast<std::uint64_t>(i));
    RngStream r2(63, 2 * static_cast<std::uint64_t>(i) + 1);
    const double p1 = evaluate(policy, env, n, r1).safety_rate;
    const double p2 = evaluate(policy, env, n, r2).safety_rate;
    rates.emplace_back(p1, p2);
    pooled += p1 + p2;
  }
  pooled /= 2.0 * pairs;
  // Difference of two independent estimates: sd = sqrt(2 p (1-p) / n).
  const double bound = 3.0 * std::sqrt(2.0 * pooled * (1.0 - pooled) / n);
  for (const auto& [p1, p2] : rates) {
    if (std::abs(p1 - p2) < bound) ++within;
  }
  CHECK(within >= 98);  // ~99.7% expected
}

TEST_CASE("pareto front on hand-built records") {
  const auto a = rec(Formulation::probabilistic, 1.0, 1, 0.9, -100.0);
  CHECK(pareto_front({a}) == std::vector<SweepRecord>{a});

  const auto dominated = rec(Formulation::probabilistic, 2.0, 1, 0.8, -150.0);
  CHECK(pareto_front({a, dominated}) == std::vector<SweepRecord>{a});

  // Incomparable records both stay.
  const auto safer = rec(Formulation::probabilistic, 3.0, 1, 0.95, -200.0);
  CHECK(pareto_front({a, safer}).size() == 2);

  // Records from different formulations never dominate each other.
  const auto other = rec(Formulation::cumulative, 1.0, 1, 0.8, -150.0);
  CHECK(pareto_front({a, other}).size() == 2);

  // Exact duplicates collapse to the lowest weight, then lowest seed.
  const auto dup_hi = rec(Formulation::probabilistic, 5.0, 2, 0.9, -100.0);
  const auto dup_lo = rec(Formulation::probabilistic, 5.0, 1, 0.9, -100.0);
  const auto front = pareto_front({dup_hi, a, dup_lo});
  REQUIRE(front.size() == 1);
  CHECK(front[0] == a);

  // Output is always a subset of the input and mutually non-dominated.
  const auto mixed = pareto_front({a, dominated, safer, other, dup_hi});
  for (const auto& r : mixed) {
    for (const auto& s : mixed) {
      if (r.formulation != s.formulation) continue;
      const bool strictly_dominates =
          r.safety_rate >= s.safety_rate && r.mean_return >= s.mean_return &&
          (r.safety_rate > s.safety_rate || r.mean_return > s.mean_return);
      REQUIRE_FALSE(strictly_dominates);
    }
  }
}

TEST_CASE("sweep csv round-trips exactly") {
  std::vector<SweepRecord> records;
  records.push_back(rec(Formulation::probabilistic, 0.45, 1, 0.625,
                        -1234.5678901234567));
  records.push_back(rec(Formulation::cumulative, 14.0, 3, 0.002,
                        -0.12345678901234567));
  records[1].wall_seconds = 1.5;

  const std::string text = format_sweep_csv(records);
  const auto back = parse_sweep_csv(text, "<memory>");
  REQUIRE(back.size() == records.size());
  CHECK(back[0] == records[0]);
  CHECK(back[1] == records[1]);

  CHECK(format_sweep_csv({}) ==
        "formulation,weight,seed,train_episodes,eval_episodes,safety_rate,"
        "mean_return,wall_seconds\n");

  CHECK_THROWS(parse_sweep_csv("", "<memory>"));
  CHECK_THROWS(parse_sweep_csv(
      "formulation,weight,seed,train_episodes,eval_episodes,safety_rate,"
      "mean_return,wall_seconds\nbogus,1,1,1,1,0.5,0\n",
      "<memory>"));
}

TEST_CASE("svg output is deterministic and self-contained") {
  std::vector<SweepRecord> records;
  records.push_back(rec(Formulation::probabilistic, 6.0, 1, 0.8, -500.0));
  records.push_back(rec(Formulation::cumulative, 6.0, 1, 0.7, -450.0));
  const std::string a = format_sweep_svg(records);
  const std::string b = format_sweep_svg(records);
  CHECK(a == b);
  CHECK(a.find("<svg") != std::string::npos);
  CHECK(a.find("safety rate") != std::string::npos);
  CHECK(a.find("mean return") != std::string::npos);
  CHECK(a.find("probabilistic") != std::string::npos);
  CHECK(a.find("cumulative") != std::string::npos);
  CHECK(a.find("http") != std::string::npos);  // xmlns only
  CHECK(a.find("href") == std::string::npos);  // no external resources
  CHECK(format_sweep_svg({}).find("<svg") != std::string::npos);
}

TEST_CASE("tiny end-to-end sweep is deterministic and well-shaped") {
  NavEnvConfig env;
  SweepOptions opt;
  opt.weights = {0.5, 5.0};
  opt.seeds = {1, 2};
  opt.train_episodes = 5;
  opt.eval_episodes = 5;

  TrainConfig tmpl;
  tmpl.log_every = 1000;
  const SweepOutcome a = sweep(opt, tmpl, env, 99);
  REQUIRE(a.failures.empty());
  REQUIRE(a.records.size() == 8);  // 2 formulations x 2 weights x 2 seeds

  // Deterministic ordering: probabilistic first, then weight, then seed.
  CHECK(a.records[0].formulation == Formulation::probabilistic);
  CHECK(a.records[0].weight == 0.5);
  CHECK(a.records[0].seed == 1);
  CHECK(a.records[7].formulation == Formulation::cumulative);
  CHECK(a.records[7].weight == 5.0);
  CHECK(a.records[7].seed == 2);

  // Replay equality, including across a different job count.
  const SweepOutcome b = sweep(opt, tmpl, env, 99);
  SweepOptions par = opt;
  par.jobs = 4;
  const SweepOutcome c = sweep(par, tmpl, env, 99);
  REQUIRE(b.records.size() == a.records.size());
  REQUIRE(c.records.size() == a.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    REQUIRE(a.records[i] == b.records[i]);
    REQUIRE(a.records[i] == c.records[i]);
  }
}

TEST_CASE("spearman rank correlation") {
  CHECK(spearman_rank_correlation({1, 2, 3, 4}, {10, 20, 30, 40}) == 1.0);
  CHECK(spearman_rank_correlation({1, 2, 3, 4}, {9, 7, 5, 3}) == -1.0);
  // Ties get average ranks.
  const double rho = spearman_rank_correlation({1, 1, 2, 2}, {1, 2, 3, 4});
  CHECK_THAT(rho, Catch::Matchers::WithinAbs(0.894427190999916, 1e-12));
  CHECK_THROWS_AS(spearman_rank_correlation({1}, {2}),
                  std::invalid_argument);
}

TEST_CASE("matched safety bands pair the formulations") {
  std::vector<SweepRecord> records;
  records.push_back(rec(Formulation::probabilistic, 1, 1, 0.41, -100));
  records.push_back(rec(Formulation::probabilistic, 2, 1, 0.43, -120));
  records.push_back(rec(Formulation::cumulative, 1, 1, 0.42, -130));
  records.push_back(rec(Formulation::cumulative, 2, 1, 0.95, -300));

  const auto bands = matched_safety_bands(records);
  REQUIRE(bands.size() == 1);  // only the 0.40-0.44 band holds both
  CHECK(bands[0].prob_count == 2);
  CHECK(bands[0].cum_count == 1);
  CHECK_THAT(bands[0].prob_mean_return,
             Catch::Matchers::WithinAbs(-110.0, 1e-12));
  CHECK_THAT(bands[0].cum_mean_return,
             Catch::Matchers::WithinAbs(-130.0, 1e-12));
}
