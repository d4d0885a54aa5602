#include <catch2/catch_amalgamated.hpp>

#include "safepg/rng.hpp"
#include "safepg/trajectory.hpp"

using safepg::Trajectory;

namespace {

Trajectory<int, int> make_traj(std::vector<double> rewards,
                               std::vector<int> flags) {
  Trajectory<int, int> t;
  t.rewards = std::move(rewards);
  t.safe_flags = std::move(flags);
  t.actions.assign(t.rewards.size(), 0);
  t.states.assign(t.rewards.size() + 1, 0);
  return t;
}

Trajectory<int, int> random_traj(safepg::RngStream& rng, int horizon) {
  std::vector<double> rewards;
  std::vector<int> flags;
  for (int i = 0; i < horizon; ++i) {
    rewards.push_back(2.0 * rng.uniform() - 1.0);
    flags.push_back(rng.uniform() < 0.7 ? 1 : 0);
  }
  flags.push_back(rng.uniform() < 0.7 ? 1 : 0);
  return make_traj(std::move(rewards), std::move(flags));
}

}  // namespace

TEST_CASE("indicator tail product") {
  const auto all_safe = make_traj({0, 0, 0, 0}, {1, 1, 1, 1, 1});
  CHECK(indicator_tail_product(all_safe, 1) == 1);

  const auto mid_violation = make_traj({0, 0, 0, 0}, {1, 1, 0, 1, 1});
  CHECK(indicator_tail_product(mid_violation, 1) == 0);
  CHECK(indicator_tail_product(mid_violation, 3) == 1);

  CHECK_THROWS_AS(indicator_tail_product(all_safe, 5), std::out_of_range);
  CHECK_THROWS_AS(indicator_tail_product(all_safe, -1), std::out_of_range);
}

TEST_CASE("indicator tail product is monotone in t") {
  safepg::RngStream rng(5, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto traj = random_traj(rng, 6);
    for (int t = 0; t < traj.horizon(); ++t) {
      REQUIRE(indicator_tail_product(traj, t) <=
              indicator_tail_product(traj, t + 1));
    }
    // G_0 = b_0 * G_1 at the trajectory level.
    REQUIRE(indicator_tail_product(traj, 0) ==
            traj.safe_flags[0] * indicator_tail_product(traj, 1));
  }
}

TEST_CASE("augmented reward") {
  CHECK(safepg::augmented_reward(-2.0, 1, 2.0) == 0.0);
  CHECK(safepg::augmented_reward(-2.0, 0, 2.0) == -2.0);
  CHECK(safepg::augmented_reward(-3.0, 1, 0.0) == -3.0);
}

TEST_CASE("reward to go") {
  const auto traj = make_traj({-1, -2, -3}, {1, 0, 1, 1});
  CHECK(reward_to_go(traj, 0, 2.0) == -2.0);
  CHECK(reward_to_go(traj, 2, 2.0) == -1.0);
  CHECK(reward_to_go(traj, 0, 0.0) == -6.0);
  CHECK_THROWS_AS(reward_to_go(traj, 3, 0.0), std::out_of_range);

  // Terminal-state bonus folded into the last step when enabled.
  CHECK(reward_to_go(traj, 2, 2.0, true) == 1.0);
  CHECK(reward_to_go(traj, 0, 2.0, true) == 0.0);
}

TEST_CASE("reward-to-go difference identity") {
  safepg::RngStream rng(6, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto traj = random_traj(rng, 5);
    const double mu = 3.0 * rng.uniform();
    for (bool bonus : {false, true}) {
      for (int t = 0; t + 1 < traj.horizon(); ++t) {
        const double diff = reward_to_go(traj, t, mu, bonus) -
                            reward_to_go(traj, t + 1, mu, bonus);
        const double expected =
            traj.rewards[t] + mu * traj.safe_flags[t];
        REQUIRE_THAT(diff, Catch::Matchers::WithinAbs(expected, 1e-12));
      }
    }
  }
}
