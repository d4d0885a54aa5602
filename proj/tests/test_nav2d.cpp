#include <algorithm>
#include <catch2/catch_amalgamated.hpp>

#include "safepg/nav2d.hpp"
#include "safepg/rng.hpp"

using safepg::NavEnvConfig;
using safepg::RngStream;
using safepg::Vec2;

namespace {

struct ZeroPolicy {
  Vec2 sample_action(Vec2, RngStream&) const { return {0.0, 0.0}; }
};

// 0.999 chi-square quantile via the Wilson-Hilferty approximation.
double chi_sq_quantile_999(double df) {
  const double z = 3.0902323061678132;
  const double a = 2.0 / (9.0 * df);
  const double t = 1.0 - a + z * std::sqrt(a);
  return df * t * t * t;
}

}  // namespace

TEST_CASE("default environment matches the benchmark constants") {
  const NavEnvConfig cfg;
  REQUIRE(cfg.obstacles.size() == 5);
  CHECK(cfg.obstacles[0].center == Vec2{7.0, 7.0});
  CHECK(cfg.obstacles[4].radius == 0.75);
  CHECK(cfg.goal == Vec2{9.0, 1.5});
  CHECK(cfg.horizon == 20);
  CHECK(cfg.step_scale == 0.05);
  CHECK(cfg.start == Vec2{1.0, 8.5});
  CHECK(is_safe(cfg, cfg.start) == 1);
  CHECK(is_safe(cfg, cfg.goal) == 1);
}

TEST_CASE("is_safe uses the open-disk convention") {
  const NavEnvConfig cfg;
  CHECK(is_safe(cfg, {7.0, 7.0}) == 0);   // obstacle center
  CHECK(is_safe(cfg, {0.0, 0.0}) == 1);   // min obstacle distance ~4.27
  CHECK(is_safe(cfg, {5.0, 7.0}) == 1);   // exactly on a boundary
}

TEST_CASE("is_safe is invariant under obstacle reordering") {
  NavEnvConfig cfg;
  NavEnvConfig shuffled = cfg;
  std::reverse(shuffled.obstacles.begin(), shuffled.obstacles.end());
  RngStream rng(11, 0);
  for (int i = 0; i < 2000; ++i) {
    const Vec2 p{10.0 * rng.uniform(), 10.0 * rng.uniform()};
    REQUIRE(is_safe(cfg, p) == is_safe(shuffled, p));
  }
}

TEST_CASE("step applies Euler dynamics with clipping") {
  const NavEnvConfig cfg;
  const Vec2 s1 = step(cfg, {1.0, 8.5}, {2.0, -1.0});
  CHECK_THAT(s1.x, Catch::Matchers::WithinAbs(1.1, 1e-12));
  CHECK_THAT(s1.y, Catch::Matchers::WithinAbs(8.45, 1e-12));
  CHECK(step(cfg, {0.1, 9.9}, {-40.0, 40.0}) == Vec2{0.0, 10.0});
  CHECK(step(cfg, {5.0, 5.0}, {0.0, 0.0}) == Vec2{5.0, 5.0});

  RngStream rng(12, 0);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 s{10.0 * rng.uniform(), 10.0 * rng.uniform()};
    const Vec2 a{200.0 * (rng.uniform() - 0.5), 200.0 * (rng.uniform() - 0.5)};
    REQUIRE(in_bounds(cfg, step(cfg, s, a)));
  }
}

TEST_CASE("reward is the negative squared goal distance") {
  const NavEnvConfig cfg;
  CHECK(reward(cfg, {9.0, 1.5}) == 0.0);
  CHECK(reward(cfg, {8.0, 1.5}) == -1.0);
  CHECK(reward(cfg, {1.0, 8.5}) == -113.0);

  RngStream rng(13, 0);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 s{10.0 * rng.uniform(), 10.0 * rng.uniform()};
    REQUIRE(reward(cfg, s) <= 0.0);
  }
}

TEST_CASE("safe-set rejection sampling accepts at the geometric rate") {
  const NavEnvConfig cfg;
  RngStream rng(14, 0);
  const int proposals = 100000;
  int accepted = 0;
  for (int i = 0; i < proposals; ++i) {
    const Vec2 p{10.0 * rng.uniform(), 10.0 * rng.uniform()};
    accepted += is_safe(cfg, p);
  }
  // 1 - pi * (4 + 1 + 0.25 + 2.25 + 0.5625) / 100
  CHECK_THAT(accepted / static_cast<double>(proposals),
             Catch::Matchers::WithinAbs(0.74671, 0.01));
}

TEST_CASE("sample_safe_uniform returns safe points") {
  const NavEnvConfig cfg;
  RngStream rng(15, 0);
  for (int i = 0; i < 5000; ++i) {
    REQUIRE(is_safe(cfg, sample_safe_uniform(cfg, rng)) == 1);
  }
}

TEST_CASE("sample_safe_uniform fails on a degenerate safe set") {
  NavEnvConfig cfg;
  cfg.obstacles = {{{5.0, 5.0}, 100.0}};
  RngStream rng(16, 0);
  CHECK_THROWS_AS(sample_safe_uniform(cfg, rng), std::runtime_error);
}

TEST_CASE("sample_safe_uniform is uniform across fully safe unit cells") {
  const NavEnvConfig cfg;
  // Unit cells that do not intersect any obstacle disk.
  std::vector<std::pair<int, int>> cells;
  for (int ix = 0; ix < 10; ++ix) {
    for (int iy = 0; iy < 10; ++iy) {
      bool clear = true;
      for (const auto& o : cfg.obstacles) {
        const double cx = std::clamp(o.center.x, static_cast<double>(ix),
                                     static_cast<double>(ix + 1));
        const double cy = std::clamp(o.center.y, static_cast<double>(iy),
                                     static_cast<double>(iy + 1));
        if (norm_sq(Vec2{cx, cy} - o.center) < o.radius * o.radius) {
          clear = false;
          break;
        }
      }
      if (clear) cells.emplace_back(ix, iy);
    }
  }
  REQUIRE(cells.size() > 30);

  std::vector<long> counts(cells.size(), 0);
  long total = 0;
  RngStream rng(17, 0);
  for (int i = 0; i < 100000; ++i) {
    const Vec2 p = sample_safe_uniform(cfg, rng);
    const int ix = std::min(9, static_cast<int>(p.x));
    const int iy = std::min(9, static_cast<int>(p.y));
    const auto it = std::find(cells.begin(), cells.end(),
                              std::make_pair(ix, iy));
    if (it != cells.end()) {
      ++counts[static_cast<std::size_t>(it - cells.begin())];
      ++total;
    }
  }
  const double expected = static_cast<double>(total) / cells.size();
  double chi_sq = 0.0;
  for (long c : counts) {
    chi_sq += (c - expected) * (c - expected) / expected;
  }
  CHECK(chi_sq < chi_sq_quantile_999(static_cast<double>(cells.size() - 1)));
}

TEST_CASE("zero-policy rollout stays put") {
  const NavEnvConfig cfg;
  RngStream rng(18, 0);
  const auto traj = rollout(cfg, ZeroPolicy{}, cfg.start, rng);
  REQUIRE(traj.well_formed());
  REQUIRE(traj.states.size() == 21);
  REQUIRE(traj.safe_flags.size() == 21);
  for (const Vec2& s : traj.states) REQUIRE(s == cfg.start);
  CHECK_THAT(reward_to_go(traj, 0, 0.0),
             Catch::Matchers::WithinAbs(-20.0 * 113.0, 1e-9));
}

TEST_CASE("rollout replays identically from an equal stream state") {
  const NavEnvConfig cfg;
  struct NoisyPolicy {
    Vec2 sample_action(Vec2, RngStream& rng) const {
      return {rng.normal(), rng.normal()};
    }
  };
  RngStream a(19, 4), b(19, 4);
  const auto t1 = rollout(cfg, NoisyPolicy{}, cfg.start, a);
  const auto t2 = rollout(cfg, NoisyPolicy{}, cfg.start, b);
  REQUIRE(t1.states.size() == t2.states.size());
  for (std::size_t i = 0; i < t1.states.size(); ++i) {
    REQUIRE(t1.states[i] == t2.states[i]);
  }
  REQUIRE(t1.rewards == t2.rewards);
  REQUIRE(t1.safe_flags == t2.safe_flags);
}
