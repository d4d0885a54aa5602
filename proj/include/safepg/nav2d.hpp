#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "safepg/rng.hpp"
#include "safepg/trajectory.hpp"
#include "safepg/vec2.hpp"

namespace safepg {

struct Obstacle {
  Vec2 center;
  double radius = 0.0;
};

// Continuous navigation task: box state space with circular obstacles,
// goal-seeking reward, Euler dynamics s' = s + a * T_s.
struct NavEnvConfig {
  Vec2 bounds_min{0.0, 0.0};
  Vec2 bounds_max{10.0, 10.0};
  std::vector<Obstacle> obstacles{
      {{7.0, 7.0}, 2.0},   {{3.0, 7.0}, 1.0},  {{1.5, 4.0}, 0.5},
      {{4.5, 3.0}, 1.5},   {{8.0, 3.0}, 0.75},
  };
  Vec2 goal{9.0, 1.5};
  int horizon = 20;
  double step_scale = 0.05;
  Vec2 start{1.0, 8.5};
};

using NavTrajectory = Trajectory<Vec2, Vec2>;

// Unsafe is the open disk: a point on an obstacle boundary is safe.
inline int is_safe(const NavEnvConfig& cfg, Vec2 s) {
  for (const Obstacle& o : cfg.obstacles) {
    if (norm_sq(s - o.center) < o.radius * o.radius) return 0;
  }
  return 1;
}

inline bool in_bounds(const NavEnvConfig& cfg, Vec2 s) {
  return s.x >= cfg.bounds_min.x && s.x <= cfg.bounds_max.x &&
         s.y >= cfg.bounds_min.y && s.y <= cfg.bounds_max.y;
}

inline Vec2 clip_to_bounds(const NavEnvConfig& cfg, Vec2 s) {
  return {std::clamp(s.x, cfg.bounds_min.x, cfg.bounds_max.x),
          std::clamp(s.y, cfg.bounds_min.y, cfg.bounds_max.y)};
}

inline Vec2 step(const NavEnvConfig& cfg, Vec2 s, Vec2 a) {
  return clip_to_bounds(cfg, s + cfg.step_scale * a);
}

// Negative squared distance to the goal; depends on the state only.
inline double reward(const NavEnvConfig& cfg, Vec2 s) {
  return -norm_sq(s - cfg.goal);
}

inline Vec2 sample_safe_uniform(const NavEnvConfig& cfg, RngStream& rng) {
  constexpr int kMaxProposals = 1000000;
  const Vec2 extent = cfg.bounds_max - cfg.bounds_min;
  for (int i = 0; i < kMaxProposals; ++i) {
    const Vec2 p = cfg.bounds_min +
                   Vec2{rng.uniform() * extent.x, rng.uniform() * extent.y};
    if (is_safe(cfg, p)) return p;
  }
  throw std::runtime_error(
      "sample_safe_uniform: proposal cap exceeded, safe set is degenerate");
}

// Runs a full-horizon episode; no early termination on violation.
template <class Policy>
NavTrajectory rollout(const NavEnvConfig& cfg, const Policy& policy, Vec2 s0,
                      RngStream& rng) {
  NavTrajectory traj;
  const int horizon = cfg.horizon;
  traj.states.reserve(static_cast<std::size_t>(horizon) + 1);
  traj.actions.reserve(static_cast<std::size_t>(horizon));
  traj.rewards.reserve(static_cast<std::size_t>(horizon));
  traj.safe_flags.reserve(static_cast<std::size_t>(horizon) + 1);

  Vec2 s = s0;
  for (int t = 0; t < horizon; ++t) {
    traj.states.push_back(s);
    traj.safe_flags.push_back(is_safe(cfg, s));
    traj.rewards.push_back(reward(cfg, s));
    const Vec2 a = policy.sample_action(s, rng);
    traj.actions.push_back(a);
    s = step(cfg, s, a);
  }
  traj.states.push_back(s);
  traj.safe_flags.push_back(is_safe(cfg, s));
  return traj;
}

}  // namespace safepg
