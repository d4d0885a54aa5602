#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "safepg/estimators.hpp"
#include "safepg/nav2d.hpp"
#include "safepg/rbf_policy.hpp"
#include "safepg/rng.hpp"

namespace safepg {

enum class Formulation { probabilistic, cumulative };
enum class StartMode { fixed, uniform_safe };

inline const char* formulation_name(Formulation f) {
  return f == Formulation::probabilistic ? "probabilistic" : "cumulative";
}

struct TrainConfig {
  Formulation formulation = Formulation::probabilistic;
  double weight = 6.0;  // lambda or mu, depending on the formulation
  double eta = 0.002;
  int episodes = 10000;  // iteration count K
  int batch_size = 1;
  std::uint64_t seed = 0;
  StartMode start_mode = StartMode::fixed;
  bool terminal_bonus = true;
  int log_every = 100;
  double grad_clip = 0.0;  // 0 disables the norm cap
  bool mean_baseline = false;
};

struct StepRecord {
  double episode_return = 0.0;  // mean raw return over the batch
  double joint_safe = 0.0;      // fraction of all-safe episodes in the batch
  double grad_norm = 0.0;
};

struct TrainLogRow {
  int iter = 0;
  double episode_return = 0.0;
  double joint_safe = 0.0;
  double grad_norm = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  RbfGaussianPolicy policy;
  std::vector<TrainLogRow> log;
  bool aborted = false;
  std::string abort_reason;
};

namespace detail {

inline Vec2 pick_start(const TrainConfig& cfg, const NavEnvConfig& env,
                       RngStream& rng) {
  return cfg.start_mode == StartMode::fixed ? env.start
                                            : sample_safe_uniform(env, rng);
}

template <class GradFn>
StepRecord apply_batch_step(RbfGaussianPolicy& policy, const TrainConfig& cfg,
                            const NavEnvConfig& env, RngStream& rng,
                            GradFn&& grad_fn) {
  std::vector<GradientVector> grads;
  grads.reserve(static_cast<std::size_t>(cfg.batch_size));
  StepRecord rec;
  for (int b = 0; b < cfg.batch_size; ++b) {
    const Vec2 s0 = pick_start(cfg, env, rng);
    const NavTrajectory traj = rollout(env, policy, s0, rng);
    grads.push_back(grad_fn(traj));
    rec.episode_return += reward_to_go(traj, 0, 0.0);
    rec.joint_safe += indicator_tail_product(traj, 0);
  }
  rec.episode_return /= cfg.batch_size;
  rec.joint_safe /= cfg.batch_size;

  GradientVector g = batch_average(grads);
  if (!g.all_finite()) {
    throw std::runtime_error("non-finite gradient in training step");
  }
  rec.grad_norm = g.norm();
  if (cfg.grad_clip > 0.0 && rec.grad_norm > cfg.grad_clip) {
    g.scale(cfg.grad_clip / rec.grad_norm);
  }
  policy.apply_update(g, cfg.eta);
  return rec;
}

}  // namespace detail

// theta <- theta + eta * mean(grad_value + lambda * grad_safety_prob).
inline StepRecord train_step_probabilistic(RbfGaussianPolicy& policy,
                                           const TrainConfig& cfg,
                                           const NavEnvConfig& env,
                                           RngStream& rng) {
  return detail::apply_batch_step(
      policy, cfg, env, rng, [&](const NavTrajectory& traj) {
        return grad_lagrangian(traj, policy, cfg.weight);
      });
}

// theta <- theta + eta * mean(grad_value at mu).
inline StepRecord train_step_cumulative(RbfGaussianPolicy& policy,
                                        const TrainConfig& cfg,
                                        const NavEnvConfig& env,
                                        RngStream& rng) {
  return detail::apply_batch_step(
      policy, cfg, env, rng, [&](const NavTrajectory& traj) {
        return grad_value(traj, policy, cfg.weight, cfg.terminal_bonus,
                          cfg.mean_baseline);
      });
}

inline TrainResult train(const TrainConfig& cfg, const NavEnvConfig& env,
                         RbfGaussianPolicy policy0, RngStream rng,
                         bool measure_time = false) {
  TrainResult result;
  result.policy = std::move(policy0);
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 1; k <= cfg.episodes; ++k) {
    StepRecord rec;
    try {
      rec = cfg.formulation == Formulation::probabilistic
                ? train_step_probabilistic(result.policy, cfg, env, rng)
                : train_step_cumulative(result.policy, cfg, env, rng);
    } catch (const std::exception& e) {
      result.aborted = true;
      result.abort_reason = e.what();
      break;
    }
    if ((k - 1) % cfg.log_every == 0) {
      double wall_ms = 0.0;
      if (measure_time) {
        wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
      }
      result.log.push_back(
          {k, rec.episode_return, rec.joint_safe, rec.grad_norm, wall_ms});
    }
  }
  return result;
}

inline TrainResult train(const TrainConfig& cfg, const NavEnvConfig& env,
                         RbfGaussianPolicy policy0,
                         bool measure_time = false) {
  return train(cfg, env, std::move(policy0), RngStream(cfg.seed, 0),
               measure_time);
}

}  // namespace safepg
