#pragma once

#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "safepg/nav2d.hpp"
#include "safepg/rbf_policy.hpp"
#include "safepg/sweep.hpp"
#include "safepg/trainer.hpp"

namespace safepg {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvalOptions {
  int episodes = 1000;
};

struct OracleOptions {
  int instances = 25;
  long samples = 10000;
  double lambda_max = 1e3;
  double fd_step = 1e-4;
  bool vc_normalized = true;
};

struct OutputOptions {
  bool real_timing = false;  // zero wall-clock fields unless enabled
};

// Every field is optional in the file; the default-constructed RunConfig is
// the compiled-in benchmark configuration.
struct RunConfig {
  NavEnvConfig env;
  RbfGaussianPolicy::Options policy;
  TrainConfig train;
  EvalOptions eval;
  SweepOptions sweep;
  OracleOptions oracle;
  OutputOptions output;
  bool seed_set = false;  // whether the file (or a flag) pinned train.seed
};

namespace cfg_detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Context {
  std::string file;
  int line = 0;
  std::string key;
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(file + ":" + std::to_string(line) + ": " + msg +
                      " (key '" + key + "')");
  }
};

inline double parse_double(const Context& ctx, const std::string& v) {
  const char* begin = v.c_str();
  char* end = nullptr;
  const double x = std::strtod(begin, &end);
  if (end == begin || trim(end).size() != 0) ctx.fail("malformed number '" + v + "'");
  return x;
}

inline long parse_long(const Context& ctx, const std::string& v) {
  const char* begin = v.c_str();
  char* end = nullptr;
  const long x = std::strtol(begin, &end, 10);
  if (end == begin || trim(end).size() != 0) ctx.fail("malformed integer '" + v + "'");
  return x;
}

inline std::uint64_t parse_u64(const Context& ctx, const std::string& v) {
  const char* begin = v.c_str();
  char* end = nullptr;
  const unsigned long long x = std::strtoull(begin, &end, 10);
  if (end == begin || trim(end).size() != 0) ctx.fail("malformed integer '" + v + "'");
  return x;
}

inline bool parse_bool(const Context& ctx, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  ctx.fail("malformed boolean '" + v + "'");
}

inline std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : v) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline std::vector<double> parse_double_list(const Context& ctx,
                                             const std::string& v) {
  std::vector<double> out;
  for (const std::string& item : split(v, ',')) {
    out.push_back(parse_double(ctx, item));
  }
  return out;
}

inline std::vector<std::uint64_t> parse_u64_list(const Context& ctx,
                                                 const std::string& v) {
  std::vector<std::uint64_t> out;
  for (const std::string& item : split(v, ',')) {
    out.push_back(parse_u64(ctx, item));
  }
  return out;
}

inline Vec2 parse_vec2(const Context& ctx, const std::string& v) {
  const std::vector<double> xs = parse_double_list(ctx, v);
  if (xs.size() != 2) ctx.fail("expected two comma-separated numbers");
  return {xs[0], xs[1]};
}

inline std::vector<Obstacle> parse_obstacles(const Context& ctx,
                                             const std::string& v) {
  std::vector<Obstacle> out;
  for (const std::string& item : split(v, ',')) {
    if (item.size() < 2 || item.front() != '(' || item.back() != ')') {
      ctx.fail("expected obstacle tuple '(x,y,r)', got '" + item + "'");
    }
    const std::vector<double> xs =
        parse_double_list(ctx, item.substr(1, item.size() - 2));
    if (xs.size() != 3) ctx.fail("obstacle tuple needs three numbers");
    out.push_back({{xs[0], xs[1]}, xs[2]});
  }
  return out;
}

inline Formulation parse_formulation(const Context& ctx,
                                     const std::string& v) {
  if (v == "probabilistic" || v == "prob") return Formulation::probabilistic;
  if (v == "cumulative" || v == "cum") return Formulation::cumulative;
  ctx.fail("unknown formulation '" + v + "'");
}

inline StartMode parse_start_mode(const Context& ctx, const std::string& v) {
  if (v == "fixed") return StartMode::fixed;
  if (v == "uniform_safe") return StartMode::uniform_safe;
  ctx.fail("unknown start mode '" + v + "'");
}

}  // namespace cfg_detail

inline void apply_config_line(RunConfig& cfg, const std::string& section,
                              const std::string& key, const std::string& value,
                              cfg_detail::Context& ctx) {
  using namespace cfg_detail;
  ctx.key = section.empty() ? key : section + "." + key;
  if (section == "env") {
    if (key == "bounds") {
      const std::vector<double> xs = parse_double_list(ctx, value);
      if (xs.size() != 4) ctx.fail("bounds needs xmin,xmax,ymin,ymax");
      cfg.env.bounds_min = {xs[0], xs[2]};
      cfg.env.bounds_max = {xs[1], xs[3]};
    } else if (key == "obstacles") {
      cfg.env.obstacles = parse_obstacles(ctx, value);
    } else if (key == "goal") {
      cfg.env.goal = parse_vec2(ctx, value);
    } else if (key == "horizon") {
      cfg.env.horizon = static_cast<int>(parse_long(ctx, value));
    } else if (key == "step_scale") {
      cfg.env.step_scale = parse_double(ctx, value);
    } else if (key == "start") {
      cfg.env.start = parse_vec2(ctx, value);
    } else {
      ctx.fail("unknown key");
    }
  } else if (section == "policy") {
    if (key == "spacing") {
      cfg.policy.spacing = parse_double(ctx, value);
    } else if (key == "sigma") {
      cfg.policy.sigma = parse_double(ctx, value);
    } else if (key == "action_cov") {
      const Vec2 c = parse_vec2(ctx, value);
      cfg.policy.cov_x = c.x;
      cfg.policy.cov_y = c.y;
    } else if (key == "feature_cutoff") {
      cfg.policy.feature_cutoff = parse_bool(ctx, value);
    } else {
      ctx.fail("unknown key");
    }
  } else if (section == "train") {
    if (key == "formulation") {
      cfg.train.formulation = parse_formulation(ctx, value);
    } else if (key == "weight") {
      cfg.train.weight = parse_double(ctx, value);
    } else if (key == "eta") {
      cfg.train.eta = parse_double(ctx, value);
    } else if (key == "episodes") {
      cfg.train.episodes = static_cast<int>(parse_long(ctx, value));
    } else if (key == "batch_size") {
      cfg.train.batch_size = static_cast<int>(parse_long(ctx, value));
    } else if (key == "seed") {
      cfg.train.seed = parse_u64(ctx, value);
      cfg.seed_set = true;
    } else if (key == "start_mode") {
      cfg.train.start_mode = parse_start_mode(ctx, value);
    } else if (key == "terminal_bonus") {
      cfg.train.terminal_bonus = parse_bool(ctx, value);
    } else if (key == "log_every") {
      cfg.train.log_every = static_cast<int>(parse_long(ctx, value));
    } else if (key == "grad_clip") {
      cfg.train.grad_clip = parse_double(ctx, value);
    } else if (key == "mean_baseline") {
      cfg.train.mean_baseline = parse_bool(ctx, value);
    } else {
      ctx.fail("unknown key");
    }
  } else if (section == "eval") {
    if (key == "episodes") {
      cfg.eval.episodes = static_cast<int>(parse_long(ctx, value));
    } else {
      ctx.fail("unknown key");
    }
  } else if (section == "sweep") {
    if (key == "weights") {
      cfg.sweep.weights = parse_double_list(ctx, value);
    } else if (key == "formulations") {
      cfg.sweep.formulations.clear();
      for (const std::string& item : split(value, ',')) {
        cfg.sweep.formulations.push_back(parse_formulation(ctx, item));
      }
    } else if (key == "seeds") {
      cfg.sweep.seeds = parse_u64_list(ctx, value);
    } else if (key == "train_episodes") {
      cfg.sweep.train_episodes = static_cast<int>(parse_long(ctx, value));
    } else if (key == "eval_episodes") {
      cfg.sweep.eval_episodes = static_cast<int>(parse_long(ctx, value));
    } else if (key == "jobs") {
      cfg.sweep.jobs = static_cast<int>(parse_long(ctx, value));
    } else {
      ctx.fail("unknown key");
    }
  } else if (section == "oracle") {
    if (key == "instances") {
      cfg.oracle.instances = static_cast<int>(parse_long(ctx, value));
    } else if (key == "samples") {
      cfg.oracle.samples = parse_long(ctx, value);
    } else if (key == "lambda_max") {
      cfg.oracle.lambda_max = parse_double(ctx, value);
    } else if (key == "fd_step") {
      cfg.oracle.fd_step = parse_double(ctx, value);
    } else if (key == "vc_normalized") {
      cfg.oracle.vc_normalized = parse_bool(ctx, value);
    } else {
      ctx.fail("unknown key");
    }
  } else if (section == "output") {
    if (key == "timing") {
      if (value == "real") {
        cfg.output.real_timing = true;
      } else if (value == "zero") {
        cfg.output.real_timing = false;
      } else {
        ctx.fail("timing must be 'zero' or 'real'");
      }
    } else {
      ctx.fail("unknown key");
    }
  } else {
    ctx.fail("unknown section '" + section + "'");
  }
}

// Cross-field checks; error messages name the offending field.
inline void validate_config(const RunConfig& cfg) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("invalid configuration: " + msg);
  };
  require(cfg.env.bounds_min.x < cfg.env.bounds_max.x &&
              cfg.env.bounds_min.y < cfg.env.bounds_max.y,
          "env.bounds must describe a nonempty box");
  for (const Obstacle& o : cfg.env.obstacles) {
    require(o.radius > 0.0, "env.obstacles radii must be positive");
  }
  require(cfg.env.horizon >= 1, "env.horizon must be >= 1");
  require(cfg.env.step_scale > 0.0, "env.step_scale must be positive");
  require(in_bounds(cfg.env, cfg.env.start), "env.start outside bounds");
  require(in_bounds(cfg.env, cfg.env.goal), "env.goal outside bounds");
  require(is_safe(cfg.env, cfg.env.start) == 1, "env.start must be safe");
  require(is_safe(cfg.env, cfg.env.goal) == 1, "env.goal must be safe");

  require(cfg.policy.spacing > 0.0, "policy.spacing must be positive");
  require(cfg.policy.spacing <=
              RbfGaussianPolicy::kLatticeMax - RbfGaussianPolicy::kLatticeMin,
          "policy.spacing larger than the lattice");
  require(cfg.policy.sigma > 0.0, "policy.sigma must be positive");
  require(cfg.policy.cov_x > 0.0 && cfg.policy.cov_y > 0.0,
          "policy.action_cov entries must be positive");

  require(cfg.train.weight > 0.0, "train.weight must be positive");
  require(cfg.train.eta > 0.0, "train.eta must be positive");
  require(cfg.train.episodes >= 1, "train.episodes must be >= 1");
  require(cfg.train.batch_size >= 1, "train.batch_size must be >= 1");
  require(cfg.train.log_every >= 1, "train.log_every must be >= 1");
  require(cfg.train.grad_clip >= 0.0, "train.grad_clip must be >= 0");

  require(cfg.eval.episodes >= 1, "eval.episodes must be >= 1");

  require(!cfg.sweep.formulations.empty(), "sweep.formulations is empty");
  require(!cfg.sweep.seeds.empty(), "sweep.seeds is empty");
  for (double w : cfg.sweep.weights) {
    require(w > 0.0, "sweep.weights must be positive");
  }
  require(cfg.sweep.train_episodes >= 1, "sweep.train_episodes must be >= 1");
  require(cfg.sweep.eval_episodes >= 1, "sweep.eval_episodes must be >= 1");
  require(cfg.sweep.jobs >= 1, "sweep.jobs must be >= 1");

  require(cfg.oracle.instances >= 1, "oracle.instances must be >= 1");
  require(cfg.oracle.samples >= 1, "oracle.samples must be >= 1");
  require(cfg.oracle.lambda_max > 0.0, "oracle.lambda_max must be positive");
  require(cfg.oracle.fd_step >= 1e-7 && cfg.oracle.fd_step <= 1e-3,
          "oracle.fd_step must lie in [1e-7, 1e-3]");
}

inline RunConfig parse_config_text(const std::string& text,
                                   const std::string& filename) {
  RunConfig cfg;
  cfg_detail::Context ctx;
  ctx.file = filename;
  std::istringstream in(text);
  std::string line;
  std::string section;
  while (std::getline(in, line)) {
    ++ctx.line;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = cfg_detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        ctx.key = line;
        ctx.fail("malformed section header");
      }
      section = cfg_detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      ctx.key = line;
      ctx.fail("expected 'key = value'");
    }
    const std::string key = cfg_detail::trim(line.substr(0, eq));
    const std::string value = cfg_detail::trim(line.substr(eq + 1));
    apply_config_line(cfg, section, key, value, ctx);
  }
  validate_config(cfg);
  return cfg;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

// The effective configuration, re-parseable through parse_config. A run
// replayed from this text reproduces its outputs byte for byte.
inline std::string format_config(const RunConfig& cfg) {
  auto num = [](double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
  };
  std::string out;
  out += "[env]\n";
  out += "bounds = " + num(cfg.env.bounds_min.x) + "," +
         num(cfg.env.bounds_max.x) + "," + num(cfg.env.bounds_min.y) + "," +
         num(cfg.env.bounds_max.y) + "\n";
  out += "obstacles = ";
  for (std::size_t i = 0; i < cfg.env.obstacles.size(); ++i) {
    const Obstacle& o = cfg.env.obstacles[i];
    out += (i ? "," : "");
    out += "(" + num(o.center.x) + "," + num(o.center.y) + "," +
           num(o.radius) + ")";
  }
  out += "\n";
  out += "goal = " + num(cfg.env.goal.x) + "," + num(cfg.env.goal.y) + "\n";
  out += "horizon = " + std::to_string(cfg.env.horizon) + "\n";
  out += "step_scale = " + num(cfg.env.step_scale) + "\n";
  out += "start = " + num(cfg.env.start.x) + "," + num(cfg.env.start.y) +
         "\n\n";

  out += "[policy]\n";
  out += "spacing = " + num(cfg.policy.spacing) + "\n";
  out += "sigma = " + num(cfg.policy.sigma) + "\n";
  out += "action_cov = " + num(cfg.policy.cov_x) + "," +
         num(cfg.policy.cov_y) + "\n";
  out += std::string("feature_cutoff = ") +
         (cfg.policy.feature_cutoff ? "true" : "false") + "\n\n";

  out += "[train]\n";
  out += std::string("formulation = ") +
         formulation_name(cfg.train.formulation) + "\n";
  out += "weight = " + num(cfg.train.weight) + "\n";
  out += "eta = " + num(cfg.train.eta) + "\n";
  out += "episodes = " + std::to_string(cfg.train.episodes) + "\n";
  out += "batch_size = " + std::to_string(cfg.train.batch_size) + "\n";
  out += "seed = " + std::to_string(cfg.train.seed) + "\n";
  out += std::string("start_mode = ") +
         (cfg.train.start_mode == StartMode::fixed ? "fixed" : "uniform_safe") +
         "\n";
  out += std::string("terminal_bonus = ") +
         (cfg.train.terminal_bonus ? "true" : "false") + "\n";
  out += "log_every = " + std::to_string(cfg.train.log_every) + "\n";
  out += "grad_clip = " + num(cfg.train.grad_clip) + "\n";
  out += std::string("mean_baseline = ") +
         (cfg.train.mean_baseline ? "true" : "false") + "\n\n";

  out += "[eval]\n";
  out += "episodes = " + std::to_string(cfg.eval.episodes) + "\n\n";

  out += "[sweep]\n";
  const std::vector<double> weights =
      cfg.sweep.weights.empty() ? default_sweep_weights() : cfg.sweep.weights;
  out += "weights = ";
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out += (i ? "," : "") + num(weights[i]);
  }
  out += "\n";
  out += "formulations = ";
  for (std::size_t i = 0; i < cfg.sweep.formulations.size(); ++i) {
    out += (i ? "," : "");
    out += formulation_name(cfg.sweep.formulations[i]);
  }
  out += "\n";
  out += "seeds = ";
  for (std::size_t i = 0; i < cfg.sweep.seeds.size(); ++i) {
    out += (i ? "," : "") + std::to_string(cfg.sweep.seeds[i]);
  }
  out += "\n";
  out += "train_episodes = " + std::to_string(cfg.sweep.train_episodes) + "\n";
  out += "eval_episodes = " + std::to_string(cfg.sweep.eval_episodes) + "\n";
  out += "jobs = " + std::to_string(cfg.sweep.jobs) + "\n\n";

  out += "[oracle]\n";
  out += "instances = " + std::to_string(cfg.oracle.instances) + "\n";
  out += "samples = " + std::to_string(cfg.oracle.samples) + "\n";
  out += "lambda_max = " + num(cfg.oracle.lambda_max) + "\n";
  out += "fd_step = " + num(cfg.oracle.fd_step) + "\n";
  out += std::string("vc_normalized = ") +
         (cfg.oracle.vc_normalized ? "true" : "false") + "\n\n";

  out += "[output]\n";
  out += std::string("timing = ") +
         (cfg.output.real_timing ? "real" : "zero") + "\n";
  return out;
}

}  // namespace safepg
