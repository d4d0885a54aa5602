#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "safepg/nav2d.hpp"
#include "safepg/rbf_policy.hpp"
#include "safepg/rng.hpp"
#include "safepg/trainer.hpp"

namespace safepg {

struct EvalResult {
  double safety_rate = 0.0;
  double mean_return = 0.0;
};

// Evaluation protocol: episodes start uniformly in the safe set; an episode
// counts as safe only if all T+1 states are safe; returns are raw rewards.
template <class Policy>
EvalResult evaluate(const Policy& policy, const NavEnvConfig& env,
                    int n_episodes, RngStream& rng) {
  if (n_episodes < 1) {
    throw std::invalid_argument("evaluate: n_episodes must be >= 1");
  }
  EvalResult out;
  for (int i = 0; i < n_episodes; ++i) {
    const Vec2 s0 = sample_safe_uniform(env, rng);
    const NavTrajectory traj = rollout(env, policy, s0, rng);
    out.safety_rate += indicator_tail_product(traj, 0);
    out.mean_return += reward_to_go(traj, 0, 0.0);
  }
  out.safety_rate /= n_episodes;
  out.mean_return /= n_episodes;
  return out;
}

struct SweepRecord {
  Formulation formulation = Formulation::probabilistic;
  double weight = 0.0;
  std::uint64_t seed = 0;
  int train_episodes = 0;
  int eval_episodes = 0;
  double safety_rate = 0.0;
  double mean_return = 0.0;
  double wall_seconds = 0.0;
};

inline bool operator==(const SweepRecord& a, const SweepRecord& b) {
  return a.formulation == b.formulation && a.weight == b.weight &&
         a.seed == b.seed && a.train_episodes == b.train_episodes &&
         a.eval_episodes == b.eval_episodes &&
         a.safety_rate == b.safety_rate && a.mean_return == b.mean_return &&
         a.wall_seconds == b.wall_seconds;
}

struct SweepOptions {
  std::vector<double> weights;  // empty -> 8 log-spaced in [0.45, 14]
  std::vector<Formulation> formulations{Formulation::probabilistic,
                                        Formulation::cumulative};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int train_episodes = 10000;
  int eval_episodes = 500;
  int jobs = 1;
};

inline std::vector<double> default_sweep_weights() {
  std::vector<double> w;
  const double lo = std::log(0.45);
  const double hi = std::log(14.0);
  for (int i = 0; i < 8; ++i) {
    w.push_back(std::exp(lo + (hi - lo) * i / 7.0));
  }
  return w;
}

struct SweepFailure {
  std::size_t cell = 0;
  std::string message;
};

struct SweepOutcome {
  std::vector<SweepRecord> records;
  std::vector<SweepFailure> failures;
};

// One trained-and-evaluated cell per (formulation, weight, seed), ordered
// deterministically. Cells are independent; each derives its own pair of
// streams from (master seed, cell index), so the outcome does not depend on
// the job count.
inline SweepOutcome sweep(const SweepOptions& opt,
                          const TrainConfig& train_template,
                          const NavEnvConfig& env, std::uint64_t master_seed,
                          bool measure_time = false) {
  std::vector<double> weights =
      opt.weights.empty() ? default_sweep_weights() : opt.weights;
  std::sort(weights.begin(), weights.end());

  struct Cell {
    Formulation formulation;
    double weight;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  std::vector<Formulation> forms = opt.formulations;
  std::sort(forms.begin(), forms.end());
  forms.erase(std::unique(forms.begin(), forms.end()), forms.end());
  std::vector<std::uint64_t> seeds = opt.seeds;
  std::sort(seeds.begin(), seeds.end());
  for (Formulation f : forms) {
    for (double w : weights) {
      for (std::uint64_t s : seeds) cells.push_back({f, w, s});
    }
  }

  SweepOutcome outcome;
  outcome.records.assign(cells.size(), SweepRecord{});
  std::vector<char> failed(cells.size(), 0);
  std::vector<std::string> messages(cells.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& cell = cells[i];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        TrainConfig cfg = train_template;
        cfg.formulation = cell.formulation;
        cfg.weight = cell.weight;
        cfg.episodes = opt.train_episodes;
        cfg.seed = cell.seed;
        RngStream train_rng(master_seed, 2 * i);
        RngStream eval_rng(master_seed, 2 * i + 1);
        TrainResult trained = train(cfg, env, RbfGaussianPolicy{}, train_rng);
        if (trained.aborted) {
          throw std::runtime_error("training aborted: " +
                                   trained.abort_reason);
        }
        const EvalResult ev =
            evaluate(trained.policy, env, opt.eval_episodes, eval_rng);
        SweepRecord rec;
        rec.formulation = cell.formulation;
        rec.weight = cell.weight;
        rec.seed = cell.seed;
        rec.train_episodes = opt.train_episodes;
        rec.eval_episodes = opt.eval_episodes;
        rec.safety_rate = ev.safety_rate;
        rec.mean_return = ev.mean_return;
        if (measure_time) {
          rec.wall_seconds = std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - t0)
                                 .count();
        }
        outcome.records[i] = rec;
      } catch (const std::exception& e) {
        failed[i] = 1;
        messages[i] = e.what();
      }
    }
  };

  const int jobs = std::max(1, opt.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Compact out failed cells, preserving the deterministic order.
  std::vector<SweepRecord> kept;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (failed[i]) {
      outcome.failures.push_back({i, messages[i]});
    } else {
      kept.push_back(outcome.records[i]);
    }
  }
  outcome.records = std::move(kept);
  return outcome;
}

// Non-dominated records per formulation under (max safety_rate, max
// mean_return); exact ties collapse to the lowest weight, then lowest seed.
inline std::vector<SweepRecord> pareto_front(
    const std::vector<SweepRecord>& records) {
  std::vector<SweepRecord> out;
  for (const SweepRecord& r : records) {
    bool dominated = false;
    for (const SweepRecord& other : records) {
      if (other.formulation != r.formulation) continue;
      const bool geq = other.safety_rate >= r.safety_rate &&
                       other.mean_return >= r.mean_return;
      const bool strict = other.safety_rate > r.safety_rate ||
                          other.mean_return > r.mean_return;
      if (geq && strict) {
        dominated = true;
        break;
      }
      if (geq && !strict &&
          (other.weight < r.weight ||
           (other.weight == r.weight && other.seed < r.seed))) {
        dominated = true;  // equal point, tie-broken away
        break;
      }
    }
    if (!dominated) out.push_back(r);
  }
  return out;
}

namespace detail {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace detail

inline std::string format_sweep_csv(const std::vector<SweepRecord>& records) {
  std::string out =
      "formulation,weight,seed,train_episodes,eval_episodes,safety_rate,"
      "mean_return,wall_seconds\n";
  for (const SweepRecord& r : records) {
    out += formulation_name(r.formulation);
    out += ',';
    out += detail::format_double(r.weight);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += std::to_string(r.train_episodes);
    out += ',';
    out += std::to_string(r.eval_episodes);
    out += ',';
    out += detail::format_double(r.safety_rate);
    out += ',';
    out += detail::format_double(r.mean_return);
    out += ',';
    out += detail::format_double(r.wall_seconds);
    out += '\n';
  }
  return out;
}

inline void emit_csv(const std::vector<SweepRecord>& records,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write csv: " + path);
  out << format_sweep_csv(records);
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<SweepRecord> parse_sweep_csv(const std::string& text,
                                                const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(origin + ": empty csv");
  }
  std::vector<SweepRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 8) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": expected 8 fields");
    }
    SweepRecord r;
    if (fields[0] == "probabilistic") {
      r.formulation = Formulation::probabilistic;
    } else if (fields[0] == "cumulative") {
      r.formulation = Formulation::cumulative;
    } else {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": unknown formulation " + fields[0]);
    }
    r.weight = std::stod(fields[1]);
    r.seed = std::stoull(fields[2]);
    r.train_episodes = std::stoi(fields[3]);
    r.eval_episodes = std::stoi(fields[4]);
    r.safety_rate = std::stod(fields[5]);
    r.mean_return = std::stod(fields[6]);
    r.wall_seconds = std::stod(fields[7]);
    records.push_back(r);
  }
  return records;
}

inline std::vector<SweepRecord> load_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read csv: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sweep_csv(ss.str(), path);
}

// Self-contained 800x600 scatter: safety rate on x, mean return on y, one
// color per formulation. Output bytes are a pure function of the records.
inline std::string format_sweep_svg(const std::vector<SweepRecord>& records) {
  const int width = 800;
  const int height = 600;
  const double ml = 70.0, mr = 30.0, mt = 40.0, mb = 60.0;
  const double pw = width - ml - mr;
  const double ph = height - mt - mb;

  double ymin = -1.0, ymax = 1.0;
  if (!records.empty()) {
    ymin = records.front().mean_return;
    ymax = ymin;
    for (const auto& r : records) {
      ymin = std::min(ymin, r.mean_return);
      ymax = std::max(ymax, r.mean_return);
    }
    const double pad = (ymax - ymin) * 0.08 + 1e-9;
    ymin -= pad;
    ymax += pad;
  }

  auto px = [&](double safety) { return ml + safety * pw; };
  auto py = [&](double ret) {
    return mt + (1.0 - (ret - ymin) / (ymax - ymin)) * ph;
  };
  auto num = [](double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return std::string(buf);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" "
         "height=\"600\" viewBox=\"0 0 800 600\">\n";
  svg += "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
  svg += "<text x=\"400\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">safety vs mean "
         "return</text>\n";
  // Axes.
  svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" +
         num(ml + pw) + "\" y2=\"" + num(mt + ph) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt) + "\" x2=\"" +
         num(ml) + "\" y2=\"" + num(mt + ph) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = i / 5.0;
    svg += "<line x1=\"" + num(px(fx)) + "\" y1=\"" + num(mt + ph) +
           "\" x2=\"" + num(px(fx)) + "\" y2=\"" + num(mt + ph + 6) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(px(fx)) + "\" y=\"" + num(mt + ph + 22) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">" +
           num(fx) + "</text>\n";
    const double fy = ymin + (ymax - ymin) * i / 5.0;
    svg += "<line x1=\"" + num(ml - 6) + "\" y1=\"" + num(py(fy)) +
           "\" x2=\"" + num(ml) + "\" y2=\"" + num(py(fy)) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(ml - 10) + "\" y=\"" + num(py(fy) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"12\">" +
           num(fy) + "</text>\n";
  }
  svg += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" + num(mt + ph + 45) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">safety rate</text>\n";
  svg += "<text x=\"18\" y=\"" + num(mt + ph / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\" transform=\"rotate(-90 18 " +
         num(mt + ph / 2) + ")\">mean return</text>\n";

  auto color = [](Formulation f) {
    return f == Formulation::probabilistic ? "#c0392b" : "#2e6fb7";
  };
  for (const SweepRecord& r : records) {
    svg += "<circle cx=\"" + num(px(r.safety_rate)) + "\" cy=\"" +
           num(py(r.mean_return)) + "\" r=\"4\" fill=\"" +
           color(r.formulation) + "\" fill-opacity=\"0.8\"/>\n";
  }
  // Legend.
  svg += "<circle cx=\"640\" cy=\"60\" r=\"4\" fill=\"#c0392b\"/>\n";
  svg += "<text x=\"650\" y=\"64\" font-family=\"sans-serif\" "
         "font-size=\"12\">probabilistic</text>\n";
  svg += "<circle cx=\"640\" cy=\"78\" r=\"4\" fill=\"#2e6fb7\"/>\n";
  svg += "<text x=\"650\" y=\"82\" font-family=\"sans-serif\" "
         "font-size=\"12\">cumulative</text>\n";
  svg += "</svg>\n";
  return svg;
}

inline void emit_svg_scatter(const std::vector<SweepRecord>& records,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write svg: " + path);
  out << format_sweep_svg(records);
  if (!out) throw std::runtime_error("write failed: " + path);
}

// Spearman rank correlation with average ranks for ties.
inline double spearman_rank_correlation(const std::vector<double>& x,
                                        const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("spearman: need two equal-length samples");
  }
  auto ranks = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = (static_cast<double>(i) + j) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> rx = ranks(x);
  const std::vector<double> ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// Fixed-width safety bands (width = 2 * half_width) with per-formulation
// mean returns, for matched-safety comparison of the two formulations.
struct SafetyBand {
  int band = 0;  // floor(safety / (2 * half_width))
  double prob_mean_return = 0.0;
  double cum_mean_return = 0.0;
  int prob_count = 0;
  int cum_count = 0;
};

inline std::vector<SafetyBand> matched_safety_bands(
    const std::vector<SweepRecord>& records, double half_width = 0.02) {
  const double width = 2.0 * half_width;
  std::map<int, SafetyBand> bands;
  for (const SweepRecord& r : records) {
    const int b = static_cast<int>(std::floor(r.safety_rate / width));
    SafetyBand& sb = bands[b];
    sb.band = b;
    if (r.formulation == Formulation::probabilistic) {
      sb.prob_mean_return += r.mean_return;
      ++sb.prob_count;
    } else {
      sb.cum_mean_return += r.mean_return;
      ++sb.cum_count;
    }
  }
  std::vector<SafetyBand> out;
  for (auto& [key, sb] : bands) {
    if (sb.prob_count > 0) sb.prob_mean_return /= sb.prob_count;
    if (sb.cum_count > 0) sb.cum_mean_return /= sb.cum_count;
    if (sb.prob_count > 0 && sb.cum_count > 0) out.push_back(sb);
  }
  return out;
}

}  // namespace safepg
