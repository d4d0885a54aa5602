#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "safepg/gradient.hpp"
#include "safepg/rng.hpp"
#include "safepg/vec2.hpp"

namespace safepg {

// Gaussian policy whose mean is a linear combination of radial basis
// functions on a uniform lattice over [0,10]^2. Parameters are one RBF
// weight vector per action coordinate, stored flat as theta[k*2 + j].
class RbfGaussianPolicy {
 public:
  struct Options {
    double spacing = 0.25;    // lattice separation, d = 41*41 = 1681
    double sigma = 0.5;       // RBF bandwidth
    double cov_x = 0.5;       // action covariance diagonal
    double cov_y = 0.5;
    bool feature_cutoff = false;  // skip kernels with phi < 1e-8
  };

  static constexpr double kLatticeMin = 0.0;
  static constexpr double kLatticeMax = 10.0;
  static constexpr double kCutoffPhi = 1e-8;

  RbfGaussianPolicy() : RbfGaussianPolicy(Options{}) {}

  explicit RbfGaussianPolicy(const Options& opt) : opt_(opt) {
    if (opt.spacing <= 0.0 || opt.sigma <= 0.0 || opt.cov_x <= 0.0 ||
        opt.cov_y <= 0.0) {
      throw std::invalid_argument("RbfGaussianPolicy: nonpositive parameter");
    }
    per_axis_ = static_cast<int>(
                    std::llround((kLatticeMax - kLatticeMin) / opt.spacing)) +
                1;
    centers_.reserve(static_cast<std::size_t>(per_axis_) * per_axis_);
    for (int iy = 0; iy < per_axis_; ++iy) {
      for (int ix = 0; ix < per_axis_; ++ix) {
        centers_.push_back(
            {kLatticeMin + ix * opt.spacing, kLatticeMin + iy * opt.spacing});
      }
    }
    theta_.assign(centers_.size() * 2, 0.0);
    // phi < cutoff  <=>  |s - c|^2 > -2 sigma^2 log(cutoff)
    cutoff_dist_sq_ = -2.0 * opt.sigma * opt.sigma * std::log(kCutoffPhi);
  }

  const Options& options() const { return opt_; }
  std::size_t center_count() const { return centers_.size(); }
  std::size_t param_count() const { return theta_.size(); }
  const std::vector<Vec2>& centers() const { return centers_; }
  std::vector<double>& params() { return theta_; }
  const std::vector<double>& params() const { return theta_; }

  double theta(std::size_t k, int j) const { return theta_[k * 2 + j]; }
  double& theta(std::size_t k, int j) { return theta_[k * 2 + j]; }

  void set_feature_cutoff(bool on) { opt_.feature_cutoff = on; }

  std::vector<double> features(Vec2 s) const {
    std::vector<double> phi(centers_.size());
    const double inv = 1.0 / (2.0 * opt_.sigma * opt_.sigma);
    for (std::size_t k = 0; k < centers_.size(); ++k) {
      phi[k] = std::exp(-norm_sq(s - centers_[k]) * inv);
    }
    return phi;
  }

  Vec2 mean(Vec2 s) const {
    const double inv = 1.0 / (2.0 * opt_.sigma * opt_.sigma);
    Vec2 m{0.0, 0.0};
    for (std::size_t k = 0; k < centers_.size(); ++k) {
      const double d2 = norm_sq(s - centers_[k]);
      if (opt_.feature_cutoff && d2 > cutoff_dist_sq_) continue;
      const double phi = std::exp(-d2 * inv);
      m.x += theta_[k * 2] * phi;
      m.y += theta_[k * 2 + 1] * phi;
    }
    return m;
  }

  Vec2 sample_action(Vec2 s, RngStream& rng) const {
    const Vec2 m = mean(s);
    const double zx = rng.normal();
    const double zy = rng.normal();
    return {m.x + std::sqrt(opt_.cov_x) * zx, m.y + std::sqrt(opt_.cov_y) * zy};
  }

  double log_prob(Vec2 s, Vec2 a) const {
    const Vec2 d = a - mean(s);
    constexpr double kLog2Pi = 1.8378770664093454835606594728112;
    return -kLog2Pi - 0.5 * std::log(opt_.cov_x * opt_.cov_y) -
           0.5 * (d.x * d.x / opt_.cov_x + d.y * d.y / opt_.cov_y);
  }

  // g[k*2+j] += w * phi_k(s) * [Sigma^{-1}(a - mu(s))]_j
  void score_accumulate(GradientVector& g, Vec2 s, Vec2 a, int /*t*/,
                        double w) const {
    if (g.size() != theta_.size()) {
      throw std::invalid_argument("score_accumulate: dimension mismatch");
    }
    const Vec2 d = a - mean(s);
    const double ux = w * d.x / opt_.cov_x;
    const double uy = w * d.y / opt_.cov_y;
    const double inv = 1.0 / (2.0 * opt_.sigma * opt_.sigma);
    for (std::size_t k = 0; k < centers_.size(); ++k) {
      const double d2 = norm_sq(s - centers_[k]);
      if (opt_.feature_cutoff && d2 > cutoff_dist_sq_) continue;
      const double phi = std::exp(-d2 * inv);
      g[k * 2] += phi * ux;
      g[k * 2 + 1] += phi * uy;
    }
  }

  GradientVector score(Vec2 s, Vec2 a) const {
    GradientVector g(param_count());
    score_accumulate(g, s, a, 0, 1.0);
    return g;
  }

  void apply_update(const GradientVector& g, double eta) {
    if (g.size() != theta_.size()) {
      throw std::invalid_argument("apply_update: dimension mismatch");
    }
    for (std::size_t i = 0; i < theta_.size(); ++i) theta_[i] += eta * g[i];
  }

  // Checkpoint format: one header line
  //   rbf d=<d> sigma=<s> cov=<cx>,<cy> spacing=<h>
  // followed by d lines "theta_kx theta_ky" at 17 significant digits.
  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << format_checkpoint();
    if (!out) throw std::runtime_error("write failed: " + path);
  }

  std::string format_checkpoint() const {
    std::string s;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "rbf d=%zu sigma=%.17g cov=%.17g,%.17g spacing=%.17g\n",
                  center_count(), opt_.sigma, opt_.cov_x, opt_.cov_y,
                  opt_.spacing);
    s += buf;
    for (std::size_t k = 0; k < center_count(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", theta_[k * 2],
                    theta_[k * 2 + 1]);
      s += buf;
    }
    return s;
  }

  static RbfGaussianPolicy load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_checkpoint(ss.str(), path);
  }

  static RbfGaussianPolicy parse_checkpoint(const std::string& text,
                                            const std::string& origin) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header)) {
      throw std::runtime_error("empty checkpoint: " + origin);
    }
    std::size_t d = 0;
    Options opt;
    if (std::sscanf(header.c_str(), "rbf d=%zu sigma=%lg cov=%lg,%lg spacing=%lg",
                    &d, &opt.sigma, &opt.cov_x, &opt.cov_y,
                    &opt.spacing) != 5) {
      throw std::runtime_error("bad checkpoint header in " + origin);
    }
    RbfGaussianPolicy p(opt);
    if (p.center_count() != d) {
      throw std::runtime_error("checkpoint dimension mismatch in " + origin);
    }
    for (std::size_t k = 0; k < d; ++k) {
      if (!(in >> p.theta_[k * 2] >> p.theta_[k * 2 + 1])) {
        throw std::runtime_error("truncated checkpoint: " + origin);
      }
    }
    return p;
  }

 private:
  Options opt_;
  int per_axis_ = 0;
  std::vector<Vec2> centers_;
  std::vector<double> theta_;
  double cutoff_dist_sq_ = 0.0;
};

}  // namespace safepg
