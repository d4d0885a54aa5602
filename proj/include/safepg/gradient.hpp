#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace safepg {

// Flat gradient with the same indexing as the owning policy's parameter
// table.
struct GradientVector {
  std::vector<double> v;

  GradientVector() = default;
  explicit GradientVector(std::size_t n) : v(n, 0.0) {}

  std::size_t size() const { return v.size(); }
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }

  void add_scaled(const GradientVector& g, double w) {
    if (g.size() != size()) {
      throw std::invalid_argument("GradientVector: dimension mismatch");
    }
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += w * g.v[i];
  }

  void scale(double w) {
    for (double& x : v) x *= w;
  }

  double norm() const {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }

  bool all_finite() const {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }
};

inline GradientVector operator-(const GradientVector& a,
                                const GradientVector& b) {
  GradientVector d(a.size());
  d.v = a.v;
  d.add_scaled(b, -1.0);
  return d;
}

inline double dot(const GradientVector& a, const GradientVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("GradientVector: dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.v[i] * b.v[i];
  return s;
}

// Vector-level relative error under the max norm; zero when both sides
// vanish.
inline double rel_err(const GradientVector& a, const GradientVector& b) {
  const double denom = std::max(a.max_abs(), b.max_abs());
  if (denom == 0.0) return 0.0;
  return (a - b).max_abs() / denom;
}

}  // namespace safepg
