#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace vgraph {

// Floor applied to probabilities before taking logarithms.
inline constexpr double kProbFloor = 1e-10;

// Deterministic RNG. All variates are derived from the raw mt19937_64
// stream by fixed formulas, so results depend only on the seed and the
// engine specification, not on libstdc++ distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  // uniform in (0,1): (k + 0.5) / 2^53
  double uniform() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1p-53;
  }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi_v<double> * u2);
  }

  double gumbel() { return -std::log(-std::log(uniform())); }

  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(eng_() % n);
  }

 private:
  std::mt19937_64 eng_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x,
                 std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double logsumexp(std::span<const double> logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : logits) s += std::exp(v - mx);
  return mx + std::log(s);
}

// logits -> log-probabilities in place; returns the logsumexp.
inline double log_softmax_inplace(std::span<double> logits) {
  const double lse = logsumexp(logits);
  for (double& v : logits) v -= lse;
  return lse;
}

// logits -> probabilities in place (max-subtracted).
inline void softmax_inplace(std::span<double> logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) mx = std::max(mx, v);
  double s = 0.0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    s += v;
  }
  for (double& v : logits) v /= s;
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

// First index attaining the maximum (ties break toward the lowest index).
inline int argmax(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace vgraph
