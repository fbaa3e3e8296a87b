#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace otflow {

// Pairwise (tree) summation. The split points depend only on the length, so
// the result is reproducible regardless of thread count or platform.
inline double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 16;
  if (values.size() <= kLeaf) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

// The tanh form is exact at the usual anchors (sigmoid(ln 9) == 0.9) and has
// no cancellation for x >= 0; the exp form keeps relative accuracy for x < 0.
inline double sigmoid(double x) {
  if (x >= 0.0) return 0.5 + 0.5 * std::tanh(0.5 * x);
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline double clamp_probability(double p, double delta) {
  return std::clamp(p, delta, 1.0 - delta);
}

// sigma(logit(clamp(p)) + delta_logit), kept inside [delta, 1 - delta].
// A zero increment returns the clamped input unchanged.
inline double accumulate_logit(double p, double delta_logit, double delta) {
  const double q = clamp_probability(p, delta);
  if (delta_logit == 0.0) return q;
  return clamp_probability(sigmoid(logit(q) + delta_logit), delta);
}

}  // namespace otflow
