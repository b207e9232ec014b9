#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pimo {

/// Pairwise (tree) summation in a fixed order. Deterministic for a given
/// input order and keeps roundoff at O(log n) instead of O(n).
template <typename Scalar>
Scalar pairwise_sum(std::span<const Scalar> xs) {
  constexpr std::size_t kLeaf = 8;
  if (xs.size() <= kLeaf) {
    Scalar acc{0};
    for (const Scalar& x : xs) acc += x;
    return acc;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

template <typename Scalar>
Scalar pairwise_sum(const std::vector<Scalar>& xs) {
  return pairwise_sum(std::span<const Scalar>(xs));
}

/// Population mean and standard deviation (1/N convention).
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  double second_moment = 0.0;
  std::size_t count = 0;

  double standard_error() const {
    return count == 0 ? 0.0 : std::sqrt(std::max(variance(), 0.0)) / std::sqrt(static_cast<double>(count));
  }
  double variance() const { return std * std; }
};

MeanStd mean_std(std::span<const double> xs);

/// Falling factorial D (D-1) ... (D-p+1), accumulated exactly in integers.
/// Exact in double as long as the product stays below 2^53.
inline double falling_factorial(std::int64_t d, int p) {
  std::int64_t acc = 1;
  for (int k = 0; k < p; ++k) {
    const std::int64_t f = d - k;
    if (f <= 0) return 0.0;
    acc *= f;
  }
  return static_cast<double>(acc);
}

inline bool close_relative(double a, double b, double rel, double floor = 1.0) {
  return std::abs(a - b) <= rel * std::max(floor, std::max(std::abs(a), std::abs(b)));
}

}  // namespace pimo
