#pragma once

#include <cstdint>
#include <random>

namespace pimo {

/// Seedable, splittable generator. Streams are derived from (seed, index)
/// through SplitMix64 so independent repetitions never share state.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(mix(seed)) {}

  Rng split(std::uint64_t index) const { return Rng(mix(seed_ ^ mix(index + 0x632be59bd9b4e019ULL))); }

  std::uint64_t seed() const { return seed_; }
  engine_type& engine() { return engine_; }

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::uint64_t seed_;
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace pimo
