#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "bayespred/measure.hpp"

namespace bayespred {

// splitmix64 finalizer; derives independent stream seeds from a root seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Portable uniform source: the 53-bit mantissa construction gives identical
// draws on every standard library, unlike std::uniform_real_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

// Inverse-CDF draw from a probability vector. Zero-probability symbols are
// never returned.
inline Symbol draw_symbol(std::span<const double> probs, double u) {
  double cumulative = 0.0;
  Symbol last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = static_cast<Symbol>(i);
    cumulative += probs[i];
    if (u < cumulative) return last_positive;
  }
  return last_positive;
}

}  // namespace bayespred
