#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace cmsent {

/// SplitMix64 generator (Steele, Lea & Flood 2014) with the published
/// constants. Every seeded behaviour in the library (dataset splits, weight
/// initialization, epoch shuffles) draws from this generator so results are
/// bit-identical across platforms and standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, n). Plain modulo: the bias is negligible for
  /// n << 2^64 and keeps the mapping trivial to reproduce elsewhere.
  uint64_t next_below(uint64_t n) { return next() % n; }

  /// Uniform double in [0, 1), 53 random bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

 private:
  uint64_t state_;
};

/// In-place Fisher-Yates shuffle driven by SplitMix64.
template <typename T>
void fisher_yates_shuffle(std::vector<T>& items, SplitMix64& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.next_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace cmsent
