#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace sparsevo {

/// SplitMix64 (Steele, Lea, Flood 2014). Used wherever a stream must be
/// reproducible across implementations: toy model parameters and seed hashing.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Attack-side random source. mt19937_64 output is fixed by the standard;
/// the helpers below avoid <random> distributions, whose output is not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  bool coin() { return (engine_() >> 63) != 0; }

  /// Picks `k` distinct elements of `pool` uniformly (partial Fisher-Yates).
  /// The pool is reordered in place; the sample is its first k entries.
  template <class T>
  std::span<T> sample(std::vector<T>& pool, std::size_t k) {
    k = std::min(k, pool.size());
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(index(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    return std::span<T>(pool.data(), k);
  }

 private:
  std::mt19937_64 engine_;
};

/// FNV-1a 64 followed by the SplitMix64 finalizer.
inline std::uint64_t hash_bytes(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return SplitMix64(h).next();
}

}  // namespace sparsevo
