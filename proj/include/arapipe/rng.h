#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace arapipe {

/// Counter-based generator keyed by (seed, a, b). Streams are a pure function
/// of the key, so work units can be generated in any order or thread and
/// still reproduce. Distributions are implemented here rather than taken
/// from <random>, whose distributions differ across standard libraries.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
      : state_(Mix(Mix(seed ^ 0x243F6A8885A308D3ull) ^ Mix(a + 0x13198A2E03707344ull) ^
                   Mix(b + 0xA4093822299F31D0ull))) {}

  std::uint64_t Next() { return Mix(state_ += kGolden); }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t Uniform(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = Next();
      if (x >= threshold) return x % n;
    }
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double Uniform01() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }

  template <typename T>
  void Shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[Uniform(i)]);
    }
  }

  static std::uint64_t Mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  std::uint64_t state_;
};

}  // namespace arapipe
