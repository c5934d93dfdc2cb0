#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dshap {

// Deterministic counter-based pseudo-random stream (splitmix64 core).
// Identical seed + identical call sequence gives identical output on every
// platform; no libc or <random> distribution code is involved.
//
// Substreams derived from (purpose, index) pairs are statistically
// independent, so one consumer cannot perturb another by drawing more or
// fewer values. Estimators key substreams by iteration index so the amount
// of randomness consumed elsewhere never changes a run.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed), state_(mix(seed)) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return finalize(state_);
  }

  // Uniform in [0, 1), 53 bits of precision.
  double next_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n). Bias is O(n / 2^64), far below anything observable.
  std::size_t next_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("next_index: n must be positive");
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller; always consumes exactly two uniforms.
  double next_gaussian() {
    double u1 = next_real();
    double u2 = next_real();
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));  // 1-u1 in (0,1]
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  RandomSource substream(std::uint64_t purpose, std::uint64_t index = 0) const {
    std::uint64_t s = mix(seed_ + 0x9E3779B97F4A7C15ull * (purpose + 1));
    s = mix(s + 0xD1B54A32D192ED03ull * (index + 1));
    return RandomSource(s);
  }

 private:
  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  static std::uint64_t mix(std::uint64_t z) {
    return finalize(z + 0x9E3779B97F4A7C15ull);
  }

  std::uint64_t seed_;
  std::uint64_t state_;
};

// Named substream purposes used across the library. Keeping them in one
// place avoids accidental stream collisions between components.
namespace stream {
inline constexpr std::uint64_t kSubsample = 1;
inline constexpr std::uint64_t kIteration = 2;
inline constexpr std::uint64_t kPermutation = 3;
inline constexpr std::uint64_t kOrdering = 4;
inline constexpr std::uint64_t kFixture = 5;
}  // namespace stream

template <typename T>
void fisher_yates(std::vector<T>& v, RandomSource& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng.next_index(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace dshap
