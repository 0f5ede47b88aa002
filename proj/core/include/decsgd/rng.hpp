#pragma once

#include <cmath>
#include <cstdint>

namespace decsgd {

// Counter-based deterministic RNG. Every stream is keyed by
// (seed, agent, iteration, purpose), so draws are independent of scheduling
// order and identical across algorithms that consume the same key.
enum class StreamPurpose : std::uint64_t {
  gradient = 0,
  init = 1,
  partition = 2,
  data = 3,
};

namespace detail {
inline std::uint64_t splitmix64_fin(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t agent, std::uint64_t iteration,
            StreamPurpose purpose) {
    std::uint64_t k = detail::splitmix64_fin(seed);
    k = detail::splitmix64_fin(k ^ (0x6A09E667F3BCC909ULL + agent));
    k = detail::splitmix64_fin(k ^ (0xBB67AE8584CAA73BULL + iteration));
    state_ = detail::splitmix64_fin(
        k ^ (0x3C6EF372FE94F82BULL + static_cast<std::uint64_t>(purpose)));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t state_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// Derives a child seed from a base seed and an index path, used by the sweep
// scheduler to give each grid point an independent but reproducible seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b, std::uint64_t c) {
  std::uint64_t k = detail::splitmix64_fin(base);
  k = detail::splitmix64_fin(k ^ (0x510E527FADE682D1ULL + a));
  k = detail::splitmix64_fin(k ^ (0x9B05688C2B3E6C1FULL + b));
  return detail::splitmix64_fin(k ^ (0x1F83D9ABFB41BD6BULL + c));
}

}  // namespace decsgd
