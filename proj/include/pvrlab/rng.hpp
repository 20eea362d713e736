#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pvrlab {

// splitmix64 step: advances state, returns a mixed 64-bit value.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Mixes a base seed with up to two run coordinates (frozen index, repeat,
// worker id, ...). Pure function of its arguments, so parallel schedules
// cannot change any derived stream.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a,
                              std::uint64_t b = 0) {
  std::uint64_t s = base;
  s = splitmix64(s) ^ (a * 0x9e3779b97f4a7c15ull + 0x165667b19e3779f9ull);
  s = splitmix64(s) ^ (b * 0xbf58476d1ce4e5b9ull + 0x27d4eb2f165667c5ull);
  return splitmix64(s);
}

// xoshiro256++ with explicitly coded uniform and gaussian draws; the stream
// for a given seed is pinned by this header, not by the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform in [0, 1), 53-bit resolution
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller, sine branch discarded: one gaussian per two uniforms.
  double gaussian(double mean = 0.0, double stddev = 1.0) {
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    const double u2 = uniform01();
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) *
                      std::cos(2.0 * std::numbers::pi * u2);
  }

  // uniform integer in [0, n), exact via rejection
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // ±1 with equal probability
  double sign() { return (next_u64() >> 63) ? -1.0 : 1.0; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

}  // namespace pvrlab
