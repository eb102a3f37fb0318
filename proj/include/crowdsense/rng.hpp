#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "crowdsense/errors.hpp"

namespace crowdsense {

// splitmix64 mixing step. Used for seeding and for deriving independent
// stream seeds from (master seed, stream id).
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// xoshiro256** generator. Small, fast, and fully portable: identical output
// on every platform for a given seed, which the reproducibility guarantees
// rely on (std::uniform_real_distribution is not portable across standard
// library implementations).
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) { reseed(seed); }

  // Independent stream derived from a master seed and a stream id. Streams
  // with different ids are decorrelated by two rounds of splitmix64 mixing.
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::uint64_t s = master_seed;
    std::uint64_t a = splitmix64(s);
    s = a ^ (stream_id * 0xD1342543DE82EF95ull + 0x2545F4914F6CDD1Dull);
    reseed(splitmix64(s));
  }

  void reseed(std::uint64_t seed) {
    for (auto& word : state_) word = splitmix64(seed);
    // All-zero state is the one forbidden xoshiro state; splitmix64 cannot
    // produce four zero words in a row, so no further check is needed.
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform integer in [0, n), unbiased via rejection.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw ValidationError("next_below: n must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // UniformRandomBitGenerator interface.
  std::uint64_t operator()() { return next_u64(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return std::numeric_limits<std::uint64_t>::max(); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
};

// Seed for a child scope (one simulation of a campaign, one agent of a
// population). Matches RngStream's stream derivation so that seeds and
// streams never collide across ids.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream_id) {
  std::uint64_t s = master_seed;
  std::uint64_t a = splitmix64(s);
  s = a ^ (stream_id * 0xD1342543DE82EF95ull + 0x2545F4914F6CDD1Dull);
  return splitmix64(s);
}

}  // namespace crowdsense
