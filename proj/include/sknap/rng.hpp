#pragma once

#include <cstdint>

namespace sknap::rng {

// 64-bit finaliser with full avalanche (splitmix64-style increment + mix).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stateless counter-mode draw: every output is a pure function of the four
// key words, so draws are reproducible independently of evaluation order.
constexpr std::uint64_t keyed_u64(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t field,
                                  std::uint64_t counter) noexcept {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ mix64(stream ^ 0xa0761d6478bd642fULL));
  h = mix64(h ^ mix64(field ^ 0xe7037ed1a0b428dbULL));
  h = mix64(h ^ mix64(counter ^ 0x8ebc6af09c88c6e3ULL));
  return h;
}

// Map 64 random bits to the open interval (0,1): 52 bits plus a half-step
// offset, so inverse-CDF transforms never receive an endpoint. With 52 bits
// both extremes stay representable strictly inside (0,1); a 53-bit mantissa
// would round the top value to exactly 1.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

inline double keyed_uniform01(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t field,
                              std::uint64_t counter) noexcept {
  return to_unit(keyed_u64(seed, stream, field, counter));
}

inline double keyed_uniform(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t field, std::uint64_t counter,
                            double lo, double hi) noexcept {
  return lo + (hi - lo) * keyed_uniform01(seed, stream, field, counter);
}

// Sequential view over one (seed, stream, field) lane.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t field) noexcept
      : seed_(seed), stream_(stream), field_(field) {}

  std::uint64_t next_u64() noexcept {
    return keyed_u64(seed_, stream_, field_, counter_++);
  }
  double uniform01() noexcept { return to_unit(next_u64()); }
  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform01();
  }
  // Unbiased integer in [0, n) by rejection above the top multiple of n.
  // When n divides 2^64 (powers of two) every draw is accepted; the limit
  // would wrap to zero there, so that case must skip the rejection loop.
  std::uint64_t below(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    const std::uint64_t rem = (0 - n) % n;
    std::uint64_t r = next_u64();
    if (rem != 0) {
      const std::uint64_t limit = 0 - rem;
      while (r >= limit) r = next_u64();
    }
    return r % n;
  }
  std::uint64_t counter() const noexcept { return counter_; }
  void seek(std::uint64_t counter) noexcept { counter_ = counter; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t field_;
  std::uint64_t counter_ = 0;
};

}  // namespace sknap::rng
