#pragma once

#include <cstdint>

namespace twlab {

// SplitMix64.  All randomness in the lab flows from one user seed through
// this generator; the update constants below fully specify the stream, so
// identical (seed, key) pairs give bit-identical draws on every platform.
//
//   state += 0x9E3779B97F4A7C15
//   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in (0,1): 53 mantissa bits, offset so 0 is never returned.
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Splits a child stream keyed by `key`; mixing the key through the output
  // function decorrelates streams of adjacent keys.
  SplitMix64 split(std::uint64_t key) const {
    SplitMix64 mixer(state_ ^ (0xD1B54A32D192ED03ULL * (key + 1)));
    return SplitMix64(mixer.next_u64());
  }

 private:
  std::uint64_t state_;
};

}  // namespace twlab
