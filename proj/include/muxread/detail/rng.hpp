#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

#include "muxread/units.hpp"

namespace muxread::detail {

// splitmix64 finalizer (Vigna).  Used both as a stream hasher and as the
// per-stream generator step, which keeps every shot's randomness a pure
// function of (seed, indices) and therefore independent of thread schedule.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
  return mix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2) + mix64(b)));
}

// FNV-1a, used for config hashes and subsystem seed derivation from strings.
inline uint64_t fnv1a(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Small counter-based RNG: one instance per (seed, substream) tuple.
// Draw order within a stream is part of the reproducibility contract.
class Rng {
 public:
  explicit Rng(uint64_t stream_key) : state_(mix64(stream_key)) {}

  Rng(uint64_t seed, uint64_t s1, uint64_t s2 = 0, uint64_t s3 = 0)
      : state_(mix64(hash_combine(hash_combine(hash_combine(seed, s1), s2), s3))) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on (0,1): never returns 0 or 1, safe under log().
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; hand-rolled so streams are identical
  // across standard-library implementations.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  // Exponential with the given mean (mean <= 0 returns +inf: disabled channel).
  double exponential(double mean) {
    if (!(mean > 0.0)) return std::numeric_limits<double>::infinity();
    return -mean * std::log(uniform());
  }

 private:
  uint64_t state_;
};

}  // namespace muxread::detail
