// SPDX-License-Identifier: Apache-2.0
//
// Deterministic, platform-independent randomness helpers. Everything that
// draws random numbers in this project goes through these so a top-level
// seed reproduces bit-identical traces.

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace elastree {

// splitmix64 mixer (public-domain constants, Steele et al.).
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d4a2ca9f6cc0ebULL;
  return z ^ (z >> 31);
}

inline uint64_t mix64(uint64_t x) {
  uint64_t s = x;
  return splitmix64(s);
}

// Seed-splitting rule: child = mix(master ^ FNV-1a(tag) ^ index).
// Documented in the README; sub-seeds are stable across runs and platforms.
inline uint64_t split_seed(uint64_t master, std::string_view tag, uint64_t index = 0) {
  uint64_t h = 14695981039346656037ULL;
  for (char c : tag) {
    h ^= static_cast<uint64_t>(static_cast<unsigned char>(c));
    h *= 1099511628211ULL;
  }
  uint64_t s = master ^ h;
  s = mix64(s);
  s ^= index + 0x9e3779b97f4a7c15ULL;
  return mix64(s);
}

// Small counter-based generator built on splitmix64.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) { return n ? next_u64() % n : 0; }

  // Exponential with the given mean. Inverse CDF on (0, 1]; next_double()
  // is strictly below 1, so the log argument stays positive.
  double next_exponential(double mean) { return -mean * std::log(1.0 - next_double()); }

 private:
  uint64_t state_;
};

}  // namespace elastree
