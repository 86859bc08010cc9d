#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ipdp {

// All randomness in the pipeline flows through the two generators below.
// Both are fully specified so that corpora, pair lists and training runs
// reproduce bit-exactly on any platform with IEEE-754 doubles.

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr double kTwoPi = 6.283185307179586476925286766559;

inline uint64_t splitmix64(uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a64(const void* data, size_t n) {
  const auto* p = static_cast<const uint8_t*>(data);
  uint64_t h = 0xCBF29CE484222325ULL;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

// Sequential generator: std::mt19937_64 (bit-exact per the standard) with
// Box-Muller normal variates and rejection-sampled bounded integers.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0,1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0,1): never returns 0, safe under log().
  double next_open() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  // Uniform integer in [0, n), unbiased via rejection.
  uint64_t next_below(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Standard normal via Box-Muller; the sine partner is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_open();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = kTwoPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Fisher-Yates; std::shuffle is implementation-defined, this is not.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Counter-based Gaussian stream: value i of stream `seed` depends only on
// (seed, i), so consumers may evaluate pixels in any order or in parallel
// and still agree bit-for-bit with a serial pass.
//
// Two splitmix64 outputs feed one Box-Muller cosine branch:
//   u1 = (splitmix64-at(seed, 2i)   >> 11 + 0.5) * 2^-53   in (0,1)
//   u2 = (splitmix64-at(seed, 2i+1) >> 11)       * 2^-53   in [0,1)
//   n  = sqrt(-2 ln u1) * cos(2 pi u2)
inline double counter_normal(uint64_t seed, uint64_t i) {
  const uint64_t z1 = splitmix64(seed + 2 * i * kGolden);
  const uint64_t z2 = splitmix64(seed + (2 * i + 1) * kGolden);
  const double u1 = (static_cast<double>(z1 >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(z2 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace ipdp
