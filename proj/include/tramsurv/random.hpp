#pragma once
// Reproducible randomness. std::mt19937_64 has a fully specified output
// sequence; the mapping to doubles and indices is done here rather than by
// the implementation-defined std:: distributions.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>

namespace tramsurv::rng {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept {
  return mix(mix(mix(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

/// Maps 64 random bits to the open interval (0, 1).
constexpr double to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Counter-based uniform keyed by (seed, a, b); independent of call order.
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0) noexcept {
  return to_open_unit(key(seed, a, b));
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(mix(seed)) {}

  double uniform() { return to_open_unit(engine_()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential(double rate = 1.0) { return -std::log(uniform()) / rate; }

  template <class It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
      std::swap(first[i - 1], first[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tramsurv::rng
