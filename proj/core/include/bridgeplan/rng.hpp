#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace bridgeplan {

// Seeded generator with a fixed output sequence on every platform.
//
// std::mt19937_64 has a standard-mandated sequence, but the std::*_distribution
// adaptors do not, so uniform, integer and normal draws are derived here
// explicitly from raw 64-bit words.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) built from the top 53 bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Unbiased integer in [0, n); n must be > 0.
  std::size_t uniform_index(std::size_t n);

  // Standard normal via Box-Muller. Each pair of uniforms (u1, u2) yields
  // r*cos(2*pi*u2) first and r*sin(2*pi*u2) on the following call, with
  // r = sqrt(-2 ln(1 - u1)).
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace bridgeplan
