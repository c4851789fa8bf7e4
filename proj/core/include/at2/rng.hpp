#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace at2 {

// Deterministic PRNG used everywhere randomness is needed. The standard
// <random> engines are portable but the distributions are not, and the
// simulator promises bit-identical traces for a given seed, so sampling is
// implemented here from raw 64-bit outputs only.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  // Derives an independent stream; used to give each process its own RNG.
  Rng fork(std::uint64_t salt) const {
    std::uint64_t mix = s_[0] ^ (s_[2] * 0x9e3779b97f4a7c15ULL) ^ salt;
    return Rng(splitmix64(mix));
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;  // xoshiro256**
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Unbiased integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % bound;
  }

  // Integer in [lo, hi] inclusive.
  std::uint64_t range(std::uint64_t lo, std::uint64_t hi) {
    return lo + below(hi - lo + 1);
  }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool chance(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return unit() < p;
  }

  // Knuth's product method, halving the mean first so the running product
  // stays comfortably above the double underflow threshold.
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::uint64_t total = 0;
    while (mean > 60.0) {
      const double half = mean / 2.0;
      total += poisson(half);
      mean -= half;
    }
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = unit();
    while (prod > limit) {
      ++k;
      prod *= unit();
    }
    return total + k;
  }

  // Uniform set of `count` distinct values from [0, universe) (Floyd).
  std::vector<std::uint32_t> distinct(std::uint32_t count, std::uint32_t universe) {
    if (count >= universe) {
      std::vector<std::uint32_t> all(universe);
      for (std::uint32_t i = 0; i < universe; ++i) all[i] = i;
      shuffle(all);
      return all;
    }
    std::vector<std::uint32_t> out;
    out.reserve(count);
    for (std::uint32_t j = universe - count; j < universe; ++j) {
      const auto t = static_cast<std::uint32_t>(below(j + 1));
      bool seen = false;
      for (auto v : out) {
        if (v == t) { seen = true; break; }
      }
      out.push_back(seen ? j : t);
    }
    return out;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

}  // namespace at2
