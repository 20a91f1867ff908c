#ifndef SMOOTHDIV_RNG_HPP
#define SMOOTHDIV_RNG_HPP

#include <cmath>
#include <cstdint>

namespace smoothdiv {

// xoshiro256++ seeded through splitmix64. Self-contained so that identical
// seeds give bit-identical streams on every platform and standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& si : s_) si = splitmix64(x);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1), safe for logs.
  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925286766559 * u2;
    cached_ = rad * std::sin(ang);
    have_cached_ = true;
    return rad * std::cos(ang);
  }

  double exponential() { return -std::log(uniform_pos()); }

  double laplace(double scale) {
    const double u = uniform() - 0.5;
    const double a = 1.0 - 2.0 * std::abs(u);
    const double mag = -scale * std::log(a > 0 ? a : 5e-324);
    return u >= 0 ? mag : -mag;
  }

  // Index in [0, n) by CDF inversion over cumulative weights summing to ~1.
  long categorical(const double* cumw, long n) {
    const double u = uniform();
    long lo = 0, hi = n - 1;
    while (lo < hi) {
      const long mid = (lo + hi) / 2;
      if (u < cumw[mid])
        hi = mid;
      else
        lo = mid + 1;
    }
    return lo;
  }

  static uint64_t splitmix64(uint64_t& x) {
    uint64_t z = (x += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t s_[4];
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// Documented substream scheme: worker/chunk index hashed into the seed.
// Parallel callers derive disjoint streams deterministically.
inline uint64_t substream(uint64_t seed, uint64_t index) {
  uint64_t x = seed ^ (0x632be59bd9b4e019ull + index * 0x9e3779b97f4a7c15ull);
  return Rng::splitmix64(x);
}

}  // namespace smoothdiv

#endif
