#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace natmaplab {

/* splitmix64, used to derive well-separated stream seeds from a user seed */
inline uint64_t split_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/* Deterministic generator wrapper. All randomized code paths draw through
   this in a fixed order, and the variate transforms are spelled out here
   rather than taken from std distributions (whose sequences are
   implementation-defined), so results depend only on the seed. */
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0) : gen_(split_seed(seed, stream)) {}

  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() { /* polar Box-Muller with one cached variate */
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  uint64_t integer(uint64_t bound) { /* in [0, bound), rejection-free enough */
    return static_cast<uint64_t>(uniform() * static_cast<double>(bound)) % bound;
  }

  std::mt19937_64& raw() { return gen_; }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace natmaplab
