#ifndef SERPENT_RNG_HPP
#define SERPENT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace serpent {

// Derives a child seed from a master seed, a purpose label and an index.
// The scheme is fixed: it is part of the reproducibility contract, so the
// same (master, purpose, index) always names the same stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                 std::uint64_t index = 0) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(master);
  for (unsigned char ch : purpose) h = mix(h ^ ch);
  return mix(h ^ mix(index));
}

// A seeded random stream with explicit, engine-defined mappings to uniform
// and normal variates.  Distributions are implemented here (not via
// std::*_distribution) so a draw sequence is reproducible and can be
// re-generated independently by test oracles.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1): top 53 bits of one engine output.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; consumes exactly two engine outputs
  // per draw (no caching, so draw counts stay predictable).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace serpent

#endif  // SERPENT_RNG_HPP
