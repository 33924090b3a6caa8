#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace sqzlab {

// mt19937_64 has a standard-mandated output sequence, but the stdlib
// distributions do not, so the gaussians are drawn with an explicit
// Box-Muller transform. Traces therefore reproduce bit-for-bit anywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform draw in (0, 1].
  double uniform() {
    return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal draw.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double a = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Stable per-stream seed derivation (splitmix64 step), used by scans that
/// fan one base seed out over repeated runs.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace sqzlab
