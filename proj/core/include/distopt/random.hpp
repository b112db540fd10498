#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace distopt {

/// Seeded generator with platform-independent uniform and normal draws.
/// std::mt19937_64 output is fully specified by the standard; the
/// distributions are implemented here (53-bit uniforms, Box-Muller normals)
/// because the standard library's are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Normal(mean, stddev) via Box-Muller; stddev 0 returns mean exactly.
  double normal(double mean = 0.0, double stddev = 1.0);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace distopt
