#include "distopt/random.hpp"

#include <cmath>
#include <numbers>

namespace distopt {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal(double mean, double stddev) {
  double z;
  if (spare_) {
    z = *spare_;
    spare_.reset();
  } else {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    z = r * std::cos(theta);
    spare_ = r * std::sin(theta);
  }
  return mean + stddev * z;
}

}  // namespace distopt
