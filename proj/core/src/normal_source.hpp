#pragma once

#include "storm/types.hpp"

#include <cmath>
#include <random>

namespace storm::detail {

// Standard normals from a fully specified generator: mt19937_64 is pinned by
// the standard, and Box-Muller avoids the implementation-defined library
// distributions, so identical seeds give identical streams everywhere.
class NormalSource {
public:
  explicit NormalSource(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    spare_ = radius * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return radius * std::cos(2.0 * kPi * u2);
  }

private:
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace storm::detail
