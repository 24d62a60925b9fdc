#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace voxkit {

// Seeded Gaussian draws via mt19937_64 and an explicit Box-Muller step.
// std::normal_distribution is implementation-defined, so this keeps the
// sample stream identical across standard libraries.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

  // U(0,1) in the open interval (53-bit mantissa, never exactly 0).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace voxkit
