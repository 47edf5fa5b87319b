#pragma once

#include <cmath>
#include <vector>

#include "aerokin/common.hpp"
#include "aerokin/vec3.hpp"

namespace aerokin {

/// Standard Maxwellian M(w) = (2 pi)^{-3/2} exp(-|w|^2/2).
struct Maxwellian {
  static double value(const Vec3& w) {
    return std::pow(2.0 * M_PI, -1.5) * std::exp(-0.5 * norm2(w));
  }
  static double radial(double r) {
    return std::pow(2.0 * M_PI, -1.5) * std::exp(-0.5 * r * r);
  }
};

/// Hydrodynamic fluctuation g(w) = rho + u.w + theta (|w|^2 - 3)/2.
struct HermitePerturbation {
  double rho = 0.0;
  Vec3 u{};
  double theta = 0.0;

  double operator()(const Vec3& w) const {
    return rho + dot(u, w) + 0.5 * theta * (norm2(w) - 3.0);
  }
  bool is_zero() const { return rho == 0.0 && theta == 0.0 && norm2(u) == 0.0; }
};

/// Weighted point set in velocity space for the dispersed phase.
struct VelocityCloud {
  std::vector<Vec3> v;
  std::vector<double> weight;

  double total_weight() const {
    double s = 0.0;
    for (double w : weight) s += w;
    return s;
  }
  void validate() const {
    AK_REQUIRE(!v.empty() && v.size() == weight.size(), "VelocityCloud: size mismatch");
    for (double w : weight) AK_REQUIRE(w > 0.0, "VelocityCloud: weights must be positive");
  }
  static VelocityCloud point(const Vec3& v0, double w = 1.0) { return {{v0}, {w}}; }
};

}  // namespace aerokin
