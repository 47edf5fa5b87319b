#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "aerokin/common.hpp"

namespace aerokin {

/// Dimensionless pair (epsilon, eta) plus the inverse surface-thermal-speed
/// parameter beta of the diffuse-reflection model. epsilon is the
/// particle/gas thermal speed ratio, eta the molecule/particle mass ratio.
struct ScalingParams {
  double epsilon = 0.1;
  double eta = 0.01;
  double beta = 1.0;

  void validate() const {
    AK_REQUIRE(epsilon > 0.0 && epsilon <= 1.0, "ScalingParams: epsilon must be in (0, 1]");
    AK_REQUIRE(eta > 0.0 && eta <= 1.0, "ScalingParams: eta must be in (0, 1]");
    AK_REQUIRE(beta > 0.0, "ScalingParams: beta must be positive");
  }
};

/// Limit schedules must have eta/epsilon^2 -> 0; the default uses eta =
/// epsilon^3 so that eta/epsilon^2 = epsilon.
struct Schedule {
  std::vector<std::pair<double, double>> points;  // (epsilon, eta)

  static Schedule cubic(const std::vector<double>& epsilons) {
    Schedule s;
    for (double e : epsilons) s.points.push_back({e, e * e * e});
    s.validate();
    return s;
  }

  static Schedule default_schedule() {
    return cubic({0.4, 0.283, 0.2, 0.141, 0.1, 0.0707, 0.05});
  }

  void validate() const {
    AK_REQUIRE(!points.empty(), "Schedule: empty");
    double prev = std::numeric_limits<double>::infinity();
    for (auto [e, h] : points) {
      AK_REQUIRE(e > 0.0 && h > 0.0, "Schedule: nonpositive entry");
      double ratio = h / (e * e);
      AK_REQUIRE(ratio <= prev + 1e-12, "Schedule: eta/epsilon^2 must be decreasing");
      prev = ratio;
    }
  }
};

}  // namespace aerokin
