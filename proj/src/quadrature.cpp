#include "aerokin/quadrature.hpp"

#include <cmath>

#include "aerokin/common.hpp"

namespace aerokin {

Rule1D gauss_legendre(int n) {
  AK_REQUIRE(n >= 1, "gauss_legendre: need at least one node");
  Rule1D rule;
  rule.x.resize(n);
  rule.w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    rule.x[i] = -z;
    rule.x[n - 1 - i] = z;
    double w = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.w[i] = w;
    rule.w[n - 1 - i] = w;
  }
  return rule;
}

Rule1D gauss_legendre_ab(int n, double a, double b) {
  Rule1D rule = gauss_legendre(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    rule.x[i] = mid + half * rule.x[i];
    rule.w[i] *= half;
  }
  return rule;
}

Rule1D gauss_hermite(int n) {
  AK_REQUIRE(n >= 1, "gauss_hermite: need at least one node");
  Rule1D rule;
  rule.x.resize(n);
  rule.w.resize(n);
  const int m = (n + 1) / 2;
  const double pim4 = 0.7511255444649425;  // pi^{-1/4}
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(n, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.x[n - 1];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.x[n - 2];
    } else {
      z = 2.0 * z - rule.x[n - i + 1];
    }
    double pp = 0.0;
    for (int it = 0; it < 200; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(double(j) / (j + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    rule.x[n - 1 - i] = z;
    rule.x[i] = -z;
    rule.w[n - 1 - i] = 2.0 / (pp * pp);
    rule.w[i] = rule.w[n - 1 - i];
  }
  return rule;
}

Rule1D gauss_hermite_prob(int n) {
  // x -> sqrt(2) x maps exp(-x^2) onto the standard Gaussian.
  Rule1D rule = gauss_hermite(n);
  const double sqrt2 = std::sqrt(2.0);
  const double invsqrtpi = 1.0 / std::sqrt(M_PI);
  for (int i = 0; i < n; ++i) {
    rule.x[i] *= sqrt2;
    rule.w[i] *= invsqrtpi;
  }
  return rule;
}

SphereRule SphereRule::product(int degree) {
  AK_REQUIRE(degree >= 1, "sphere rule: degree must be positive");
  SphereRule rule;
  rule.degree = degree;
  const int nmu = (degree + 2) / 2;
  const int nphi = degree + 1;
  Rule1D mu = gauss_legendre(nmu);
  const double wphi = 2.0 * M_PI / nphi;
  rule.nodes.reserve(std::size_t(nmu) * nphi);
  rule.weights.reserve(std::size_t(nmu) * nphi);
  for (int i = 0; i < nmu; ++i) {
    const double c = mu.x[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (int j = 0; j < nphi; ++j) {
      const double phi = wphi * (j + 0.5);
      rule.nodes.push_back({s * std::cos(phi), s * std::sin(phi), c});
      rule.weights.push_back(mu.w[i] * wphi);
    }
  }
  return rule;
}

Rule1D radial_rule(int n, double rmax) {
  AK_REQUIRE(rmax > 0.0, "radial rule: rmax must be positive");
  return gauss_legendre_ab(n, 0.0, rmax);
}

}  // namespace aerokin
