#pragma once

#include <algorithm>
#include <cmath>

#include "aerokin/vec3.hpp"

// Closed forms for the half-space moments that show up when a positive-part
// flux factor (n.z)_+ is integrated against the sphere or against a Gaussian.

namespace aerokin {

// int_{S^2} (n.z)_+ dn = pi |z|
inline double sphere_flux0(const Vec3& z) { return M_PI * norm(z); }

// int_{S^2} n (n.z)_+ dn = (2 pi / 3) z
inline Vec3 sphere_flux1(const Vec3& z) { return (2.0 * M_PI / 3.0) * z; }

// int_{S^2} n (x) n (n.z)_+ dn = (pi |z| / 4) (I + zhat (x) zhat)
inline Mat3 sphere_flux2(const Vec3& z) {
  const double r = norm(z);
  Mat3 res;
  if (r == 0.0) return res;
  const Vec3 zh = z / r;
  res = outer(zh, zh);
  res(0, 0) += 1.0;
  res(1, 1) += 1.0;
  res(2, 2) += 1.0;
  res *= 0.25 * M_PI * r;
  return res;
}

// int_{S^2} (n.a)_+ (n.b)_+ dn = (2/3)|a||b| (sin g + (pi - g) cos g),
// g the angle between a and b.
inline double sphere_flux_pp(const Vec3& a, const Vec3& b) {
  const double ra = norm(a), rb = norm(b);
  if (ra == 0.0 || rb == 0.0) return 0.0;
  double c = dot(a, b) / (ra * rb);
  c = std::clamp(c, -1.0, 1.0);
  const double g = std::acos(c);
  return (2.0 / 3.0) * ra * rb * (std::sin(g) + (M_PI - g) * c);
}

// Moments of the Gaussian flux measure exp(-|y|^2/2) (n.y)_+ dy over R^3:
//   order 0:  2 pi
//   order 1:  pi sqrt(2 pi) n
//   order 2:  2 pi (I + n (x) n)
inline double gaussian_flux0() { return 2.0 * M_PI; }

inline Vec3 gaussian_flux1(const Vec3& n) {
  return (M_PI * std::sqrt(2.0 * M_PI)) * n;
}

inline Mat3 gaussian_flux2(const Vec3& n) {
  Mat3 res = outer(n, n);
  res(0, 0) += 1.0;
  res(1, 1) += 1.0;
  res(2, 2) += 1.0;
  res *= 2.0 * M_PI;
  return res;
}

}  // namespace aerokin
