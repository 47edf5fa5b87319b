#pragma once

#include <vector>

#include "aerokin/vec3.hpp"

namespace aerokin {

struct Rule1D {
  std::vector<double> x;
  std::vector<double> w;
  std::size_t size() const { return x.size(); }
};

// Gauss-Legendre on [-1, 1].
Rule1D gauss_legendre(int n);

// Gauss-Legendre mapped to [a, b].
Rule1D gauss_legendre_ab(int n, double a, double b);

// Gauss-Hermite with weight exp(-x^2) (physicists' convention).
Rule1D gauss_hermite(int n);

// Nodes/weights for int f(x) (2 pi)^{-1/2} exp(-x^2/2) dx = sum w_i f(x_i).
Rule1D gauss_hermite_prob(int n);

/// Fixed-order deterministic rule on the unit sphere, exact for spherical
/// polynomials up to the requested degree (Gauss-Legendre in the polar
/// cosine crossed with a uniform azimuthal grid). Weights sum to 4 pi.
struct SphereRule {
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return nodes.size(); }
  static SphereRule product(int degree);
};

// Nodes/weights for int_0^rmax f(r) dr (Gauss-Legendre, optionally composite).
Rule1D radial_rule(int n, double rmax);

/// Visit nodes of a spherical-shell rule around `center`, covering the ball
/// of radius rmax. The weight passed to fn already contains r^2 dr dsigma,
/// so sum fn-contributions approximate int_{R^3} f(W) dW.
template <class F>
void for_radial_sphere(const Vec3& center, double rmax, int nr, const SphereRule& sph, F&& fn) {
  Rule1D rad = radial_rule(nr, rmax);
  for (std::size_t i = 0; i < rad.size(); ++i) {
    const double r = rad.x[i];
    const double wr = rad.w[i] * r * r;
    for (std::size_t j = 0; j < sph.size(); ++j) {
      fn(center + r * sph.nodes[j], wr * sph.weights[j], r);
    }
  }
}

/// Visit a tensor Gauss-Hermite grid for the Gaussian measure
/// N(center, spread^2 I); weights sum to 1.
template <class F>
void for_gauss_hermite3(const Vec3& center, double spread, int n, F&& fn) {
  Rule1D gh = gauss_hermite_prob(n);
  for (std::size_t i = 0; i < gh.size(); ++i)
    for (std::size_t j = 0; j < gh.size(); ++j)
      for (std::size_t k = 0; k < gh.size(); ++k) {
        const Vec3 x = center + spread * Vec3{gh.x[i], gh.x[j], gh.x[k]};
        fn(x, gh.w[i] * gh.w[j] * gh.w[k]);
      }
}

}  // namespace aerokin
