#include <cmath>

#include "doctest.h"

#include "aerokin/mc.hpp"
#include "aerokin/quadrature.hpp"
#include "aerokin/rng.hpp"
#include "aerokin/scaling.hpp"
#include "aerokin/sphere_moments.hpp"

using namespace aerokin;

namespace {

// Reference for half-space flux integrals: spherical coordinates aligned
// with one vector, the positive part handled by restricting mu to [0, 1].
double flux_pp_reference(const Vec3& a, const Vec3& b) {
  SphereRule dense = SphereRule::product(120);
  double s = 0.0;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    const double fa = dot(a, dense.nodes[i]);
    const double fb = dot(b, dense.nodes[i]);
    if (fa > 0.0 && fb > 0.0) s += dense.weights[i] * fa * fb;
  }
  return s;
}

}  // namespace

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  Rule1D r = gauss_legendre(8);
  double s0 = 0.0, s2 = 0.0, s14 = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    s0 += r.w[i];
    s2 += r.w[i] * r.x[i] * r.x[i];
    s14 += r.w[i] * std::pow(r.x[i], 14);
  }
  CHECK(s0 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s2 == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(s14 == doctest::Approx(2.0 / 15.0).epsilon(1e-13));
}

TEST_CASE("probabilists gauss-hermite reproduces gaussian moments") {
  Rule1D r = gauss_hermite_prob(12);
  double m0 = 0, m2 = 0, m4 = 0, m6 = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    m0 += r.w[i];
    m2 += r.w[i] * r.x[i] * r.x[i];
    m4 += r.w[i] * std::pow(r.x[i], 4);
    m6 += r.w[i] * std::pow(r.x[i], 6);
  }
  CHECK(m0 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m4 == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(m6 == doctest::Approx(15.0).epsilon(1e-13));
}

TEST_CASE("sphere rule: mass and low moments") {
  SphereRule r = SphereRule::product(14);
  double mass = 0.0;
  Mat3 second{};
  for (std::size_t i = 0; i < r.size(); ++i) {
    mass += r.weights[i];
    Mat3 nn = outer(r.nodes[i], r.nodes[i]);
    nn *= r.weights[i];
    second += nn;
  }
  CHECK(mass == doctest::Approx(4.0 * M_PI).epsilon(1e-13));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(second(i, j) == doctest::Approx(i == j ? 4.0 * M_PI / 3.0 : 0.0).epsilon(1e-12));
}

TEST_CASE("half-space sphere moments match dense quadrature") {
  RngStream rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec3 z = 2.0 * rng.normal3();
    SphereRule dense = SphereRule::product(100);
    double f0 = 0.0;
    Vec3 f1{};
    Mat3 f2{};
    for (std::size_t i = 0; i < dense.size(); ++i) {
      const double flux = dot(z, dense.nodes[i]);
      if (flux <= 0.0) continue;
      f0 += dense.weights[i] * flux;
      f1 += (dense.weights[i] * flux) * dense.nodes[i];
      Mat3 nn = outer(dense.nodes[i], dense.nodes[i]);
      nn *= dense.weights[i] * flux;
      f2 += nn;
    }
    CHECK(f0 == doctest::Approx(sphere_flux0(z)).epsilon(5e-4));
    CHECK(norm(f1 - sphere_flux1(z)) <= 5e-4 * norm(z));
    CHECK((f2 - sphere_flux2(z)).frobenius() <= 2e-3 * norm(z));
  }
}

TEST_CASE("two-cone overlap integral closed form") {
  RngStream rng(7);
  for (int trial = 0; trial < 8; ++trial) {
    const Vec3 a = 1.5 * rng.normal3();
    const Vec3 b = 1.5 * rng.normal3();
    const double ref = flux_pp_reference(a, b);
    CHECK(sphere_flux_pp(a, b) == doctest::Approx(ref).epsilon(2e-3));
  }
  // aligned, orthogonal, opposite
  CHECK(sphere_flux_pp({2, 0, 0}, {3, 0, 0}) == doctest::Approx(2.0 * M_PI / 3.0 * 6.0).epsilon(1e-12));
  CHECK(sphere_flux_pp({1, 0, 0}, {0, 1, 0}) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(sphere_flux_pp({1, 0, 0}, {-1, 0, 0}) == doctest::Approx(0.0));
}

TEST_CASE("gaussian flux moments match hemisphere-exact quadrature") {
  // With n along the pole the positive part restricts mu to [0, 1], where
  // Gauss-Legendre is exact for the polynomial angular factors.
  const Vec3 n{0.0, 0.0, 1.0};
  Rule1D rad = radial_rule(96, 12.0);
  Rule1D mu = gauss_legendre_ab(12, 0.0, 1.0);
  const int nphi = 24;
  double g0 = 0.0;
  Vec3 g1{};
  Mat3 g2{};
  for (std::size_t i = 0; i < rad.size(); ++i) {
    const double r = rad.x[i];
    const double wr = rad.w[i] * r * r * std::exp(-0.5 * r * r);
    for (std::size_t j = 0; j < mu.size(); ++j) {
      const double c = mu.x[j];
      const double s = std::sqrt(1.0 - c * c);
      for (int k = 0; k < nphi; ++k) {
        const double phi = 2.0 * M_PI * (k + 0.5) / nphi;
        const Vec3 dir{s * std::cos(phi), s * std::sin(phi), c};
        const double w = wr * mu.w[j] * (2.0 * M_PI / nphi) * r * c;
        g0 += w;
        g1 += w * (r * dir);
        Mat3 yy = outer(r * dir, r * dir);
        yy *= w;
        g2 += yy;
      }
    }
  }
  CHECK(g0 == doctest::Approx(gaussian_flux0()).epsilon(1e-12));
  CHECK(norm(g1 - gaussian_flux1(n)) <= 1e-10);
  CHECK((g2 - gaussian_flux2(n)).frobenius() <= 1e-9);
}

TEST_CASE("rng streams are deterministic and splittable") {
  RngStream a(123), b(123), c(124);
  for (int i = 0; i < 32; ++i) {
    const double va = a.uniform01();
    CHECK(va == b.uniform01());
  }
  CHECK(a.uniform01() != c.uniform01());
  RngStream d1 = RngStream::derived(9, 0), d2 = RngStream::derived(9, 1);
  CHECK(d1.next_u64() != d2.next_u64());
}

TEST_CASE("mc_run is reproducible for any worker count") {
  auto fn = [](RngStream& rng, std::vector<double>& out) { out[0] = rng.normal(); };
  McEstimate e1 = mc_run(77, 100000, 1, fn, 1);
  McEstimate e3 = mc_run(77, 100000, 1, fn, 3);
  CHECK(e1.mean[0] == e3.mean[0]);
  CHECK(e1.stderr_[0] == e3.stderr_[0]);
  CHECK(std::abs(e1.mean[0]) <= 3.0 * e1.stderr_[0] + 1e-9);
  CHECK(e1.stderr_[0] == doctest::Approx(1.0 / std::sqrt(100000.0)).epsilon(0.05));
}

TEST_CASE("schedule validation") {
  CHECK_NOTHROW(Schedule::default_schedule().validate());
  Schedule bad;
  bad.points = {{0.1, 0.001}, {0.2, 0.04}};  // eta/eps^2 increasing
  CHECK_THROWS_AS(bad.validate(), ContractError);
  ScalingParams p{0.0, 0.1, 1.0};
  CHECK_THROWS_AS(p.validate(), ContractError);
}
