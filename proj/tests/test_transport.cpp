#include <cmath>

#include "doctest.h"

#include "aerokin/transport.hpp"

#include "aerokin/mc.hpp"

using namespace aerokin;

namespace {

LinearizedOperator::Options light() {
  LinearizedOperator::Options o;
  o.gh_nodes = 8;
  o.sphere_degree = 16;
  o.radial_nodes = 48;
  return o;
}

}  // namespace

TEST_CASE("maxwell kernel: tensor harmonic is an eigenfunction of L") {
  // Quadrature oracle computed before anything else: for the angle-only
  // kernel with amplitude c0, L (w1 w2) = (8 pi / 5) c0 (w1 w2).
  LinearizedOperator op(MolecularKernel::maxwell(), light());
  auto phi = [](const Vec3& w) { return w.x * w.y; };
  const double expect = (8.0 * M_PI / 5.0) * (1.0 / (4.0 * M_PI));
  CHECK(expect == doctest::Approx(0.4).epsilon(1e-15));
  for (const Vec3& w : {Vec3{1.0, 0.7, -0.4}, Vec3{0.3, 2.0, 1.1}, Vec3{-1.5, 0.5, 0.2}}) {
    const double img = op.apply(phi, w);
    CHECK(img == doctest::Approx(expect * w.x * w.y).epsilon(1e-10));
  }
}

TEST_CASE("collision invariants are annihilated pointwise") {
  LinearizedOperator op(MolecularKernel::maxwell(), light());
  const Vec3 w{1.2, -0.3, 0.8};
  CHECK(std::abs(op.apply([](const Vec3&) { return 1.0; }, w)) <= 1e-12);
  CHECK(std::abs(op.apply([](const Vec3& x) { return x.y; }, w)) <= 1e-12);
  CHECK(std::abs(op.apply([](const Vec3& x) { return norm2(x); }, w)) <= 1e-12);

  // L2(M) norms of the images over the radial grid
  CHECK(op.sector_image_norm(sector_harmonic(0), [](double) { return 1.0; }) <= 1e-8);
  CHECK(op.sector_image_norm(sector_harmonic(1), [](double) { return 1.0; }) <= 1e-8);
  CHECK(op.sector_image_norm(sector_harmonic(0), [](double r2) { return r2; }) <= 1e-8);
}

TEST_CASE("sector blocks: orthonormal basis, symmetry, maxwell diagonal") {
  LinearizedOperator op(MolecularKernel::maxwell(), light());
  SectorBlock block = op.assemble_sector(2, 4);
  CHECK(block.gram_gap() <= 1e-12);
  CHECK(block.symmetry_gap() <= 1e-10);
  // The tensor sector of the angle-only kernel is not diagonal in the radial
  // basis, but its first eigenvalue matches the eigenfunction above and all
  // eigenvalues are positive.
  auto ev = block.eigenvalues();
  for (double e : ev) CHECK(e > 0.0);
  CHECK(std::abs(block.at(0, 0) - 0.4) <= 1e-10);
}

TEST_CASE("radial profile solve: constant alpha = 1/lambda for maxwell") {
  LinearizedOperator op(MolecularKernel::maxwell(), light());
  ATildeSolution sol = solve_A_tilde(op);
  CHECK(sol.residual <= 1e-8);
  CHECK(sol.alpha_spread <= 1e-6);
  CHECK(sol.alpha_fn(0.5) == doctest::Approx(2.5).epsilon(1e-8));
  CHECK(sol.alpha_fn(3.0) == doctest::Approx(2.5).epsilon(1e-8));
  for (double ip : sol.kernel_orthogonality) CHECK(std::abs(ip) <= 1e-10);

  SectorBlock block = op.assemble_sector(2, LinearizedOperator::sector_count(12, 2));
  NuResult nu = compute_nu(sol, block);
  CHECK(nu.nu == doctest::Approx(2.5).epsilon(1e-8));
  CHECK(nu.nu_cross == doctest::Approx(nu.nu).epsilon(1e-6));

  // doubling the kernel halves alpha and halves nu
  LinearizedOperator op2(MolecularKernel::maxwell().scaled(2.0), light());
  ATildeSolution sol2 = solve_A_tilde(op2);
  SectorBlock block2 = op2.assemble_sector(2, LinearizedOperator::sector_count(12, 2));
  NuResult nu2 = compute_nu(sol2, block2);
  CHECK(sol2.alpha_fn(1.0) == doctest::Approx(1.25).epsilon(1e-8));
  CHECK(nu2.nu == doctest::Approx(1.25).epsilon(1e-8));

  // an unreachable tolerance raises the convergence error with the residual
  ATildeOptions strict;
  strict.residual_tol = 1e-30;
  CHECK_THROWS_AS(solve_A_tilde(op, strict), ConvergenceError);
}

TEST_CASE("gaussian moment ladder") { CHECK(gaussian_moment_ladder_error() <= 1e-10); }

TEST_CASE("kappa quadrature against closed and sampled moments") {
  CHECK(compute_kappa(QProfile::constant(0.7).Q) == doctest::Approx(0.7).epsilon(1e-12));
  const double k_lin = compute_kappa(QProfile::linear().Q);
  CHECK(k_lin == doctest::Approx(8.0 * std::sqrt(2.0) / (3.0 * std::sqrt(M_PI))).epsilon(1e-10));
  CHECK(compute_kappa(QProfile::charles(1.0).Q) ==
        doctest::Approx(std::sqrt(2.0 * M_PI) / 3.0 + k_lin).epsilon(1e-12));
  CHECK(compute_kappa(QProfile::hard_sphere_pg().Q) == doctest::Approx(2.0 * k_lin / 3.0).epsilon(1e-12));

  // Monte-Carlo oracle for (1/3) E|w|^3 on the standard Gaussian
  McEstimate mc = mc_run(31337, 2000000, 1, [](RngStream& rng, std::vector<double>& out) {
    const Vec3 w = rng.normal3();
    out[0] = norm(w) * norm2(w) / 3.0;
  });
  CHECK(std::abs(mc.mean[0] - k_lin) <= 3.0 * mc.stderr_[0]);

  // a wildly oscillatory profile does not converge across refinement
  CHECK_THROWS_AS(compute_kappa([](double r) { return 1.0 + std::sin(400.0 * r * r); }, 32),
                  ConvergenceError);

  CHECK_THROWS(QProfile::parse("unknown:1"));
  CHECK(QProfile::parse("hardsphere").Q(2.0) == doctest::Approx(2.0));
  CHECK(QProfile::parse("charles:0.5").Q(0.0) ==
        doctest::Approx(std::sqrt(2.0 * M_PI) / 1.5).epsilon(1e-12));
}

TEST_CASE("viscous tensor identity over all 81 components") {
  LinearizedOperator op(MolecularKernel::maxwell(), light());
  ATildeSolution sol = solve_A_tilde(op);
  SectorBlock block = op.assemble_sector(2, LinearizedOperator::sector_count(12, 2));
  NuResult nu = compute_nu(sol, block);
  ViscousIdentityResult res = viscous_tensor_identity_check(sol, nu.nu);
  CHECK(res.pass);
  CHECK(res.max_error <= 1e-6);
  // spot patterns: (1,2,1,2) -> nu, (1,1,2,2) -> -2 nu /3, (1,2,1,3) -> 0
  ViscousIdentityResult wrong = viscous_tensor_identity_check(sol, nu.nu * 1.5);
  CHECK_FALSE(wrong.pass);
}

TEST_CASE("convection identity for hydrodynamic fluctuations") {
  LinearizedOperator op(MolecularKernel::maxwell(), light());
  ATildeSolution sol = solve_A_tilde(op);

  HermitePerturbation g;
  g.u = {1.0, 0.0, 0.0};
  ConvectionIdentityResult res = convection_identity_check(op, sol, g);
  CHECK(res.pass);
  CHECK(res.computed(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(2e-5));
  CHECK(res.computed(1, 1) == doctest::Approx(-1.0 / 3.0).epsilon(2e-5));
  CHECK(res.moment_identity_error <= 1e-10);

  // independent of rho and theta
  HermitePerturbation g2 = g;
  g2.rho = 0.8;
  g2.theta = -0.5;
  ConvectionIdentityResult res2 = convection_identity_check(op, sol, g2);
  CHECK(res2.pass);
  CHECK((res2.computed - res.computed).frobenius() <= 1e-5);

  HermitePerturbation g0;
  g0.rho = 0.3;
  ConvectionIdentityResult res0 = convection_identity_check(op, sol, g0);
  CHECK(res0.computed.frobenius() <= 1e-8);
}

TEST_CASE("hard-sphere molecular kernel runs with a varying profile") {
  LinearizedOperator::Options o = light();
  o.gh_nodes = 10;
  LinearizedOperator op(MolecularKernel::hard_sphere(), o);
  ATildeOptions aopt;
  aopt.degree = 12;
  aopt.residual_tol = 1e-2;  // the truncated radial space cannot be exact here
  ATildeSolution sol = solve_A_tilde(op, aopt);
  CHECK(sol.alpha_spread > 1e-4);  // genuinely non-constant
  SectorBlock block = op.assemble_sector(2, LinearizedOperator::sector_count(12, 2));
  NuResult nu = compute_nu(sol, block);
  CHECK(nu.nu > 0.0);
}
