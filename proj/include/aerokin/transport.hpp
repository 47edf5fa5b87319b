#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "aerokin/kernels.hpp"
#include "aerokin/quadrature.hpp"
#include "aerokin/states.hpp"

namespace aerokin {

/// Homogeneous degree-l harmonic polynomial used as the sector
/// representative, with a probe direction where it does not vanish.
struct Harmonic {
  int l = 0;
  std::function<double(const Vec3&)> fn;
  Vec3 probe{};
  double angular_norm = 0.0;  // integral of fn^2 over the unit sphere
};

Harmonic sector_harmonic(int l);

/// Orthonormal radial polynomials p_k(r^2) for the measure
/// M(w) r^{2l} |Y_l|^2 dw (generalized Laguerre in r^2/2).
class RadialBasis {
 public:
  RadialBasis(int l, int count, double angular_norm);
  int size() const { return count_; }
  double eval(int k, double r2) const;
  void eval_all(double r2, double* out) const;  // out[0..count)
  double weight(double r) const;                // measure density in r
  double norm(int k) const { return norm_[k]; }

 private:
  int l_ = 0;
  int count_ = 0;
  double a_ = 0.0;  // Laguerre exponent l + 1/2
  double measure_const_ = 0.0;
  std::vector<double> norm_;
};

/// One harmonic sector of the Galerkin matrix <phi_i, L phi_j>.
struct SectorBlock {
  int l = 0;
  int n = 0;
  std::vector<double> B;     // n x n row-major
  std::vector<double> gram;  // n x n
  std::vector<double> radii;
  std::vector<std::vector<double>> image_ratio;  // [j][i]: L phi_j at radius i over Y

  double at(int i, int j) const { return B[std::size_t(i) * n + j]; }
  double symmetry_gap() const;
  double gram_gap() const;                 // max |gram - I|
  std::vector<double> eigenvalues() const; // of the symmetrized block
};

/// Linearized molecular collision operator about the global Maxwellian,
/// evaluated by nested Gauss-Hermite x sphere quadrature. Self-adjoint and
/// nonnegative on L2(M dw) with null space {1, w1, w2, w3, |w|^2}.
class LinearizedOperator {
 public:
  struct Options {
    int gh_nodes = 10;
    int sphere_degree = 28;
    int radial_nodes = 64;
    double radial_max = 13.0;
    int workers = 0;
  };

  explicit LinearizedOperator(MolecularKernel kernel) : LinearizedOperator(std::move(kernel), Options{}) {}
  LinearizedOperator(MolecularKernel kernel, Options opt);

  const MolecularKernel& kernel() const { return kernel_; }
  const Options& options() const { return opt_; }
  const Rule1D& radial() const { return radial_; }

  /// Pointwise image (L phi)(w).
  double apply(const std::function<double(const Vec3&)>& phi, const Vec3& w) const;

  /// ||L phi||_{L2(M)} for a single-sector function phi = p(r^2) Y_l.
  double sector_image_norm(const Harmonic& h, const std::function<double(double)>& radial_part) const;

  SectorBlock assemble_sector(int l, int n_radial) const;

  /// Sector sizes spanning tensor polynomials up to the given total degree.
  static int sector_count(int degree, int l) { return (degree - l) / 2 + 1; }

 private:
  MolecularKernel kernel_;
  Options opt_;
  Rule1D gh_;
  SphereRule omega_;
  Rule1D radial_;
};

/// Solution of L Atilde = A with Atilde = alpha(|w|) A(w), A the traceless
/// second moment tensor, orthogonal to the null space.
struct ATildeSolution {
  std::vector<double> radial_grid;
  std::vector<double> alpha;      // alpha at the grid radii
  std::vector<double> coeffs;     // radial-basis coefficients
  double residual = 0.0;          // ||L Atilde - A||_{L2(M)}, Frobenius
  double galerkin_residual = 0.0;
  int iterations = 0;
  double alpha_spread = 0.0;      // (max - min)/|mean| over the grid
  std::array<double, 5> kernel_orthogonality{};  // vs {1, w1, w2, w3, |w|^2}
  std::function<double(double)> alpha_fn;        // alpha as a function of r

  Mat3 a_tilde(const Vec3& w) const { return alpha_fn(norm(w)) * traceless_outer(w); }
};

struct ATildeOptions {
  int degree = 12;            // total polynomial degree of the Galerkin space
  double residual_tol = 1e-6;
  int max_iterations = 500;
};

/// Conjugate-gradient solve of the degree-2 sector system, reduced to the
/// radial profile alpha(|w|).
ATildeSolution solve_A_tilde(const LinearizedOperator& op, const ATildeOptions& opt = {});

struct NuResult {
  double nu = 0.0;        // (1/10) <Atilde : L Atilde>
  double nu_cross = 0.0;  // (1/10) <Atilde : A>
};

/// Viscosity coefficient; throws if the two quadratic forms disagree beyond
/// 1e-5 relative.
NuResult compute_nu(const ATildeSolution& sol, const SectorBlock& block);

/// Named drag-weight profiles Q(r).
struct QProfile {
  std::string name;
  std::function<double(double)> Q;
  std::function<double(double)> Qprime;

  static QProfile constant(double c0);
  static QProfile linear();                  // Q(r) = r
  static QProfile hard_sphere_pg();          // Q(r) = 2r/3
  static QProfile charles(double beta);      // Q(r) = sqrt(2 pi)/(3 beta) + r
  static QProfile parse(const std::string& spec);  // e.g. "charles:1.0"
};

/// kappa = (1/3) int Q(|w|) |w|^2 M(w) dw by radial quadrature, verified
/// over two refinement levels.
double compute_kappa(const std::function<double(double)>& Q, int radial_nodes = 64,
                     double rmax = 12.0);

struct ViscousIdentityResult {
  double max_error = 0.0;  // over all 81 components
  bool pass = false;
};

/// <Atilde_ij A_kl> against nu (d_ik d_jl + d_il d_jk - (2/3) d_ij d_kl).
ViscousIdentityResult viscous_tensor_identity_check(const ATildeSolution& sol, double nu,
                                                    double tol = 1e-6);

struct ConvectionIdentityResult {
  Mat3 computed{};
  Mat3 expected{};
  double max_error = 0.0;
  double moment_identity_error = 0.0;  // <A (x) w (x) w> : (u (x) u) check
  bool pass = false;
};

/// <Atilde Q(g)> = A(u) for hydrodynamic g, where Q is the quadratic
/// collision form; also validates the fourth-moment contraction
/// <A (x) w (x) w> : (u (x) u) = 2 u (x) u - (2/3)|u|^2 I.
ConvectionIdentityResult convection_identity_check(const LinearizedOperator& op,
                                                   const ATildeSolution& sol,
                                                   const HermitePerturbation& g,
                                                   double tol = 1e-5);

// Gaussian moment ladder by quadrature: int M = 1, E|w|^2 = 3, E|w|^4 = 15,
// <A:A> = 10. Returns the max absolute deviation.
double gaussian_moment_ladder_error();

}  // namespace aerokin
