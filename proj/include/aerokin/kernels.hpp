#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "aerokin/quadrature.hpp"
#include "aerokin/rng.hpp"
#include "aerokin/scaling.hpp"
#include "aerokin/sphere_moments.hpp"
#include "aerokin/vec3.hpp"

namespace aerokin {

// ---------------------------------------------------------------------------
// Collision maps
// ---------------------------------------------------------------------------

/// Elastic exchange between two gas molecules along the unit vector omega.
/// Conserves w + w* and |w|^2 + |w*|^2 exactly.
std::pair<Vec3, Vec3> molecular_post_collision(const Vec3& w, const Vec3& w_star,
                                               const Vec3& omega);

/// Elastic particle-gas exchange. Velocities are measured in the thermal
/// units of their own species, so the relative velocity is eps*v - w and the
/// map conserves eps*v + eta*w while reflecting eps*v - w about omega.
/// The map is a linear involution for each omega.
std::pair<Vec3, Vec3> elastic_post_collision(const Vec3& v, const Vec3& w,
                                             const Vec3& omega, const ScalingParams& p);

// ---------------------------------------------------------------------------
// Molecular kernel c(z, omega)
// ---------------------------------------------------------------------------

/// Grad-cutoff hard-potential kernel for molecule-molecule collisions,
/// 0 < c(z,w) <= c_star (1+|z|)^gamma.
class MolecularKernel {
 public:
  enum class Kind { kMaxwell, kHardSphere };

  double operator()(const Vec3& z, const Vec3& omega) const;
  double angular_total(const Vec3& z, const SphereRule& rule) const;

  double c_star() const { return c_star_; }
  double gamma() const { return gamma_; }
  Kind kind() const { return kind_; }
  double amplitude() const { return amplitude_; }
  bool is_maxwell() const { return kind_ == Kind::kMaxwell; }

  // Angle-only kernel c = c0; makes the viscosity profile alpha constant.
  static MolecularKernel maxwell(double c0 = 1.0 / (4.0 * M_PI));
  // c(z, omega) = |z| sigma0.
  static MolecularKernel hard_sphere(double sigma0 = 1.0 / (4.0 * M_PI));
  static MolecularKernel by_name(const std::string& name);

  MolecularKernel scaled(double factor) const;

 private:
  Kind kind_ = Kind::kMaxwell;
  double amplitude_ = 1.0 / (4.0 * M_PI);
  double c_star_ = 1.5;
  double gamma_ = 0.0;
};

// ---------------------------------------------------------------------------
// Differential cross-sections for the elastic particle-gas kernel
// ---------------------------------------------------------------------------

/// Tabulated sigma(r, mu) on a rectangular grid, bilinear interpolation,
/// clamped outside the table. CSV layout: header "r,mu,sigma", one row per
/// grid point.
class CrossSectionTable {
 public:
  static CrossSectionTable from_csv(const std::string& path);
  double operator()(double r, double mu) const;

 private:
  std::vector<double> r_, mu_, sigma_;  // sigma_[i*mu.size()+j]
};

/// Cutoff hard-potential kernel b(z, omega) = |z| sigma(|z|, |cos(z,omega)|)
/// with 0 < b <= b_star (1+|z|)^{beta_star}.
class ElasticPGKernel {
 public:
  double sigma(double r, double mu) const;
  double b(const Vec3& z, const Vec3& omega) const;

  // 4 pi int_0^1 sigma(r, mu) dmu
  double sigma_total(double r) const;
  // r * Sigma(r): total scattering mass per unit incoming flux
  double q(double r) const;
  // 8 pi r int_0^1 sigma(r, mu) mu^2 dmu: momentum-transfer weight
  double Q(double r) const;

  double b_star() const { return b_star_; }
  double beta_star() const { return beta_star_; }

  // sigma = 1/(4 pi), so Sigma = 1, q(r) = r, Q(r) = 2r/3.
  static ElasticPGKernel hard_sphere();
  static ElasticPGKernel tabulated(CrossSectionTable table);

 private:
  bool is_hard_sphere_ = true;
  std::shared_ptr<CrossSectionTable> table_;
  double b_star_ = 1.01;
  double beta_star_ = 1.0;
  Rule1D mu_rule_;  // for the mu-integrals
};

// ---------------------------------------------------------------------------
// Diffuse-reflection (inelastic) kernel evaluators
// ---------------------------------------------------------------------------

/// Half-space Maxwellian flux density P[lambda](xi, n)
///   = (1/2pi) lambda^4 exp(-lambda^2 |xi|^2 / 2) (xi.n)_+ .
double eval_P(double lambda, const Vec3& xi, const Vec3& n);

/// Outgoing-particle kernel K_pg(v, V, W) by sphere quadrature of the
/// surface-normal integral. Needs at least 6 sphere nodes.
double eval_K_pg(const Vec3& v, const Vec3& V, const Vec3& W, const ScalingParams& p,
                 const SphereRule& rule);

/// Outgoing-molecule kernel K_gp(w, V, W), same quadrature convention.
double eval_K_gp(const Vec3& w, const Vec3& V, const Vec3& W, const ScalingParams& p,
                 const SphereRule& rule);

// Same kernels with the normal integral in closed form.
double eval_K_pg_exact(const Vec3& v, const Vec3& V, const Vec3& W, const ScalingParams& p);
double eval_K_gp_exact(const Vec3& w, const Vec3& V, const Vec3& W, const ScalingParams& p);

/// epsilon = eta = 0 limit of K_gp; depends only on (w, W).
double eval_K00(const Vec3& w, const Vec3& W, double beta);

// ---------------------------------------------------------------------------
// Unified kernel model
// ---------------------------------------------------------------------------

/// One particle-gas scattering model (elastic or diffuse-reflection), plus
/// the exact low-order moments of its transition measures for a fixed
/// incoming pair (V, W). All moments label the incoming particle velocity V
/// and molecule velocity W; outgoing velocities are integrated out.
class KernelModel {
 public:
  enum class Family { kElastic, kInelastic };

  static KernelModel elastic(ElasticPGKernel k, int sphere_degree = 26);
  static KernelModel charles_inelastic();
  /// Presets: "hard_sphere_pg", "charles_inelastic", "tabulated:<csv path>".
  static KernelModel by_name(const std::string& name);

  Family family() const { return family_; }
  bool is_elastic() const { return family_ == Family::kElastic; }
  const ElasticPGKernel& elastic_kernel() const;
  const SphereRule& sphere_rule() const { return rule_; }
  const std::string& name() const { return name_; }

  // (H1)/(H2)-type closed forms for this model.
  double q(double r, const ScalingParams& p) const;
  double Q(double r, const ScalingParams& p) const;
  double Qprime(double r, const ScalingParams& p) const;
  // Constant in the squared-dispersion bound (1 for elastic, 16/beta^2 for
  // diffuse reflection).
  double dispersion_bound_constant(const ScalingParams& p) const;

  // int (v - V) Pi_pg(v, .) dv, from the pg-side representation.
  Vec3 deflection_moment_pg(const Vec3& V, const Vec3& W, const ScalingParams& p) const;
  // int (w - W) Pi_gp(w, .) dw, from the gp-side representation.
  Vec3 recoil_moment_gp(const Vec3& V, const Vec3& W, const ScalingParams& p) const;
  // int (v - V) (x) (v - V) Pi_pg(v, .) dv.
  Mat3 deflection_second_moment_pg(const Vec3& V, const Vec3& W, const ScalingParams& p) const;
  // int (A(w) - A(W)) Pi_gp(w, .) dw for A(w) = w (x) w - |w|^2 I/3.
  // Well-defined at epsilon = eta = 0 (the limit measure).
  Mat3 flux_A_moment_gp(const Vec3& V, const Vec3& W, const ScalingParams& p) const;
  // int (1 + |w|^2) Pi_gp(w, .) dw.
  double weighted_gp_mass(const Vec3& V, const Vec3& W, const ScalingParams& p) const;
  // int w (x) w Pi_gp(w, .) dw.
  Mat3 gp_second_moment(const Vec3& V, const Vec3& W, const ScalingParams& p) const;

  /// Draw one post-collision pair for incoming (v, w). Elastic: omega from
  /// the density proportional to b; inelastic: diffuse reflection with the
  /// outgoing molecule drawn from the half-space flux Maxwellian and the
  /// particle recoil fixed by momentum conservation.
  std::pair<Vec3, Vec3> sample(const Vec3& v, const Vec3& w, const ScalingParams& p,
                               RngStream& rng) const;

  int rejection_cap() const { return rejection_cap_; }

 private:
  Family family_ = Family::kInelastic;
  ElasticPGKernel elastic_{};
  SphereRule rule_;
  SphereRule moment_rule_;
  std::string name_;
  int rejection_cap_ = 10000;
};

}  // namespace aerokin
