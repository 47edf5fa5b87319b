#include "aerokin/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "aerokin/common.hpp"

namespace aerokin {

namespace {

constexpr double kUnitTol = 1e-12;

void require_unit(const Vec3& omega, const char* who) {
  AK_REQUIRE(std::abs(norm(omega) - 1.0) <= kUnitTol, std::string(who) + ": omega must be a unit vector");
}

// Orthonormal pair completing a unit vector.
void frame(const Vec3& n, Vec3& e1, Vec3& e2) {
  if (std::abs(n.x) < 0.7) {
    e1 = {0.0, -n.z, n.y};
  } else {
    e1 = {-n.y, n.x, 0.0};
  }
  e1 = e1 / norm(e1);
  e2 = {n.y * e1.z - n.z * e1.y, n.z * e1.x - n.x * e1.z, n.x * e1.y - n.y * e1.x};
}

inline Vec3 center_of_mass(const Vec3& V, const Vec3& W, const ScalingParams& p) {
  return (p.epsilon * V + p.eta * W) / (1.0 + p.eta);
}

}  // namespace

// ---------------------------------------------------------------------------
// Collision maps
// ---------------------------------------------------------------------------

std::pair<Vec3, Vec3> molecular_post_collision(const Vec3& w, const Vec3& w_star,
                                               const Vec3& omega) {
  require_unit(omega, "molecular_post_collision");
  const double h = dot(w - w_star, omega);
  return {w - h * omega, w_star + h * omega};
}

std::pair<Vec3, Vec3> elastic_post_collision(const Vec3& v, const Vec3& w,
                                             const Vec3& omega, const ScalingParams& p) {
  require_unit(omega, "elastic_post_collision");
  p.validate();
  const Vec3 z = p.epsilon * v - w;
  const double h = dot(z, omega);
  const Vec3 vpp = v - (2.0 * p.eta / ((1.0 + p.eta) * p.epsilon)) * h * omega;
  const Vec3 wpp = w + (2.0 / (1.0 + p.eta)) * h * omega;
  return {vpp, wpp};
}

// ---------------------------------------------------------------------------
// MolecularKernel
// ---------------------------------------------------------------------------

double MolecularKernel::operator()(const Vec3& z, const Vec3& omega) const {
  (void)omega;
  switch (kind_) {
    case Kind::kMaxwell:
      return amplitude_;
    case Kind::kHardSphere:
      return amplitude_ * norm(z);
  }
  return 0.0;
}

double MolecularKernel::angular_total(const Vec3& z, const SphereRule& rule) const {
  double s = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) s += rule.weights[i] * (*this)(z, rule.nodes[i]);
  return s;
}

MolecularKernel MolecularKernel::maxwell(double c0) {
  AK_REQUIRE(c0 > 0.0, "maxwell kernel: amplitude must be positive");
  MolecularKernel k;
  k.kind_ = Kind::kMaxwell;
  k.amplitude_ = c0;
  k.gamma_ = 0.0;
  k.c_star_ = std::max(1.5, 2.0 * c0);
  return k;
}

MolecularKernel MolecularKernel::hard_sphere(double sigma0) {
  AK_REQUIRE(sigma0 > 0.0, "hard sphere kernel: amplitude must be positive");
  MolecularKernel k;
  k.kind_ = Kind::kHardSphere;
  k.amplitude_ = sigma0;
  k.gamma_ = 1.0;
  k.c_star_ = std::max(1.5, 2.0 * sigma0);
  return k;
}

MolecularKernel MolecularKernel::by_name(const std::string& name) {
  if (name == "maxwell") return maxwell();
  if (name == "hard_sphere_gg" || name == "hard_sphere") return hard_sphere();
  throw ContractError("unknown molecular kernel preset: " + name);
}

MolecularKernel MolecularKernel::scaled(double factor) const {
  AK_REQUIRE(factor > 0.0, "kernel scale must be positive");
  MolecularKernel k = *this;
  k.amplitude_ *= factor;
  k.c_star_ = std::max(1.5, 2.0 * k.amplitude_);
  return k;
}

// ---------------------------------------------------------------------------
// CrossSectionTable
// ---------------------------------------------------------------------------

CrossSectionTable CrossSectionTable::from_csv(const std::string& path) {
  std::ifstream in(path);
  AK_REQUIRE(in.good(), "cannot open cross-section table: " + path);
  std::string line;
  AK_REQUIRE(std::getline(in, line), "empty cross-section table: " + path);
  {
    std::string h = line;
    h.erase(std::remove_if(h.begin(), h.end(), [](char c) { return c == ' ' || c == '\r'; }), h.end());
    AK_REQUIRE(h == "r,mu,sigma", "cross-section table must start with header r,mu,sigma");
  }
  struct Row {
    double r, mu, s;
  };
  std::vector<Row> rows;
  std::set<double> rset, muset;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    Row row{};
    char comma;
    AK_REQUIRE(bool(ss >> row.r >> comma >> row.mu >> comma >> row.s),
               "bad cross-section row: " + line);
    AK_REQUIRE(row.s > 0.0, "cross-section values must be positive");
    rows.push_back(row);
    rset.insert(row.r);
    muset.insert(row.mu);
  }
  CrossSectionTable t;
  t.r_.assign(rset.begin(), rset.end());
  t.mu_.assign(muset.begin(), muset.end());
  AK_REQUIRE(t.r_.size() >= 2 && t.mu_.size() >= 2, "cross-section table needs a 2x2 grid at least");
  AK_REQUIRE(rows.size() == t.r_.size() * t.mu_.size(),
             "cross-section table must be a full rectangular grid");
  t.sigma_.assign(rows.size(), 0.0);
  for (const Row& row : rows) {
    std::size_t i = std::lower_bound(t.r_.begin(), t.r_.end(), row.r) - t.r_.begin();
    std::size_t j = std::lower_bound(t.mu_.begin(), t.mu_.end(), row.mu) - t.mu_.begin();
    t.sigma_[i * t.mu_.size() + j] = row.s;
  }
  return t;
}

double CrossSectionTable::operator()(double r, double mu) const {
  auto locate = [](const std::vector<double>& g, double x, std::size_t& i, double& f) {
    if (x <= g.front()) {
      i = 0;
      f = 0.0;
      return;
    }
    if (x >= g.back()) {
      i = g.size() - 2;
      f = 1.0;
      return;
    }
    i = std::upper_bound(g.begin(), g.end(), x) - g.begin() - 1;
    f = (x - g[i]) / (g[i + 1] - g[i]);
  };
  std::size_t i, j;
  double fr, fm;
  locate(r_, r, i, fr);
  locate(mu_, mu, j, fm);
  const std::size_t nm = mu_.size();
  const double s00 = sigma_[i * nm + j], s01 = sigma_[i * nm + j + 1];
  const double s10 = sigma_[(i + 1) * nm + j], s11 = sigma_[(i + 1) * nm + j + 1];
  return (1 - fr) * ((1 - fm) * s00 + fm * s01) + fr * ((1 - fm) * s10 + fm * s11);
}

// ---------------------------------------------------------------------------
// ElasticPGKernel
// ---------------------------------------------------------------------------

double ElasticPGKernel::sigma(double r, double mu) const {
  if (is_hard_sphere_) return 1.0 / (4.0 * M_PI);
  return (*table_)(r, std::abs(mu));
}

double ElasticPGKernel::b(const Vec3& z, const Vec3& omega) const {
  const double r = norm(z);
  if (r == 0.0) return 0.0;
  const double mu = std::abs(dot(z, omega)) / r;
  return r * sigma(r, std::min(mu, 1.0));
}

double ElasticPGKernel::sigma_total(double r) const {
  if (is_hard_sphere_) return 1.0;
  double s = 0.0;
  for (std::size_t i = 0; i < mu_rule_.size(); ++i)
    s += mu_rule_.w[i] * sigma(r, mu_rule_.x[i]);
  return 4.0 * M_PI * s;
}

double ElasticPGKernel::q(double r) const { return r * sigma_total(r); }

double ElasticPGKernel::Q(double r) const {
  if (is_hard_sphere_) return 2.0 * r / 3.0;
  double s = 0.0;
  for (std::size_t i = 0; i < mu_rule_.size(); ++i)
    s += mu_rule_.w[i] * sigma(r, mu_rule_.x[i]) * mu_rule_.x[i] * mu_rule_.x[i];
  return 8.0 * M_PI * r * s;
}

ElasticPGKernel ElasticPGKernel::hard_sphere() {
  ElasticPGKernel k;
  k.is_hard_sphere_ = true;
  k.b_star_ = 1.01;
  k.beta_star_ = 1.0;
  k.mu_rule_ = gauss_legendre_ab(48, 0.0, 1.0);
  return k;
}

ElasticPGKernel ElasticPGKernel::tabulated(CrossSectionTable table) {
  ElasticPGKernel k;
  k.is_hard_sphere_ = false;
  k.table_ = std::make_shared<CrossSectionTable>(std::move(table));
  k.mu_rule_ = gauss_legendre_ab(48, 0.0, 1.0);
  // Envelope from the table maximum.
  double smax = 0.0;
  for (double r : {0.0, 1.0, 2.0, 5.0, 10.0, 50.0})
    for (int j = 0; j <= 32; ++j) smax = std::max(smax, (*k.table_)(r, j / 32.0));
  k.beta_star_ = 1.0;
  k.b_star_ = std::max(1.01, 1.05 * smax);
  return k;
}

// ---------------------------------------------------------------------------
// Diffuse-reflection kernels
// ---------------------------------------------------------------------------

double eval_P(double lambda, const Vec3& xi, const Vec3& n) {
  AK_REQUIRE(lambda > 0.0, "eval_P: lambda must be positive");
  const double flux = dot(xi, n);
  if (flux <= 0.0) return 0.0;
  const double l2 = lambda * lambda;
  return (0.5 / M_PI) * l2 * l2 * std::exp(-0.5 * l2 * norm2(xi)) * flux;
}

namespace {

void require_rule(const SphereRule& rule) {
  AK_REQUIRE(rule.size() >= 6, "sphere rule too small for the normal integral");
}

double k_gp_core(double lambda, const Vec3& y, const Vec3& z, const SphereRule& rule) {
  // (1/pi) int P[lambda](y, n) (z.n)_+ dn
  double s = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double zi = dot(z, rule.nodes[i]);
    if (zi <= 0.0) continue;
    s += rule.weights[i] * eval_P(lambda, y, rule.nodes[i]) * zi;
  }
  return s / M_PI;
}

double k_gp_core_exact(double lambda, const Vec3& y, const Vec3& z) {
  const double l2 = lambda * lambda;
  return (l2 * l2 / (2.0 * M_PI * M_PI)) * std::exp(-0.5 * l2 * norm2(y)) *
         sphere_flux_pp(z, y);
}

}  // namespace

double eval_K_pg(const Vec3& v, const Vec3& V, const Vec3& W, const ScalingParams& p,
                 const SphereRule& rule) {
  p.validate();
  require_rule(rule);
  const Vec3 c = center_of_mass(V, W, p);
  const double lambda = p.beta * (1.0 + p.eta) / p.eta;
  const double e3 = p.epsilon * p.epsilon * p.epsilon;
  return e3 * k_gp_core(lambda, c - p.epsilon * v, p.epsilon * V - W, rule);
}

double eval_K_gp(const Vec3& w, const Vec3& V, const Vec3& W, const ScalingParams& p,
                 const SphereRule& rule) {
  p.validate();
  require_rule(rule);
  const Vec3 c = center_of_mass(V, W, p);
  const double lambda = p.beta * (1.0 + p.eta);
  return k_gp_core(lambda, w - c, p.epsilon * V - W, rule);
}

double eval_K_pg_exact(const Vec3& v, const Vec3& V, const Vec3& W, const ScalingParams& p) {
  p.validate();
  const Vec3 c = center_of_mass(V, W, p);
  const double lambda = p.beta * (1.0 + p.eta) / p.eta;
  const double e3 = p.epsilon * p.epsilon * p.epsilon;
  return e3 * k_gp_core_exact(lambda, c - p.epsilon * v, p.epsilon * V - W);
}

double eval_K_gp_exact(const Vec3& w, const Vec3& V, const Vec3& W, const ScalingParams& p) {
  p.validate();
  const Vec3 c = center_of_mass(V, W, p);
  return k_gp_core_exact(p.beta * (1.0 + p.eta), w - c, p.epsilon * V - W);
}

double eval_K00(const Vec3& w, const Vec3& W, double beta) {
  AK_REQUIRE(beta > 0.0, "eval_K00: beta must be positive");
  return k_gp_core_exact(beta, w, -W);
}

// ---------------------------------------------------------------------------
// KernelModel
// ---------------------------------------------------------------------------

KernelModel KernelModel::elastic(ElasticPGKernel k, int sphere_degree) {
  KernelModel m;
  m.family_ = Family::kElastic;
  m.elastic_ = std::move(k);
  m.rule_ = SphereRule::product(sphere_degree);
  // Moment integrands are degree <= 4 in omega for angle-independent
  // cross-sections; tabulated kernels fall back to the full rule.
  m.moment_rule_ = SphereRule::product(8);
  m.name_ = "hard_sphere_pg";
  return m;
}

KernelModel KernelModel::charles_inelastic() {
  KernelModel m;
  m.family_ = Family::kInelastic;
  m.rule_ = SphereRule::product(26);
  m.name_ = "charles_inelastic";
  return m;
}

KernelModel KernelModel::by_name(const std::string& name) {
  if (name == "charles_inelastic") return charles_inelastic();
  if (name == "hard_sphere_pg") return elastic(ElasticPGKernel::hard_sphere());
  if (name.rfind("tabulated:", 0) == 0) {
    KernelModel m = elastic(ElasticPGKernel::tabulated(
        CrossSectionTable::from_csv(name.substr(std::string("tabulated:").size()))));
    m.moment_rule_ = m.rule_;
    m.name_ = name;
    return m;
  }
  throw ContractError("unknown kernel preset: " + name);
}

const ElasticPGKernel& KernelModel::elastic_kernel() const {
  AK_REQUIRE(is_elastic(), "not an elastic kernel");
  return elastic_;
}

double KernelModel::q(double r, const ScalingParams& p) const {
  (void)p;
  return is_elastic() ? elastic_.q(r) : r;
}

double KernelModel::Q(double r, const ScalingParams& p) const {
  if (is_elastic()) return elastic_.Q(r);
  return std::sqrt(2.0 * M_PI) / (3.0 * p.beta) + r;
}

double KernelModel::Qprime(double r, const ScalingParams& p) const {
  if (!is_elastic()) return 1.0;
  // One-sided difference is fine away from 0; the hard-sphere preset is linear.
  const double h = std::max(1e-6, 1e-6 * r);
  return (elastic_.Q(r + h) - elastic_.Q(std::max(0.0, r - h))) / (r + h - std::max(0.0, r - h));
}

double KernelModel::dispersion_bound_constant(const ScalingParams& p) const {
  return is_elastic() ? 1.0 : 16.0 / (p.beta * p.beta);
}

Vec3 KernelModel::deflection_moment_pg(const Vec3& V, const Vec3& W,
                                       const ScalingParams& p) const {
  p.validate();
  const Vec3 z = p.epsilon * V - W;
  if (is_elastic()) {
    // int (v'' - V) b(z, omega) domega over the moment rule.
    const double a = 2.0 * p.eta / ((1.0 + p.eta) * p.epsilon);
    Vec3 s{};
    for (std::size_t i = 0; i < moment_rule_.size(); ++i) {
      const Vec3& om = moment_rule_.nodes[i];
      s += (moment_rule_.weights[i] * elastic_.b(z, om) * dot(z, om)) * om;
    }
    return -a * s;
  }
  // Gaussian-flux moments of K_pg: v - V = (eta / (eps (1+eta))) (d - xi/beta)
  // with d = W - eps V and xi standard within the flux measure.
  const double pref = p.eta / (p.epsilon * (1.0 + p.eta));
  const Vec3 d = -z;
  const Vec3 s1 = sphere_flux1(z);
  const double s0 = sphere_flux0(z);
  const Vec3 raw = (gaussian_flux0() * s0) * d - (M_PI * std::sqrt(2.0 * M_PI) / p.beta) * s1;
  return (pref / (2.0 * M_PI * M_PI)) * raw;
}

Vec3 KernelModel::recoil_moment_gp(const Vec3& V, const Vec3& W, const ScalingParams& p) const {
  p.validate();
  const Vec3 z = p.epsilon * V - W;
  if (is_elastic()) {
    const double a = 2.0 / (1.0 + p.eta);
    Vec3 s{};
    for (std::size_t i = 0; i < moment_rule_.size(); ++i) {
      const Vec3& om = moment_rule_.nodes[i];
      s += (moment_rule_.weights[i] * elastic_.b(z, om) * dot(z, om)) * om;
    }
    return a * s;
  }
  // w - W = z/(1+eta) + zeta/(beta (1+eta)) within the flux measure.
  const double inv1e = 1.0 / (1.0 + p.eta);
  const double s_gp = inv1e / p.beta;
  const Vec3 raw = (gaussian_flux0() * sphere_flux0(z) * inv1e) * z +
                   (M_PI * std::sqrt(2.0 * M_PI) * s_gp) * sphere_flux1(z);
  return (1.0 / (2.0 * M_PI * M_PI)) * raw;
}

Mat3 KernelModel::deflection_second_moment_pg(const Vec3& V, const Vec3& W,
                                              const ScalingParams& p) const {
  p.validate();
  const Vec3 z = p.epsilon * V - W;
  if (is_elastic()) {
    const double a = 2.0 * p.eta / ((1.0 + p.eta) * p.epsilon);
    Mat3 s{};
    for (std::size_t i = 0; i < moment_rule_.size(); ++i) {
      const Vec3& om = moment_rule_.nodes[i];
      const double h = dot(z, om);
      s += (moment_rule_.weights[i] * elastic_.b(z, om) * h * h) * outer(om, om);
    }
    return (a * a) * s;
  }
  const double pref = p.eta / (p.epsilon * (1.0 + p.eta));
  const Vec3 d = -z;
  const double r = norm(z);
  const double sq2pi = std::sqrt(2.0 * M_PI);
  Mat3 res = (gaussian_flux0() * sphere_flux0(z)) * outer(d, d);
  {
    const Vec3 s1 = sphere_flux1(z);
    Mat3 cross = outer(d, s1) + outer(s1, d);
    cross *= -(M_PI * sq2pi / p.beta);
    res += cross;
  }
  {
    // (1/beta^2) int (n.z)_+ 2 pi (I + n n) dn = (2 pi^2 |z| / beta^2) ((5/4) I + (1/4) zhat zhat)
    Mat3 iso = Mat3::identity();
    iso *= 1.25 * M_PI * r;
    if (r > 0.0) {
      Mat3 zz = outer(z / r, z / r);
      zz *= 0.25 * M_PI * r;
      iso += zz;
    }
    iso *= 2.0 * M_PI / (p.beta * p.beta);
    res += iso;
  }
  res *= pref * pref / (2.0 * M_PI * M_PI);
  return res;
}

Mat3 KernelModel::flux_A_moment_gp(const Vec3& V, const Vec3& W, const ScalingParams& p) const {
  AK_REQUIRE(p.beta > 0.0 && p.epsilon >= 0.0 && p.eta >= 0.0,
             "flux_A_moment_gp: invalid scaling parameters");
  const Vec3 z = p.epsilon * V - W;
  const double r = norm(z);
  if (is_elastic()) {
    // w'' = W + (2/(1+eta)) (z.omega) omega; at eps = eta = 0 this is the
    // specular limit map W - 2 (W.omega) omega.
    const double a = 2.0 / (1.0 + p.eta);
    const Mat3 aW = traceless_outer(W);
    Mat3 s{};
    for (std::size_t i = 0; i < moment_rule_.size(); ++i) {
      const Vec3& om = moment_rule_.nodes[i];
      const double bv = elastic_.b(z, om);
      if (bv == 0.0) continue;
      const Vec3 wpp = W + (a * dot(z, om)) * om;
      Mat3 dA = traceless_outer(wpp) - aW;
      dA *= moment_rule_.weights[i] * bv;
      s += dA;
    }
    return s;
  }
  const Vec3 c = (p.epsilon * V + p.eta * W) / (1.0 + p.eta);
  const double s_gp = 1.0 / (p.beta * (1.0 + p.eta));
  const double sq2pi = std::sqrt(2.0 * M_PI);
  Mat3 res = r * traceless_outer(c);
  {
    Mat3 lin = outer(c, z) + outer(z, c);
    const double cz = dot(c, z);
    lin(0, 0) -= (2.0 / 3.0) * cz;
    lin(1, 1) -= (2.0 / 3.0) * cz;
    lin(2, 2) -= (2.0 / 3.0) * cz;
    lin *= sq2pi * s_gp / 3.0;
    res += lin;
  }
  if (r > 0.0) {
    Mat3 quad = traceless_outer(z / r);
    quad *= 0.25 * s_gp * s_gp * r;
    res += quad;
  }
  res -= r * traceless_outer(W);
  return res;
}

double KernelModel::weighted_gp_mass(const Vec3& V, const Vec3& W, const ScalingParams& p) const {
  AK_REQUIRE(p.beta > 0.0 && p.epsilon >= 0.0 && p.eta >= 0.0,
             "weighted_gp_mass: invalid scaling parameters");
  const Vec3 z = p.epsilon * V - W;
  const double r = norm(z);
  if (is_elastic()) {
    const double a = 2.0 / (1.0 + p.eta);
    double s = 0.0;
    for (std::size_t i = 0; i < moment_rule_.size(); ++i) {
      const Vec3& om = moment_rule_.nodes[i];
      const double bv = elastic_.b(z, om);
      if (bv == 0.0) continue;
      const Vec3 wpp = W + (a * dot(z, om)) * om;
      s += moment_rule_.weights[i] * bv * (1.0 + norm2(wpp));
    }
    return s;
  }
  const Vec3 c = (p.epsilon * V + p.eta * W) / (1.0 + p.eta);
  const double s_gp = 1.0 / (p.beta * (1.0 + p.eta));
  return r * (1.0 + norm2(c) + 4.0 * s_gp * s_gp) +
         (2.0 * std::sqrt(2.0 * M_PI) / 3.0) * s_gp * dot(c, z);
}

Mat3 KernelModel::gp_second_moment(const Vec3& V, const Vec3& W, const ScalingParams& p) const {
  AK_REQUIRE(p.beta > 0.0 && p.epsilon >= 0.0 && p.eta >= 0.0,
             "gp_second_moment: invalid scaling parameters");
  const Vec3 z = p.epsilon * V - W;
  const double r = norm(z);
  if (is_elastic()) {
    const double a = 2.0 / (1.0 + p.eta);
    Mat3 s{};
    for (std::size_t i = 0; i < moment_rule_.size(); ++i) {
      const Vec3& om = moment_rule_.nodes[i];
      const double bv = elastic_.b(z, om);
      if (bv == 0.0) continue;
      const Vec3 wpp = W + (a * dot(z, om)) * om;
      s += (moment_rule_.weights[i] * bv) * outer(wpp, wpp);
    }
    return s;
  }
  const Vec3 c = (p.epsilon * V + p.eta * W) / (1.0 + p.eta);
  const double s_gp = 1.0 / (p.beta * (1.0 + p.eta));
  const double sq2pi = std::sqrt(2.0 * M_PI);
  Mat3 res = r * outer(c, c);
  {
    Mat3 cross = outer(c, z) + outer(z, c);
    cross *= sq2pi * s_gp / 3.0;
    res += cross;
  }
  {
    Mat3 iso = Mat3::identity();
    iso *= 1.25 * r;
    if (r > 0.0) {
      Mat3 zz = outer(z / r, z / r);
      zz *= 0.25 * r;
      iso += zz;
    }
    iso *= s_gp * s_gp;
    res += iso;
  }
  return res;
}

std::pair<Vec3, Vec3> KernelModel::sample(const Vec3& v, const Vec3& w, const ScalingParams& p,
                                          RngStream& rng) const {
  p.validate();
  const Vec3 z = p.epsilon * v - w;
  const double r = norm(z);
  if (r == 0.0) return {v, w};  // zero relative speed: no scattering

  if (is_elastic()) {
    const double envelope = elastic_.b_star() * std::pow(1.0 + r, elastic_.beta_star());
    for (int it = 0; it < rejection_cap_; ++it) {
      const Vec3 omega = rng.unit_sphere();
      if (rng.uniform01() * envelope <= elastic_.b(z, omega)) {
        return elastic_post_collision(v, w, omega, p);
      }
    }
    throw ConvergenceError("elastic scattering: rejection cap exceeded", double(rejection_cap_));
  }

  // Diffuse reflection. Surface normal with density (n.z)_+, then the
  // outgoing molecule from the half-space flux Maxwellian along n; the
  // particle recoil balances the momentum exchange exactly.
  const Vec3 zh = z / r;
  Vec3 e1, e2;
  frame(zh, e1, e2);
  const double mu = std::sqrt(rng.uniform01());
  const double phi = rng.uniform(0.0, 2.0 * M_PI);
  const double smu = std::sqrt(std::max(0.0, 1.0 - mu * mu));
  const Vec3 n = mu * zh + (smu * std::cos(phi)) * e1 + (smu * std::sin(phi)) * e2;

  const double lambda = p.beta * (1.0 + p.eta);
  double u = rng.uniform01();
  while (u <= 0.0) u = rng.uniform01();
  const double ypar = std::sqrt(-2.0 * std::log(u)) / lambda;
  Vec3 f1, f2;
  frame(n, f1, f2);
  const Vec3 y = ypar * n + (rng.normal() / lambda) * f1 + (rng.normal() / lambda) * f2;

  const Vec3 c = center_of_mass(v, w, p);
  const Vec3 w_out = c + y;
  const Vec3 v_out = v + (p.eta / p.epsilon) * (w - w_out);
  return {v_out, w_out};
}

}  // namespace aerokin
