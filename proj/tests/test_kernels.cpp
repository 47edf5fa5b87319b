#include <cmath>
#include <fstream>

#include "doctest.h"

#include "aerokin/kernels.hpp"
#include "aerokin/quadrature.hpp"
#include "aerokin/states.hpp"

using namespace aerokin;

namespace {

// Brute-force moment of the molecule-side transition density over w, on a
// spherical shell grid about the flux Maxwellian's center.
template <class Fn>
auto gp_quadrature_moment(const Vec3& V, const Vec3& W, const ScalingParams& p, Fn&& fn)
    -> decltype(fn(Vec3{})) {
  const Vec3 c = (p.epsilon * V + p.eta * W) / (1.0 + p.eta);
  const double width = 1.0 / (p.beta * (1.0 + p.eta));
  decltype(fn(Vec3{})) acc{};
  SphereRule sph = SphereRule::product(64);
  for_radial_sphere(c, 11.0 * width, 72, sph, [&](const Vec3& w, double wgt, double) {
    auto v = fn(w);
    v *= wgt * eval_K_gp_exact(w, V, W, p);
    acc += v;
  });
  return acc;
}

struct ScalarBox {
  double v = 0.0;
  ScalarBox& operator*=(double s) {
    v *= s;
    return *this;
  }
  ScalarBox& operator+=(const ScalarBox& o) {
    v += o.v;
    return *this;
  }
};

}  // namespace

TEST_CASE("molecular post-collision map") {
  const Vec3 om{0.0, 1.0, 0.0};
  // zero relative velocity
  auto [a1, a2] = molecular_post_collision({1, 2, 3}, {1, 2, 3}, {1, 0, 0});
  CHECK(norm(a1 - Vec3{1, 2, 3}) == 0.0);
  CHECK(norm(a2 - Vec3{1, 2, 3}) == 0.0);
  // head-on exchange
  auto [b1, b2] = molecular_post_collision({1, 0, 0}, {0, 0, 0}, {1, 0, 0});
  CHECK(norm(b1) <= 1e-15);
  CHECK(norm(b2 - Vec3{1, 0, 0}) <= 1e-15);
  // omega orthogonal to the relative velocity
  auto [c1, c2] = molecular_post_collision({1, 0, 0}, {0, 0, 0}, om);
  CHECK(norm(c1 - Vec3{1, 0, 0}) <= 1e-15);
  CHECK(norm(c2) <= 1e-15);

  RngStream rng(5);
  double worst_p = 0.0, worst_e = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 w = 3.0 * rng.normal3(), ws = 3.0 * rng.normal3();
    const Vec3 o = rng.unit_sphere();
    auto [wp, wsp] = molecular_post_collision(w, ws, o);
    worst_p = std::max(worst_p, norm(wp + wsp - w - ws));
    worst_e = std::max(worst_e, std::abs(norm2(wp) + norm2(wsp) - norm2(w) - norm2(ws)));
  }
  CHECK(worst_p <= 1e-12);
  CHECK(worst_e <= 1e-12);

  CHECK_THROWS_AS(molecular_post_collision({1, 0, 0}, {0, 1, 0}, {0.5, 0, 0}), ContractError);
}

TEST_CASE("elastic post-collision map") {
  ScalingParams p{0.5, 0.2, 1.0};
  // eps v = w: no scattering for any omega
  auto [v1, w1] = elastic_post_collision({1, 0, 0}, {0.5, 0, 0}, {0, 0, 1}, p);
  CHECK(norm(v1 - Vec3{1, 0, 0}) <= 1e-15);
  CHECK(norm(w1 - Vec3{0.5, 0, 0}) <= 1e-15);
  // equal-mass head-on exchange
  ScalingParams pe{1.0, 1.0, 1.0};
  auto [v2, w2] = elastic_post_collision({1, 0, 0}, {0, 0, 0}, {1, 0, 0}, pe);
  CHECK(norm(v2) <= 1e-15);
  CHECK(norm(w2 - Vec3{1, 0, 0}) <= 1e-15);

  ScalingParams pr{0.1, 0.01, 1.0};
  RngStream rng(17);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 v = 2.0 * rng.normal3(), w = 2.0 * rng.normal3();
    const Vec3 o = rng.unit_sphere();
    auto [vp, wp] = elastic_post_collision(v, w, o, pr);
    auto [vb, wb] = elastic_post_collision(vp, wp, o, pr);
    CHECK(norm(vb - v) <= 1e-12);
    CHECK(norm(wb - w) <= 1e-12);
    CHECK(norm(pr.epsilon * vp + pr.eta * wp - (pr.epsilon * v + pr.eta * w)) <= 1e-12);
    CHECK(std::abs(norm(pr.epsilon * vp - wp) - norm(pr.epsilon * v - w)) <= 1e-12);
  }
}

TEST_CASE("flux density eval_P") {
  CHECK(eval_P(1.0, {1, 0, 0}, {-1, 0, 0}) == 0.0);
  CHECK(eval_P(2.0, {}, {1, 0, 0}) == 0.0);
  const double expect = std::exp(-0.5) / (2.0 * M_PI);
  CHECK(eval_P(1.0, {1, 0, 0}, {1, 0, 0}) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(expect == doctest::Approx(0.09653).epsilon(1e-4));
  CHECK_THROWS_AS(eval_P(0.0, {1, 0, 0}, {1, 0, 0}), ContractError);
}

TEST_CASE("molecular kernel cutoff bounds") {
  RngStream rng(3);
  for (const char* name : {"maxwell", "hard_sphere_gg"}) {
    MolecularKernel k = MolecularKernel::by_name(name);
    SphereRule sph = SphereRule::product(14);
    for (int i = 0; i < 200; ++i) {
      const Vec3 z = 4.0 * rng.normal3();
      const Vec3 om = rng.unit_sphere();
      const double c = k(z, om);
      CHECK(c > 0.0);
      CHECK(c <= k.c_star() * std::pow(1.0 + norm(z), k.gamma()));
      CHECK(k.angular_total(z, sph) >= (1.0 / k.c_star()) * norm(z) / (1.0 + norm(z)));
    }
  }
  CHECK_THROWS(MolecularKernel::by_name("nope"));
}

TEST_CASE("elastic kernel: cutoff bounds and cross-section integrals") {
  ElasticPGKernel k = ElasticPGKernel::hard_sphere();
  RngStream rng(11);
  SphereRule sph = SphereRule::product(20);
  for (int i = 0; i < 100; ++i) {
    Vec3 z = 3.0 * rng.normal3();
    while (norm(z) < 1e-8) z = 3.0 * rng.normal3();
    const Vec3 om = rng.unit_sphere();
    CHECK(k.b(z, om) > 0.0);
    CHECK(k.b(z, om) <= k.b_star() * std::pow(1.0 + norm(z), k.beta_star()));
    // angular integral of b against |z| Sigma(|z|)
    double bbar = 0.0;
    for (std::size_t m = 0; m < sph.size(); ++m) bbar += sph.weights[m] * k.b(z, sph.nodes[m]);
    CHECK(bbar == doctest::Approx(norm(z) * k.sigma_total(norm(z))).epsilon(1e-8));
  }
  CHECK(k.sigma_total(2.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(k.q(2.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(k.Q(2.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("tabulated cross-section reproduces the constant table") {
  const std::string path = "sigma_test.csv";
  {
    std::ofstream f(path);
    f.precision(17);
    f << "r,mu,sigma\n";
    for (double r : {0.0, 1.0, 5.0, 20.0})
      for (double mu : {0.0, 0.5, 1.0}) f << r << "," << mu << "," << 1.0 / (4.0 * M_PI) << "\n";
  }
  KernelModel tab = KernelModel::by_name("tabulated:" + path);
  ScalingParams p{0.2, 0.01, 1.0};
  CHECK(tab.q(2.0, p) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(tab.Q(2.0, p) == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
  {
    std::ofstream f("sigma_bad.csv");
    f << "radius,mu,sigma\n0,0,1\n";
  }
  CHECK_THROWS(CrossSectionTable::from_csv("sigma_bad.csv"));
}

TEST_CASE("diffuse-reflection kernels: values, positivity, rotation") {
  ScalingParams p{0.1, 0.01, 1.0};
  const Vec3 V{10, 0, 0}, W{};
  SphereRule rule = SphereRule::product(26);

  // zero relative speed kills the flux factor
  ScalingParams p1{0.5, 0.1, 1.2};
  CHECK(eval_K_pg({0.3, 0, 0}, {1, 0, 0}, {0.5, 0, 0}, p1, rule) == 0.0);
  CHECK(eval_K_gp({0.3, 0, 0}, {1, 0, 0}, {0.5, 0, 0}, p1, rule) == 0.0);

  RngStream rng(23);
  double worst_rel = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Vec3 v = rng.normal3(), Vr = 2.0 * rng.normal3(), Wr = rng.normal3();
    const double kq = eval_K_pg(v, Vr, Wr, p, rule);
    const double ke = eval_K_pg_exact(v, Vr, Wr, p);
    CHECK(kq >= 0.0);
    if (ke > 1e-12) worst_rel = std::max(worst_rel, std::abs(kq - ke) / ke);
    const Vec3 w = rng.normal3();
    CHECK(eval_K_gp(w, Vr, Wr, p, rule) >= 0.0);
  }
  // default order-26 rule against the closed normal integral
  CHECK(worst_rel <= 0.02);

  SphereRule fine = SphereRule::product(80);
  const Vec3 v{99.0, 1.0, 0.0};
  CHECK(eval_K_pg(v, V, W, p, fine) ==
        doctest::Approx(eval_K_pg_exact(v, V, W, p)).epsilon(2e-3));

  // O3 covariance of the limit kernel, exact for the closed form
  RngStream rng2(29);
  for (int i = 0; i < 50; ++i) {
    const Vec3 w = 1.5 * rng2.normal3(), Wr = 1.5 * rng2.normal3();
    const double ref = eval_K00(w, Wr, 1.3);
    // reflection through the xy-plane
    const Vec3 wr{w.x, w.y, -w.z}, Wrr{Wr.x, Wr.y, -Wr.z};
    CHECK(eval_K00(wr, Wrr, 1.3) == doctest::Approx(ref).epsilon(1e-12));
  }

  CHECK_THROWS_AS(eval_K_pg(v, V, W, p, SphereRule{{}, {}, 0}), ContractError);
}

TEST_CASE("inelastic transition moments match brute quadrature") {
  KernelModel kernel = KernelModel::charles_inelastic();
  ScalingParams p{0.3, 0.05, 1.4};
  const Vec3 V{1.2, -0.4, 0.7}, W{0.3, 0.8, -0.2};

  // mass: int K_gp dw = |eps V - W|
  {
    ScalarBox mass = gp_quadrature_moment(V, W, p, [&](const Vec3&) { return ScalarBox{1.0}; });
    CHECK(mass.v == doctest::Approx(norm(p.epsilon * V - W)).epsilon(1e-8));
  }
  // recoil moment
  {
    struct VBox {
      Vec3 v{};
      VBox& operator*=(double s) {
        v *= s;
        return *this;
      }
      VBox& operator+=(const VBox& o) {
        v += o.v;
        return *this;
      }
    };
    VBox m = gp_quadrature_moment(V, W, p, [&](const Vec3& w) { return VBox{w - W}; });
    const Vec3 closed = kernel.recoil_moment_gp(V, W, p);
    CHECK(norm(m.v - closed) <= 1e-8 * std::max(1.0, norm(closed)));
  }
  // weighted mass and second moment
  {
    ScalarBox lam =
        gp_quadrature_moment(V, W, p, [&](const Vec3& w) { return ScalarBox{1.0 + norm2(w)}; });
    CHECK(lam.v == doctest::Approx(kernel.weighted_gp_mass(V, W, p)).epsilon(1e-8));

    struct MBox {
      Mat3 m{};
      MBox& operator*=(double s) {
        m *= s;
        return *this;
      }
      MBox& operator+=(const MBox& o) {
        m += o.m;
        return *this;
      }
    };
    MBox sec = gp_quadrature_moment(V, W, p, [&](const Vec3& w) { return MBox{outer(w, w)}; });
    CHECK((sec.m - kernel.gp_second_moment(V, W, p)).frobenius() <= 1e-7);

    MBox fa = gp_quadrature_moment(
        V, W, p, [&](const Vec3& w) { return MBox{traceless_outer(w) - traceless_outer(W)}; });
    CHECK((fa.m - kernel.flux_A_moment_gp(V, W, p)).frobenius() <= 1e-7);
  }
  // particle-side deflection moments via the same machinery on K_pg
  {
    const Vec3 c = (p.epsilon * V + p.eta * W) / (1.0 + p.eta);
    const double width = p.eta / (p.epsilon * p.beta * (1.0 + p.eta));
    Vec3 m1{};
    Mat3 m2{};
    SphereRule sph = SphereRule::product(64);
    for_radial_sphere((1.0 / p.epsilon) * c, 11.0 * width, 72, sph,
                      [&](const Vec3& v, double wgt, double) {
      const double k = eval_K_pg_exact(v, V, W, p);
      m1 += (wgt * k) * (v - V);
      Mat3 vv = outer(v - V, v - V);
      vv *= wgt * k;
      m2 += vv;
    });
    CHECK(norm(m1 - kernel.deflection_moment_pg(V, W, p)) <= 1e-7);
    CHECK((m2 - kernel.deflection_second_moment_pg(V, W, p)).frobenius() <= 1e-7);
  }
  // closed-form momentum-exchange identity between the two sides
  {
    const Vec3 pg = kernel.deflection_moment_pg(V, W, p);
    const Vec3 gp = kernel.recoil_moment_gp(V, W, p);
    CHECK(norm(p.epsilon * pg + p.eta * gp) <= 1e-14);
  }
}

TEST_CASE("elastic transition moments against the momentum-transfer profile") {
  KernelModel kernel = KernelModel::by_name("hard_sphere_pg");
  ScalingParams p{0.25, 0.02, 1.0};
  const Vec3 V{2.0, 0.5, -0.3}, W{-0.4, 0.9, 0.1};
  const Vec3 z = p.epsilon * V - W;
  const double r = norm(z);

  const Vec3 pg = kernel.deflection_moment_pg(V, W, p);
  const Vec3 expect = -(p.eta / (p.epsilon * (1.0 + p.eta))) * kernel.Q(r, p) * z;
  CHECK(norm(pg - expect) <= 1e-12 * std::max(1.0, norm(expect)));

  const Vec3 gp = kernel.recoil_moment_gp(V, W, p);
  CHECK(norm(p.epsilon * pg + p.eta * gp) <= 1e-15);

  // second moment against a dense omega rule
  const ElasticPGKernel& ek = kernel.elastic_kernel();
  SphereRule dense = SphereRule::product(40);
  Mat3 ref{};
  const double a = 2.0 * p.eta / ((1.0 + p.eta) * p.epsilon);
  for (std::size_t i = 0; i < dense.size(); ++i) {
    const double h = dot(z, dense.nodes[i]);
    Mat3 oo = outer(dense.nodes[i], dense.nodes[i]);
    oo *= dense.weights[i] * ek.b(z, dense.nodes[i]) * h * h * a * a;
    ref += oo;
  }
  CHECK((ref - kernel.deflection_second_moment_pg(V, W, p)).frobenius() <= 1e-12);
}

TEST_CASE("scattering sampler: determinism and sample identities") {
  ScalingParams p{0.1, 0.01, 1.0};
  const Vec3 v{3.0, 1.0, 0.0}, w{-0.5, 0.2, 0.4};

  for (const char* name : {"hard_sphere_pg", "charles_inelastic"}) {
    KernelModel kernel = KernelModel::by_name(name);
    RngStream r1(99), r2(99);
    for (int i = 0; i < 20; ++i) {
      auto [a1, b1] = kernel.sample(v, w, p, r1);
      auto [a2, b2] = kernel.sample(v, w, p, r2);
      CHECK(norm(a1 - a2) == 0.0);
      CHECK(norm(b1 - b2) == 0.0);
      // momentum exchange balances per sample
      CHECK(norm(p.epsilon * a1 + p.eta * b1 - (p.epsilon * v + p.eta * w)) <= 1e-12);
    }
    // zero relative speed passes through
    auto [vp, wp] = kernel.sample({1, 0, 0}, {0.1, 0, 0}, p, r1);
    CHECK(norm(vp - Vec3{1, 0, 0}) == 0.0);
    CHECK(norm(wp - Vec3{0.1, 0, 0}) == 0.0);
  }

  // sampled molecule-side mean against the closed recoil moment
  {
    KernelModel kernel = KernelModel::charles_inelastic();
    RngStream rng(1234);
    const int n = 200000;
    Vec3 mean{};
    for (int i = 0; i < n; ++i) {
      auto [vo, wo] = kernel.sample(v, w, p, rng);
      (void)vo;
      mean += wo - w;
    }
    mean = mean / double(n);
    const double q = norm(p.epsilon * v - w);
    const Vec3 closed = (1.0 / q) * kernel.recoil_moment_gp(v, w, p);
    CHECK(norm(mean - closed) <= 4.0 * std::sqrt(3.0 / q) / std::sqrt(double(n)) + 5e-3);
  }

  // rejection cap: a nearly-grazing relative velocity makes acceptance
  // effectively impossible under the cutoff envelope
  {
    KernelModel kernel = KernelModel::by_name("hard_sphere_pg");
    RngStream rng(5);
    CHECK_THROWS_AS(kernel.sample({1e-8 / p.epsilon, 0, 0}, {0, 0, 0}, p, rng), ConvergenceError);
  }
}
