#include <cmath>

#include "doctest.h"

#include "aerokin/limits.hpp"
#include "aerokin/transport.hpp"

using namespace aerokin;

TEST_CASE("first moment of the fluctuation recovers the bulk velocity") {
  HermitePerturbation g;
  g.u = {1.0, 2.0, 3.0};
  CHECK(norm(incompressibility_identity(g) - g.u) <= 1e-10);
  g.rho = 0.7;
  g.theta = -0.4;
  CHECK(norm(incompressibility_identity(g) - g.u) <= 1e-10);
  HermitePerturbation zero;
  CHECK(norm(incompressibility_identity(zero)) <= 1e-12);
}

TEST_CASE("fitted order on synthetic data") {
  std::vector<double> eps{0.4, 0.2, 0.1, 0.05, 0.025};
  std::vector<double> err;
  for (double e : eps) err.push_back(std::pow(e, 1.5));
  CHECK(fitted_order(eps, err) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("drag sweep: even profile with linear test function vanishes") {
  PrescribedState s;
  s.name = "even";
  s.v0 = {};
  s.phi = TestFunction::v1();
  const Schedule sched = Schedule::cubic({0.4, 0.2, 0.1});
  SweepResult res = drag_limit_sweep(s, KernelModel::charles_inelastic(), sched);
  CHECK(std::abs(res.rows.front().limit[0]) <= 1e-10);
  for (const auto& row : res.rows) {
    // everything cancels by parity, so the functional is zero to roundoff
    CHECK(std::abs(row.estimate[0]) <= 1e-12);
    CHECK(row.extra <= 1e-12);  // linear phi has no curvature remainder
  }
}

TEST_CASE("drag sweep: shifted profile converges to -kappa") {
  PrescribedState s = PrescribedState::by_name("drag_v1");
  const double kappa = compute_kappa(QProfile::charles(1.0).Q);
  SweepResult res =
      drag_limit_sweep(s, KernelModel::charles_inelastic(), Schedule::default_schedule());
  CHECK(res.rows.front().limit[0] == doctest::Approx(-kappa).epsilon(1e-8));
  CHECK(-kappa == doctest::Approx(-2.96324).epsilon(1e-5));
  CHECK(res.rows.back().error < res.rows.front().error);
  CHECK(res.fitted_order >= 0.8);

  // recentering the gas bulk velocity on the dispersed phase zeroes the limit
  PrescribedState s2 = s;
  s2.g.u = {1.0, 0.0, 0.0};
  SweepResult res2 = drag_limit_sweep(s2, KernelModel::charles_inelastic(),
                                      Schedule::cubic({0.2, 0.1}));
  CHECK(std::abs(res2.rows.front().limit[0]) <= 1e-10);
}

TEST_CASE("drag sweep is deterministic") {
  PrescribedState s = PrescribedState::by_name("drag_default");
  const Schedule sched = Schedule::cubic({0.2, 0.1});
  SweepResult a = drag_limit_sweep(s, KernelModel::charles_inelastic(), sched);
  SweepResult b = drag_limit_sweep(s, KernelModel::charles_inelastic(), sched);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].estimate[0] == b.rows[i].estimate[0]);
    CHECK(a.rows[i].error == b.rows[i].error);
  }
}

TEST_CASE("friction sweep: identity and limit for both kernel families") {
  const Schedule sched = Schedule::cubic({0.4, 0.2, 0.1, 0.05});
  for (const char* name : {"charles_inelastic", "hard_sphere_pg"}) {
    PrescribedState s = PrescribedState::by_name("friction_default");
    KernelModel kernel = KernelModel::by_name(name);
    SweepResult res = friction_limit_sweep(s, kernel, sched);
    ScalingParams pq{0.5, 0.125, 1.0};
    const double kappa = compute_kappa([&](double r) { return kernel.Q(r, pq); });
    CHECK(res.rows.front().limit[0] == doctest::Approx(2.0 * kappa).epsilon(1e-10));
    for (const auto& row : res.rows) CHECK(row.extra <= 1e-8);
    CHECK(res.rows.back().error <= 0.02 * 2.0 * kappa);
  }

  // symmetric profile: zero limit
  PrescribedState sym;
  sym.name = "sym";
  SweepResult res = friction_limit_sweep(sym, KernelModel::charles_inelastic(),
                                         Schedule::cubic({0.2, 0.1}));
  CHECK(norm(Vec3{res.rows.front().limit[0], res.rows.front().limit[1],
                  res.rows.front().limit[2]}) <= 1e-10);
  CHECK(res.rows.back().error <= 1e-3);
}

TEST_CASE("flux sweep decays and its closed limit matrix vanishes") {
  const double alpha = 2.5;  // maxwell-preset profile value
  const Schedule sched = Schedule::default_schedule();
  for (const char* name : {"charles_inelastic", "hard_sphere_pg"}) {
    PrescribedState s = PrescribedState::by_name("flux_default");
    SweepResult res = friction_flux_sweep(s, KernelModel::by_name(name), sched, alpha);
    REQUIRE(res.rows.size() == sched.points.size() + 1);
    const double first = res.rows.front().error;
    const double tail = res.rows[res.rows.size() - 2].error;
    CHECK(tail < 0.25 * first);
    const auto& lim = res.rows.back();
    CHECK(std::abs(lim.extra) <= 1e-8);
    CHECK(lim.error <= 1e-6);
  }

  // with a vanishing fluctuation the closed limit matrix stays at zero and
  // the finite-eps flux is already small
  PrescribedState g0;
  g0.name = "g0";
  g0.v0 = {1.0, 0.0, 0.0};
  SweepResult res = friction_flux_sweep(g0, KernelModel::charles_inelastic(),
                                        Schedule::cubic({0.1}), alpha);
  CHECK(res.rows.front().error <= 0.15);
  CHECK(res.rows.back().error <= 1e-6);
  CHECK(std::abs(res.rows.back().extra) <= 1e-10);
}
