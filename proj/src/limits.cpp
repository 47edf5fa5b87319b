#include "aerokin/limits.hpp"

#include <cmath>

#include "aerokin/common.hpp"
#include "aerokin/quadrature.hpp"
#include "aerokin/transport.hpp"

namespace aerokin {

TestFunction TestFunction::v1() {
  TestFunction f;
  f.name = "v1";
  f.value = [](const Vec3& v) { return v.x; };
  f.grad = [](const Vec3&) { return Vec3{1.0, 0.0, 0.0}; };
  f.hess = [](const Vec3&) { return Mat3{}; };
  return f;
}

TestFunction TestFunction::cos_v1() {
  TestFunction f;
  f.name = "cos_v1";
  f.value = [](const Vec3& v) { return std::cos(v.x); };
  f.grad = [](const Vec3& v) { return Vec3{-std::sin(v.x), 0.0, 0.0}; };
  f.hess = [](const Vec3& v) {
    Mat3 h{};
    h(0, 0) = -std::cos(v.x);
    return h;
  };
  return f;
}

TestFunction TestFunction::by_name(const std::string& name) {
  if (name == "v1") return v1();
  if (name == "cos_v1") return cos_v1();
  throw ContractError("unknown test function: " + name);
}

PrescribedState PrescribedState::by_name(const std::string& name) {
  PrescribedState s;
  s.name = name;
  if (name == "drag_default") {
    s.v0 = {1.0, 0.0, 0.0};
    s.g.rho = 0.6;
    s.g.theta = 0.3;
    s.phi = TestFunction::cos_v1();
  } else if (name == "drag_v1") {
    s.v0 = {1.0, 0.0, 0.0};
    s.g.rho = 0.6;
    s.g.theta = 0.3;
    s.phi = TestFunction::v1();
  } else if (name == "friction_default") {
    s.v0 = {2.0, 0.0, 0.0};
  } else if (name == "flux_default") {
    s.v0 = {1.0, 0.0, 0.0};
    s.g.rho = 0.2;
    s.g.u = {0.5, 0.0, 0.0};
    s.g.theta = 0.1;
  } else {
    throw ContractError("unknown state preset: " + name);
  }
  return s;
}

double fitted_order(const std::vector<double>& eps, const std::vector<double>& err, int tail) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (err[i] > 0.0) {
      xs.push_back(std::log(eps[i]));
      ys.push_back(std::log(err[i]));
    }
  }
  const int n = int(xs.size());
  const int use = std::min(n, tail);
  if (use < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = n - use; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double d = use * sxx - sx * sx;
  return d == 0.0 ? 0.0 : (use * sxy - sx * sy) / d;
}

namespace {

// Gas-side inner integral int f(W) fn(W) dW with f = M (1 + eps g), on a
// spherical grid centered at eps*V so the relative speed is the radial
// coordinate.
template <class Fn>
void gas_inner(const Vec3& V, const HermitePerturbation& g, double eps,
               const SweepOptions& opts, const SphereRule& sph, Fn&& fn) {
  const Vec3 center = eps * V;
  for_radial_sphere(center, opts.inner_rmax + norm(center), opts.inner_radial, sph,
                    [&](const Vec3& W, double wgt, double r) {
    const double f = Maxwellian::value(W) * (1.0 + eps * g(W));
    if (f == 0.0) return;
    fn(W, wgt * f, r);
  });
}

}  // namespace

SweepResult drag_limit_sweep(const PrescribedState& state, const KernelModel& kernel,
                             const Schedule& schedule, const SweepOptions& opts) {
  schedule.validate();
  SweepResult res;
  res.prop = "drag";
  res.kernel = kernel.name();
  res.state = state.name;
  res.estimate_labels = {"estimate"};
  res.extra_label = "j_term";

  const SphereRule sph = SphereRule::product(opts.inner_sphere_degree);
  const ScalingParams pq{0.5, 0.125, opts.beta};
  const double kappa = compute_kappa([&](double r) { return kernel.Q(r, pq); });

  // Limit value -kappa int F grad(phi).(v-u) dv.
  double limit = 0.0;
  for_gauss_hermite3(state.v0, state.spread, opts.outer_gh, [&](const Vec3& V, double wgt) {
    limit += wgt * dot(state.phi.grad(V), V - state.g.u);
  });
  limit *= -kappa;

  std::vector<double> epss, errs, js;
  for (auto [eps, eta] : schedule.points) {
    ScalingParams p{eps, eta, opts.beta};
    double first_order = 0.0, second_order = 0.0;
    for_gauss_hermite3(state.v0, state.spread, opts.outer_gh, [&](const Vec3& V, double wgt) {
      const Vec3 gphi = state.phi.grad(V);
      const Mat3 hphi = state.phi.hess(V);
      double acc1 = 0.0, acc2 = 0.0;
      gas_inner(V, state.g, eps, opts, sph, [&](const Vec3& W, double fw, double) {
        acc1 += fw * dot(gphi, kernel.deflection_moment_pg(V, W, p));
        acc2 += fw * contract(hphi, kernel.deflection_second_moment_pg(V, W, p));
      });
      first_order += wgt * acc1;
      second_order += wgt * acc2;
    });
    const double i_term = first_order / eta;
    const double j_term = 0.5 * second_order / eta;
    SweepRow row;
    row.epsilon = eps;
    row.eta = eta;
    row.estimate = {i_term + j_term};
    row.limit = {limit};
    row.error = std::abs(i_term + j_term - limit);
    row.extra = std::abs(j_term);
    res.rows.push_back(row);
    epss.push_back(eps);
    errs.push_back(row.error);
    js.push_back(row.extra);
  }
  res.fitted_order = fitted_order(epss, errs);
  res.extra_order = fitted_order(epss, js);
  return res;
}

SweepResult friction_limit_sweep(const PrescribedState& state, const KernelModel& kernel,
                                 const Schedule& schedule, const SweepOptions& opts) {
  schedule.validate();
  SweepResult res;
  res.prop = "friction";
  res.kernel = kernel.name();
  res.state = state.name;
  res.estimate_labels = {"estimate_x", "estimate_y", "estimate_z"};
  res.extra_label = "identity_gap";

  const SphereRule sph = SphereRule::product(opts.inner_sphere_degree);
  const ScalingParams pq{0.5, 0.125, opts.beta};
  const double kappa = compute_kappa([&](double r) { return kernel.Q(r, pq); });

  Vec3 limit{};
  for_gauss_hermite3(state.v0, state.spread, opts.outer_gh, [&](const Vec3& V, double wgt) {
    limit += wgt * (V - state.g.u);
  });
  limit *= kappa;

  std::vector<double> epss, errs;
  for (auto [eps, eta] : schedule.points) {
    ScalingParams p{eps, eta, opts.beta};
    Vec3 gp_side{}, pg_side{};
    for_gauss_hermite3(state.v0, state.spread, opts.outer_gh, [&](const Vec3& V, double wgt) {
      Vec3 acc_gp{}, acc_pg{};
      gas_inner(V, state.g, eps, opts, sph, [&](const Vec3& W, double fw, double) {
        acc_gp += fw * kernel.recoil_moment_gp(V, W, p);
        acc_pg += fw * kernel.deflection_moment_pg(V, W, p);
      });
      gp_side += wgt * acc_gp;
      pg_side += wgt * acc_pg;
    });
    const Vec3 lhs = (1.0 / eps) * gp_side;       // (1/eps) int w R dw
    const Vec3 rhs = (-1.0 / eta) * pg_side;      // -(1/eta) int v D dv
    SweepRow row;
    row.epsilon = eps;
    row.eta = eta;
    row.estimate = {lhs.x, lhs.y, lhs.z};
    row.limit = {limit.x, limit.y, limit.z};
    row.error = norm(lhs - limit);
    row.extra = norm(lhs - rhs);
    res.rows.push_back(row);
    epss.push_back(eps);
    errs.push_back(row.error);
  }
  res.fitted_order = fitted_order(epss, errs);
  return res;
}

SweepResult friction_flux_sweep(const PrescribedState& state, const KernelModel& kernel,
                                const Schedule& schedule, double alpha,
                                const SweepOptions& opts) {
  schedule.validate();
  SweepResult res;
  res.prop = "flux";
  res.kernel = kernel.name();
  res.state = state.name;
  res.estimate_labels = {"m11", "m12", "m13", "m21", "m22", "m23", "m31", "m32", "m33"};
  res.extra_label = "trace";

  const SphereRule sph = SphereRule::product(opts.inner_sphere_degree);

  std::vector<double> epss, errs;
  auto push_row = [&](double eps, double eta, const Mat3& m) {
    SweepRow row;
    row.epsilon = eps;
    row.eta = eta;
    row.estimate.assign(m.m.begin(), m.m.end());
    row.limit.assign(9, 0.0);
    row.error = m.frobenius();
    row.extra = m.trace();
    res.rows.push_back(row);
  };

  for (auto [eps, eta] : schedule.points) {
    ScalingParams p{eps, eta, opts.beta};
    Mat3 total{};
    for_gauss_hermite3(state.v0, state.spread, opts.outer_gh, [&](const Vec3& V, double wgt) {
      Mat3 acc{};
      gas_inner(V, state.g, eps, opts, sph, [&](const Vec3& W, double fw, double) {
        Mat3 m = kernel.flux_A_moment_gp(V, W, p);
        m *= fw;
        acc += m;
      });
      acc *= wgt;
      total += acc;
    });
    total *= alpha;
    push_row(eps, eta, total);
    epss.push_back(eps);
    errs.push_back(total.frobenius());
  }
  res.fitted_order = fitted_order(epss, errs);

  // Closed eps = eta = 0 limit: the gas marginal is the plain Maxwellian and
  // the moment no longer depends on V.
  {
    ScalingParams p0{};
    p0.epsilon = 0.0;
    p0.eta = 0.0;
    p0.beta = opts.beta;
    Mat3 lim{};
    for_radial_sphere(Vec3{}, opts.inner_rmax, opts.inner_radial, sph,
                      [&](const Vec3& W, double wgt, double) {
      Mat3 m = kernel.flux_A_moment_gp(Vec3{}, W, p0);
      m *= wgt * Maxwellian::value(W);
      lim += m;
    });
    lim *= alpha;
    push_row(0.0, 0.0, lim);
  }
  return res;
}

Vec3 incompressibility_identity(const HermitePerturbation& g) {
  Vec3 m{};
  for_gauss_hermite3(Vec3{}, 1.0, 12, [&](const Vec3& w, double wgt) { m += (wgt * g(w)) * w; });
  return m;
}

}  // namespace aerokin
