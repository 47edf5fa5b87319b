#include "aerokin/moments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aerokin/mc.hpp"
#include "aerokin/quadrature.hpp"

namespace aerokin {

namespace {

std::string fail_or_pass(bool ok) { return ok ? "pass" : "fail"; }

// Two-sided componentwise acceptance at 3 sigma + abs_tol.
void finalize_two_sided(MomentReport& r) {
  bool ok = true;
  for (std::size_t i = 0; i < r.estimate.size(); ++i) {
    const double dev = std::abs(r.estimate[i] - r.closed_form[i]);
    if (dev > 3.0 * r.stderr_[i] + r.abs_tol) ok = false;
  }
  r.verdict = fail_or_pass(ok);
}

MomentReport base_report(const std::string& check, const KernelModel& kernel, const Vec3& V,
                         const Vec3& W, const ScalingParams& p, const CheckOptions& opts) {
  MomentReport r;
  r.check = check;
  r.kernel = kernel.name();
  r.params = p;
  r.V = V;
  r.W = W;
  r.n_samples = opts.n_samples;
  r.abs_tol = opts.abs_tol;
  return r;
}

Mat3 random_rotation(RngStream& rng) {
  // Gram-Schmidt on a Gaussian triple.
  Vec3 a = rng.normal3();
  a = a / norm(a);
  Vec3 b = rng.normal3();
  b = b - dot(a, b) * a;
  b = b / norm(b);
  Vec3 c = {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
  Mat3 R;
  for (int j = 0; j < 3; ++j) {
    R(0, j) = (&a.x)[j];
    R(1, j) = (&b.x)[j];
    R(2, j) = (&c.x)[j];
  }
  return R;
}

double t5_pdf(const Vec3& v) {
  // Multivariate Student-t, 5 dof, unit scale, dimension 3.
  static const double c = std::tgamma(4.0) / (std::tgamma(2.5) * std::pow(5.0 * M_PI, 1.5));
  return c * std::pow(1.0 + norm2(v) / 5.0, -4.0);
}

Vec3 t5_sample(RngStream& rng) {
  Vec3 g = rng.normal3();
  double chi2 = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double n = rng.normal();
    chi2 += n * n;
  }
  return std::sqrt(5.0 / chi2) * g;
}

}  // namespace

// ---------------------------------------------------------------------------
// H1: mass of both transition measures
// ---------------------------------------------------------------------------

std::vector<MomentReport> check_H1_mass(const KernelModel& kernel, const Vec3& V, const Vec3& W,
                                        const ScalingParams& p, const CheckOptions& opts) {
  p.validate();
  const Vec3 z = p.epsilon * V - W;
  const double r = norm(z);
  const double q = kernel.q(r, p);

  auto make_side = [&](const char* name, bool pg_side, std::uint64_t seed) {
    MomentReport rep = base_report(name, kernel, V, W, p, opts);
    McEstimate est;
    if (kernel.is_elastic()) {
      const ElasticPGKernel& ek = kernel.elastic_kernel();
      est = mc_run(seed, opts.n_samples, 1, [&](RngStream& rng, std::vector<double>& out) {
        out[0] = 4.0 * M_PI * ek.b(z, rng.unit_sphere());
      }, opts.workers);
    } else if (pg_side) {
      const Vec3 c = (p.epsilon * V + p.eta * W) / (1.0 + p.eta);
      const double sv = p.eta / (p.epsilon * p.beta * (1.0 + p.eta));
      const double pref = std::pow(2.0 * M_PI, 1.5) * sv * sv * sv;
      est = mc_run(seed, opts.n_samples, 1, [&](RngStream& rng, std::vector<double>& out) {
        const Vec3 xi = rng.normal3();
        const Vec3 v = (1.0 / p.epsilon) * c - sv * xi;
        out[0] = pref * eval_K_pg_exact(v, V, W, p) * std::exp(0.5 * norm2(xi));
      }, opts.workers);
    } else {
      const Vec3 c = (p.epsilon * V + p.eta * W) / (1.0 + p.eta);
      const double sw = 1.0 / (p.beta * (1.0 + p.eta));
      const double pref = std::pow(2.0 * M_PI, 1.5) * sw * sw * sw;
      est = mc_run(seed, opts.n_samples, 1, [&](RngStream& rng, std::vector<double>& out) {
        const Vec3 zeta = rng.normal3();
        const Vec3 w = c + sw * zeta;
        out[0] = pref * eval_K_gp_exact(w, V, W, p) * std::exp(0.5 * norm2(zeta));
      }, opts.workers);
    }
    rep.estimate = est.mean;
    rep.stderr_ = est.stderr_;
    rep.closed_form = {q};
    finalize_two_sided(rep);
    return rep;
  };

  MomentReport pg = make_side("H1_mass_pg", true, opts.seed);
  MomentReport gp = make_side("H1_mass_gp", false, opts.seed ^ 0x5bd1e995u);

  MomentReport agree = base_report("H1_sides_agree", kernel, V, W, p, opts);
  agree.estimate = {pg.estimate[0] - gp.estimate[0]};
  agree.closed_form = {0.0};
  agree.stderr_ = {std::hypot(pg.stderr_[0], gp.stderr_[0])};
  finalize_two_sided(agree);
  return {pg, gp, agree};
}

// ---------------------------------------------------------------------------
// H2: momentum-exchange moments
// ---------------------------------------------------------------------------

std::vector<MomentReport> check_H2_momentum(const KernelModel& kernel, const Vec3& V, const Vec3& W,
                                            const ScalingParams& p, const CheckOptions& opts) {
  p.validate();
  const Vec3 z = p.epsilon * V - W;
  const double r = norm(z);
  const double q = kernel.q(r, p);
  const Vec3 closed = -(p.eta / (1.0 + p.eta)) * kernel.Q(r, p) * z;

  auto side = [&](const char* name, bool pg_side, std::uint64_t seed) {
    MomentReport rep = base_report(name, kernel, V, W, p, opts);
    McEstimate est = mc_run(seed, opts.n_samples, 3, [&](RngStream& rng, std::vector<double>& out) {
      auto [v_out, w_out] = kernel.sample(V, W, p, rng);
      const Vec3 m = pg_side ? (p.epsilon * q) * (v_out - V) : (-p.eta * q) * (w_out - W);
      out[0] = m.x;
      out[1] = m.y;
      out[2] = m.z;
    }, opts.workers);
    rep.estimate = est.mean;
    rep.stderr_ = est.stderr_;
    rep.closed_form = {closed.x, closed.y, closed.z};
    finalize_two_sided(rep);
    return rep;
  };

  MomentReport pg = side("H2_momentum_pg", true, opts.seed);
  MomentReport gp = side("H2_momentum_gp", false, opts.seed ^ 0xc2b2ae35u);

  MomentReport agree = base_report("H2_sides_agree", kernel, V, W, p, opts);
  agree.closed_form = {0.0, 0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    agree.estimate.push_back(pg.estimate[i] - gp.estimate[i]);
    agree.stderr_.push_back(std::hypot(pg.stderr_[i], gp.stderr_[i]));
  }
  finalize_two_sided(agree);
  return {pg, gp, agree};
}

// ---------------------------------------------------------------------------
// H3: squared dispersion about the center of mass
// ---------------------------------------------------------------------------

std::vector<MomentReport> check_H3_bound(const KernelModel& kernel, const Vec3& V, const Vec3& W,
                                         const ScalingParams& p, const CheckOptions& opts) {
  p.validate();
  const Vec3 z = p.epsilon * V - W;
  const double r = norm(z);
  const double q = kernel.q(r, p);
  const Vec3 c = (p.epsilon * V + p.eta * W) / (1.0 + p.eta);

  MomentReport rep = base_report("H3_dispersion", kernel, V, W, p, opts);
  McEstimate est = mc_run(opts.seed, opts.n_samples, 1, [&](RngStream& rng, std::vector<double>& out) {
    auto [v_out, w_out] = kernel.sample(V, W, p, rng);
    (void)w_out;
    out[0] = q * norm2(p.epsilon * v_out - c);
  }, opts.workers);
  rep.estimate = est.mean;
  rep.stderr_ = est.stderr_;

  const double eta_f = p.eta / (1.0 + p.eta);
  if (kernel.is_elastic()) {
    // Exact per collision: |eps v'' - c|^2 = (eta/(1+eta))^2 |eps v - w|^2.
    rep.closed_form = {eta_f * eta_f * r * r * q};
    finalize_two_sided(rep);
  } else {
    const double bound = kernel.dispersion_bound_constant(p) * p.eta * p.eta * (1.0 + r * r) * q;
    rep.closed_form = {bound};
    rep.one_sided = true;
    rep.slack = bound - rep.estimate[0];
    rep.verdict = fail_or_pass(rep.estimate[0] <= bound + 3.0 * rep.stderr_[0] + rep.abs_tol);
    rep.detail = "one-sided bound";
  }
  return {rep};
}

// ---------------------------------------------------------------------------
// H4: O3 invariance of the limiting measure + weak residual decay
// ---------------------------------------------------------------------------

namespace {

// V-marginal of the gp measure paired with the two fixed test profiles.
// phi1 = (1 + |w|^2 + |W|^2) M(W), phi2 = w1 w2 M(W).
void gp_test_profile_marginal(const KernelModel& kernel, const Vec3& V, const ScalingParams& p,
                              const SphereRule& sph, double& t1, double& t2) {
  double a1 = 0.0, a2 = 0.0;
  const Vec3 center = p.epsilon * V;
  for_radial_sphere(center, 8.0 + norm(center), 32, sph, [&](const Vec3& W, double wgt, double) {
    const double m = Maxwellian::value(W);
    if (m < 1e-300) return;
    const double lam = kernel.weighted_gp_mass(V, W, p);
    const double q = kernel.q(norm(p.epsilon * V - W), p);
    a1 += wgt * m * (lam + norm2(W) * q);
    a2 += wgt * m * kernel.gp_second_moment(V, W, p)(0, 1);
  });
  t1 = a1;
  t2 = a2;
}

}  // namespace

RotationCheck check_H4_rotation(const KernelModel& kernel, double beta,
                                const Schedule& schedule, int n_points, double tol,
                                std::uint64_t seed) {
  RotationCheck res;
  RngStream rng(seed);

  std::vector<Mat3> rotations;
  rotations.push_back(Mat3::identity());
  Mat3 refl = Mat3::identity();
  refl(2, 2) = -1.0;  // improper element: invariance is under all of O3
  rotations.push_back(refl);
  for (int i = 0; i < 8; ++i) rotations.push_back(random_rotation(rng));

  double maxdev = 0.0;
  for (int i = 0; i < n_points; ++i) {
    const Vec3 w = 1.5 * rng.normal3();
    const Vec3 W = 1.5 * rng.normal3();
    if (kernel.is_elastic()) {
      const Vec3 om = rng.unit_sphere();
      const double ref = kernel.elastic_kernel().b(w, om);
      for (const Mat3& R : rotations) {
        maxdev = std::max(maxdev, std::abs(kernel.elastic_kernel().b(mul(R, w), mul(R, om)) - ref));
      }
    } else {
      const double ref = eval_K00(w, W, beta);
      for (const Mat3& R : rotations) {
        maxdev = std::max(maxdev, std::abs(eval_K00(mul(R, w), mul(R, W), beta) - ref));
      }
    }
  }
  res.max_deviation = maxdev;

  // Weak-convergence residual on the fixed test-profile set, reported per
  // schedule point. The limit marginal is V-independent.
  const SphereRule sph = SphereRule::product(20);
  double t1_lim, t2_lim;
  {
    ScalingParams p0{};
    p0.epsilon = 0.0;
    p0.eta = 0.0;
    p0.beta = beta;
    gp_test_profile_marginal(kernel, Vec3{}, p0, sph, t1_lim, t2_lim);
  }
  const SphereRule vsph = SphereRule::product(10);
  for (auto [eps, eta] : schedule.points) {
    ScalingParams p{eps, eta, beta};
    double resid = 0.0;
    for_radial_sphere(Vec3{}, 12.0, 24, vsph, [&](const Vec3& V, double wgt, double) {
      double t1, t2;
      gp_test_profile_marginal(kernel, V, p, sph, t1, t2);
      resid += wgt * std::pow(1.0 + norm2(V), -4.0) * (std::abs(t1 - t1_lim) + std::abs(t2 - t2_lim));
    });
    res.weak_residuals.push_back(resid);
  }

  bool decay = true;
  for (std::size_t i = 1; i < res.weak_residuals.size(); ++i)
    if (res.weak_residuals[i] > res.weak_residuals[i - 1] * 1.05 + 1e-12) decay = false;
  res.pass = maxdev <= tol && decay;
  std::ostringstream os;
  os << "pointwise max deviation " << maxdev << "; weak residuals";
  for (double v : res.weak_residuals) os << " " << v;
  res.detail = os.str();
  return res;
}

// ---------------------------------------------------------------------------
// H5: uniform bound of the weighted triple integral
// ---------------------------------------------------------------------------

std::vector<MomentReport> check_H5_bound(const KernelModel& kernel, const Schedule& schedule,
                                         double beta, int p_exp, const CheckOptions& opts) {
  AK_REQUIRE(p_exp > 3, "H5: weight exponent must exceed 3");
  const char* h_names[3] = {"1", "w1", "|w|^2-3"};
  auto h_eval = [](int which, const Vec3& w) {
    switch (which) {
      case 0: return 1.0;
      case 1: return w.x;
      default: return norm2(w) - 3.0;
    }
  };

  std::vector<MomentReport> out;
  for (int hi = 0; hi < 3; ++hi) {
    MomentReport rep;
    rep.check = std::string("H5_bound_h=") + h_names[hi];
    rep.kernel = kernel.name();
    rep.params = ScalingParams{schedule.points.front().first, schedule.points.front().second, beta};
    rep.n_samples = opts.n_samples;
    rep.abs_tol = opts.abs_tol;
    for (std::size_t si = 0; si < schedule.points.size(); ++si) {
      ScalingParams p{schedule.points[si].first, schedule.points[si].second, beta};
      McEstimate est = mc_run(opts.seed + 977 * si + hi, opts.n_samples, 1,
                              [&](RngStream& rng, std::vector<double>& out1) {
        const Vec3 V = t5_sample(rng);
        const Vec3 W = rng.normal3();
        const double lam = kernel.weighted_gp_mass(V, W, p);
        out1[0] = (1.0 + norm2(W)) * std::pow(1.0 + norm2(V), -double(p_exp)) *
                  std::abs(h_eval(hi, W)) * lam / t5_pdf(V);
      }, opts.workers);
      rep.estimate.push_back(est.mean[0]);
      rep.stderr_.push_back(est.stderr_[0]);
    }
    // Bounded uniformly over the schedule: certified by the max, and the
    // tail may not grow past the first point beyond noise.
    const double cert = *std::max_element(rep.estimate.begin(), rep.estimate.end());
    bool ok = true;
    for (std::size_t i = 1; i < rep.estimate.size(); ++i) {
      if (rep.estimate[i] > rep.estimate[0] * 1.25 + 3.0 * (rep.stderr_[i] + rep.stderr_[0]))
        ok = false;
    }
    rep.closed_form.assign(rep.estimate.size(), cert);
    rep.one_sided = true;
    rep.verdict = fail_or_pass(ok);
    std::ostringstream os;
    os << "certified bound " << cert;
    rep.detail = os.str();
    out.push_back(std::move(rep));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mixed momentum conservation
// ---------------------------------------------------------------------------

std::vector<MomentReport> check_mixed_momentum(const KernelModel& kernel, const VelocityCloud& cloud,
                                               const HermitePerturbation& g, const ScalingParams& p,
                                               const CheckOptions& opts) {
  p.validate();
  cloud.validate();
  const double total_w = cloud.total_weight();
  std::vector<double> cdf(cloud.weight.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < cloud.weight.size(); ++i) {
    acc += cloud.weight[i] / total_w;
    cdf[i] = acc;
  }
  auto pick = [&](RngStream& rng) {
    const double u = rng.uniform01();
    return std::size_t(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  };

  auto side = [&](bool pg_side, std::uint64_t seed) {
    return mc_run(seed, opts.n_samples, 3, [&](RngStream& rng, std::vector<double>& out) {
      const std::size_t i = std::min(pick(rng), cloud.v.size() - 1);
      const Vec3 V = cloud.v[i];
      const Vec3 W = rng.normal3();  // draw from M, weight by (1 + eps g)
      const double fw = 1.0 + p.epsilon * g(W);
      const double q = kernel.q(norm(p.epsilon * V - W), p);
      auto [v_out, w_out] = kernel.sample(V, W, p, rng);
      const Vec3 m = pg_side ? (p.epsilon * q * fw * total_w) * (v_out - V)
                             : (p.eta * q * fw * total_w) * (w_out - W);
      out[0] = m.x;
      out[1] = m.y;
      out[2] = m.z;
    }, opts.workers);
  };

  McEstimate pg = side(true, opts.seed);
  McEstimate gp = side(false, opts.seed ^ 0x27d4eb2fu);

  MomentReport rep;
  rep.check = "mixed_momentum_conservation";
  rep.kernel = kernel.name();
  rep.params = p;
  rep.n_samples = opts.n_samples;
  rep.abs_tol = opts.abs_tol;
  rep.closed_form = {0.0, 0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    rep.estimate.push_back(pg.mean[i] + gp.mean[i]);
    rep.stderr_.push_back(std::hypot(pg.stderr_[i], gp.stderr_[i]));
  }
  finalize_two_sided(rep);
  return {rep};
}

// ---------------------------------------------------------------------------
// Suite
// ---------------------------------------------------------------------------

std::vector<MomentReport> verify_kernel_suite(const KernelModel& kernel, const ScalingParams& p,
                                              const CheckOptions& opts, int n_random) {
  std::vector<MomentReport> all;
  const Vec3 V0{10.0, 0.0, 0.0}, W0{};

  auto append = [&](std::vector<MomentReport> reports) {
    for (auto& r : reports) all.push_back(std::move(r));
  };

  append(check_H1_mass(kernel, V0, W0, p, opts));
  append(check_H2_momentum(kernel, V0, W0, p, opts));
  append(check_H3_bound(kernel, V0, W0, p, opts));

  // Randomized configurations at a tenth of the sample budget each. A 3
  // sigma gate fails one comparison in ~370 by construction, so the batch
  // verdict uses a binomial allowance on the failure count instead of
  // demanding a clean sweep.
  {
    CheckOptions ropts = opts;
    ropts.n_samples = std::max<std::uint64_t>(opts.n_samples / 10, 20000);
    RngStream rng(opts.seed ^ 0x85ebca6bu);
    int comparisons = 0, failures = 0;
    for (int i = 0; i < n_random; ++i) {
      ScalingParams rp;
      rp.epsilon = rng.uniform(0.05, 0.5);
      rp.eta = rng.uniform(0.002, 0.05);
      rp.beta = rng.uniform(0.5, 2.0);
      Vec3 V = 2.0 * rng.normal3(), W = 1.2 * rng.normal3();
      while (norm(rp.epsilon * V - W) < 0.05) W = 1.2 * rng.normal3();
      ropts.seed = opts.seed + 1000003ull * (i + 1);
      for (const auto& rep : check_H2_momentum(kernel, V, W, rp, ropts)) {
        comparisons += int(rep.estimate.size());
        if (!rep.passed()) ++failures;
      }
    }
    const double p0 = 0.0027;
    const double mean = comparisons * p0;
    const int max_fails = int(std::ceil(mean + 3.0 * std::sqrt(mean * (1.0 - p0)))) + 1;
    MomentReport batch;
    batch.check = "H2_randomized_batch";
    batch.kernel = kernel.name();
    batch.params = p;
    batch.n_samples = ropts.n_samples;
    batch.estimate = {double(failures)};
    batch.closed_form = {0.0};
    batch.stderr_ = {0.0};
    batch.one_sided = true;
    batch.abs_tol = max_fails;
    batch.verdict = failures <= max_fails ? "pass" : "fail";
    batch.detail = std::to_string(n_random) + " configurations, " + std::to_string(comparisons) +
                   " comparisons, allowance " + std::to_string(max_fails);
    all.push_back(std::move(batch));
  }

  const Schedule sched = Schedule::cubic({0.4, 0.2, 0.1});
  RotationCheck rot = check_H4_rotation(kernel, p.beta, sched, 1000, 1e-10, opts.seed + 7);
  MomentReport rrep;
  rrep.check = "H4_rotation_invariance";
  rrep.kernel = kernel.name();
  rrep.params = p;
  rrep.estimate = {rot.max_deviation};
  rrep.closed_form = {0.0};
  rrep.stderr_ = {0.0};
  rrep.abs_tol = 1e-10;
  rrep.verdict = rot.pass ? "pass" : "fail";
  rrep.detail = rot.detail;
  all.push_back(std::move(rrep));

  CheckOptions h5opts = opts;
  h5opts.n_samples = std::max<std::uint64_t>(opts.n_samples / 5, 20000);
  append(check_H5_bound(kernel, sched, p.beta, 4, h5opts));

  VelocityCloud cloud;
  cloud.v = {{1.0, 0.0, 0.0}, {-0.5, 0.3, 0.2}};
  cloud.weight = {1.0, 0.5};
  HermitePerturbation g;
  g.rho = 0.3;
  g.theta = 0.2;
  append(check_mixed_momentum(kernel, cloud, g, p, opts));

  return all;
}

}  // namespace aerokin
