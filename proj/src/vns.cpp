#include "aerokin/vns.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "aerokin/rng.hpp"

namespace aerokin::vns {

namespace {
constexpr double kBox = 2.0 * M_PI;
}

void VnsConfig::validate() const {
  AK_REQUIRE(dim == 2 || dim == 3, "vns: dim must be 2 or 3");
  AK_REQUIRE(grid_n >= 8 && grid_n % 2 == 0, "vns: grid_n must be even and >= 8");
  AK_REQUIRE(nu >= 0.0, "vns: negative viscosity");
  AK_REQUIRE(kappa >= 0.0, "vns: negative drag coefficient");
  AK_REQUIRE(dt > 0.0, "vns: dt must be positive");
  AK_REQUIRE(steps >= 0, "vns: negative step count");
  AK_REQUIRE(particle_count >= 0, "vns: negative particle count");
  AK_REQUIRE(cfl_limit > 0.0, "vns: cfl limit must be positive");
}

// ---------------------------------------------------------------------------
// FFT wrapper
// ---------------------------------------------------------------------------

class Fft {
 public:
  Fft(int dim, int n) : dim_(dim), n_(n) {
    grid_ = 1;
    for (int d = 0; d < dim; ++d) grid_ *= std::size_t(n);
    spec_ = grid_ / n * (n / 2 + 1);
    real_buf_ = fftw_alloc_real(grid_);
    cplx_buf_ = fftw_alloc_complex(spec_);
    if (dim == 2) {
      fwd_ = fftw_plan_dft_r2c_2d(n, n, real_buf_, cplx_buf_, FFTW_ESTIMATE);
      bwd_ = fftw_plan_dft_c2r_2d(n, n, cplx_buf_, real_buf_, FFTW_ESTIMATE);
    } else {
      fwd_ = fftw_plan_dft_r2c_3d(n, n, n, real_buf_, cplx_buf_, FFTW_ESTIMATE);
      bwd_ = fftw_plan_dft_c2r_3d(n, n, n, cplx_buf_, real_buf_, FFTW_ESTIMATE);
    }
  }
  ~Fft() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(real_buf_);
    fftw_free(cplx_buf_);
  }

  void forward(const std::vector<double>& in, std::vector<std::complex<double>>& out) const {
    std::memcpy(real_buf_, in.data(), grid_ * sizeof(double));
    fftw_execute(fwd_);
    out.resize(spec_);
    std::memcpy(out.data(), cplx_buf_, spec_ * sizeof(fftw_complex));
  }

  void backward(const std::vector<std::complex<double>>& in, std::vector<double>& out) const {
    std::memcpy(cplx_buf_, in.data(), spec_ * sizeof(fftw_complex));
    fftw_execute(bwd_);
    out.resize(grid_);
    const double scale = 1.0 / double(grid_);
    for (std::size_t i = 0; i < grid_; ++i) out[i] = real_buf_[i] * scale;
  }

  std::size_t grid_size() const { return grid_; }
  std::size_t spec_size() const { return spec_; }

 private:
  int dim_, n_;
  std::size_t grid_ = 0, spec_ = 0;
  double* real_buf_ = nullptr;
  fftw_complex* cplx_buf_ = nullptr;
  fftw_plan fwd_{}, bwd_{};
};

// ---------------------------------------------------------------------------
// FluidState
// ---------------------------------------------------------------------------

FluidState::FluidState(int dim, int n) : dim_(dim), n_(n) {
  grid_size_ = 1;
  for (int d = 0; d < dim; ++d) grid_size_ *= std::size_t(n);
  spec_size_ = grid_size_ / n * (n / 2 + 1);
  uhat_.assign(dim, std::vector<std::complex<double>>(spec_size_, {0.0, 0.0}));

  kvec_.resize(spec_size_);
  mask_.resize(spec_size_);
  const int nh = n / 2 + 1;
  const int kcut = n / 3;
  auto signed_k = [n](int i) { return i <= n / 2 ? i : i - n; };
  if (dim == 2) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < nh; ++j) {
        const std::size_t s = std::size_t(i) * nh + j;
        kvec_[s] = {double(signed_k(i)), double(j), 0.0};
        mask_[s] = (std::abs(signed_k(i)) > kcut || j > kcut) ? 0.0 : 1.0;
      }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < nh; ++k) {
          const std::size_t s = (std::size_t(i) * n + j) * nh + k;
          kvec_[s] = {double(signed_k(i)), double(signed_k(j)), double(k)};
          mask_[s] =
              (std::abs(signed_k(i)) > kcut || std::abs(signed_k(j)) > kcut || k > kcut) ? 0.0
                                                                                         : 1.0;
        }
  }
}

void FluidState::project_divfree() {
  for (std::size_t s = 1; s < spec_size_; ++s) {
    const auto& k = kvec_[s];
    const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if (k2 == 0.0) continue;
    std::complex<double> kd{0.0, 0.0};
    for (int c = 0; c < dim_; ++c) kd += k[c] * uhat_[c][s];
    kd /= k2;
    for (int c = 0; c < dim_; ++c) uhat_[c][s] -= k[c] * kd;
  }
}

void FluidState::dealias() {
  for (int c = 0; c < dim_; ++c)
    for (std::size_t s = 0; s < spec_size_; ++s) uhat_[c][s] *= mask_[s];
}

double FluidState::max_divergence() const {
  double m = 0.0;
  const double scale = 1.0 / double(grid_size_);
  for (std::size_t s = 0; s < spec_size_; ++s) {
    std::complex<double> kd{0.0, 0.0};
    for (int c = 0; c < dim_; ++c) kd += kvec_[s][c] * uhat_[c][s];
    m = std::max(m, std::abs(kd) * scale);
  }
  return m;
}

void FluidState::to_real(const Fft& fft, int c, std::vector<double>& out) const {
  fft.backward(uhat_[c], out);
}

void FluidState::from_real(const Fft& fft, int c, const std::vector<double>& in) {
  fft.forward(in, uhat_[c]);
}

Vec3 FluidState::momentum() const {
  Vec3 m{};
  const double cv = cell_volume();
  for (int c = 0; c < dim_; ++c) m[c] = uhat_[c][0].real() / double(grid_size_) * box_volume();
  (void)cv;
  return m;
}

double FluidState::kinetic_energy() const {
  // Parseval: sum_x |u|^2 = (1/N) sum over the full spectrum |uhat|^2.
  double e = 0.0;
  const int nh = n_ / 2 + 1;
  for (int c = 0; c < dim_; ++c) {
    for (std::size_t s = 0; s < spec_size_; ++s) {
      const int kz = int(s % nh);
      const double mult = (kz == 0 || kz == n_ / 2) ? 1.0 : 2.0;
      e += mult * std::norm(uhat_[c][s]);
    }
  }
  const double n_total = double(grid_size_);
  return 0.5 * e / (n_total * n_total) * box_volume();
}

double FluidState::cell_volume() const { return std::pow(kBox / n_, dim_); }
double FluidState::box_volume() const { return std::pow(kBox, dim_); }

// ---------------------------------------------------------------------------
// ParticleCloud
// ---------------------------------------------------------------------------

Vec3 ParticleCloud::momentum() const {
  Vec3 m{};
  for (std::size_t i = 0; i < count(); ++i)
    for (int c = 0; c < dim; ++c) m[c] += weight[i] * v[i * dim + c];
  return m;
}

double ParticleCloud::kinetic_energy() const {
  double e = 0.0;
  for (std::size_t i = 0; i < count(); ++i) {
    double s = 0.0;
    for (int c = 0; c < dim; ++c) s += v[i * dim + c] * v[i * dim + c];
    e += 0.5 * weight[i] * s;
  }
  return e;
}

double ParticleCloud::total_weight() const {
  double s = 0.0;
  for (double w : weight) s += w;
  return s;
}

void ParticleCloud::wrap() {
  for (double& xi : x) {
    xi = std::fmod(xi, kBox);
    if (xi < 0.0) xi += kBox;
  }
}

// ---------------------------------------------------------------------------
// VnsSim
// ---------------------------------------------------------------------------

VnsSim::VnsSim(VnsConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  fft_ = std::make_unique<Fft>(cfg_.dim, cfg_.grid_n);
  fluid_ = std::make_unique<FluidState>(cfg_.dim, cfg_.grid_n);
  cloud_.dim = cfg_.dim;
  init_fields();
  init_particles();
  prev_energy_ = fluid_->kinetic_energy() + cloud_.kinetic_energy();
}

VnsSim::~VnsSim() = default;

void VnsSim::init_fields() {
  const int n = cfg_.grid_n;
  const double h = kBox / n;
  std::vector<double> comp(fluid_->grid_size());
  auto fill = [&](int c, auto&& fn) {
    if (cfg_.dim == 2) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) comp[std::size_t(i) * n + j] = fn(i * h, j * h, 0.0);
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            comp[(std::size_t(i) * n + j) * n + k] = fn(i * h, j * h, k * h);
    }
    fluid_->from_real(*fft_, c, comp);
  };

  const double a = cfg_.fluid_amplitude;
  if (cfg_.fluid_preset == "zero") {
    // already zero
  } else if (cfg_.fluid_preset == "uniform") {
    fill(0, [a](double, double, double) { return a; });
  } else if (cfg_.fluid_preset == "taylor_green") {
    if (cfg_.dim == 2) {
      fill(0, [a](double x, double y, double) { return a * std::sin(x) * std::cos(y); });
      fill(1, [a](double x, double y, double) { return -a * std::cos(x) * std::sin(y); });
    } else {
      fill(0, [a](double x, double y, double z) { return a * std::sin(x) * std::cos(y) * std::cos(z); });
      fill(1, [a](double x, double y, double z) { return -a * std::cos(x) * std::sin(y) * std::cos(z); });
      fill(2, [](double, double, double) { return 0.0; });
    }
  } else if (cfg_.fluid_preset == "random") {
    RngStream rng(cfg_.seed ^ 0xf1d2c3b4ull);
    for (int c = 0; c < cfg_.dim; ++c) {
      auto& uh = fluid_->uhat(c);
      for (std::size_t s = 1; s < fluid_->spec_size(); ++s) {
        const auto& k = fluid_->kvec()[s];
        const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if (k2 > 16.0 || fluid_->dealias_mask()[s] == 0.0) continue;
        uh[s] = std::complex<double>(rng.normal(), rng.normal()) * (a * double(fluid_->grid_size()) / 64.0);
      }
    }
  } else {
    throw ContractError("unknown fluid preset: " + cfg_.fluid_preset);
  }
  fluid_->dealias();
  fluid_->project_divfree();
}

void VnsSim::init_particles() {
  const int d = cfg_.dim;
  cloud_.x.assign(std::size_t(cfg_.particle_count) * d, 0.0);
  cloud_.v.assign(std::size_t(cfg_.particle_count) * d, 0.0);
  cloud_.weight.assign(cfg_.particle_count, 0.0);
  if (cfg_.particle_count == 0) return;
  const double w = cfg_.particle_weight_total / cfg_.particle_count;
  RngStream rng(cfg_.seed);
  for (int i = 0; i < cfg_.particle_count; ++i) {
    cloud_.weight[i] = w;
    for (int c = 0; c < d; ++c) cloud_.x[std::size_t(i) * d + c] = rng.uniform(0.0, kBox);
    if (cfg_.particle_preset == "gaussian") {
      for (int c = 0; c < d; ++c)
        cloud_.v[std::size_t(i) * d + c] = cfg_.particle_v0[c] + cfg_.particle_vth * rng.normal();
    } else if (cfg_.particle_preset == "rest") {
      // zero velocity
    } else if (cfg_.particle_preset == "single") {
      for (int c = 0; c < d; ++c) {
        cloud_.x[std::size_t(i) * d + c] = M_PI;
        cloud_.v[std::size_t(i) * d + c] = cfg_.particle_v0[c];
      }
    } else {
      throw ContractError("unknown particle preset: " + cfg_.particle_preset);
    }
  }
}

namespace {

// Quadratic B-spline weights about the nearest grid point.
inline void tsc_weights(double xh, int n, int idx[3], double w[3]) {
  const double gpos = std::floor(xh + 0.5);
  const double delta = xh - gpos;
  int g = int(gpos);
  g %= n;
  if (g < 0) g += n;
  idx[0] = (g - 1 + n) % n;
  idx[1] = g;
  idx[2] = (g + 1) % n;
  w[0] = 0.5 * (0.5 - delta) * (0.5 - delta);
  w[1] = 0.75 - delta * delta;
  w[2] = 0.5 * (0.5 + delta) * (0.5 + delta);
}

}  // namespace

void VnsSim::interp_velocity(const std::vector<std::vector<double>>& u_real, const double* xp,
                             double* u_out) const {
  const int n = cfg_.grid_n;
  const double invh = n / kBox;
  int ix[3], iy[3], iz[3];
  double wx[3], wy[3], wz[3];
  tsc_weights(xp[0] * invh, n, ix, wx);
  tsc_weights(xp[1] * invh, n, iy, wy);
  if (cfg_.dim == 3) tsc_weights(xp[2] * invh, n, iz, wz);
  for (int c = 0; c < cfg_.dim; ++c) u_out[c] = 0.0;
  if (cfg_.dim == 2) {
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double wgt = wx[a] * wy[b];
        const std::size_t s = std::size_t(ix[a]) * n + iy[b];
        for (int c = 0; c < 2; ++c) u_out[c] += wgt * u_real[c][s];
      }
  } else {
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int g = 0; g < 3; ++g) {
          const double wgt = wx[a] * wy[b] * wz[g];
          const std::size_t s = (std::size_t(ix[a]) * n + iy[b]) * n + iz[g];
          for (int c = 0; c < 3; ++c) u_out[c] += wgt * u_real[c][s];
        }
  }
}

std::vector<std::vector<double>> VnsSim::deposit_brinkman() const {
  const int n = cfg_.grid_n;
  const int d = cfg_.dim;
  std::vector<std::vector<double>> u_real(d);
  for (int c = 0; c < d; ++c) fluid_->to_real(*fft_, c, u_real[c]);
  std::vector<std::vector<double>> force(d, std::vector<double>(fluid_->grid_size(), 0.0));
  const double invcell = 1.0 / fluid_->cell_volume();
  const double invh = n / kBox;
  double up[3];
  int ix[3], iy[3], iz[3];
  double wx[3], wy[3], wz[3];
  for (std::size_t i = 0; i < cloud_.count(); ++i) {
    const double* xp = &cloud_.x[i * d];
    interp_velocity(u_real, xp, up);
    tsc_weights(xp[0] * invh, n, ix, wx);
    tsc_weights(xp[1] * invh, n, iy, wy);
    if (d == 3) tsc_weights(xp[2] * invh, n, iz, wz);
    for (int c = 0; c < d; ++c) {
      const double amp = cfg_.kappa * cloud_.weight[i] * (cloud_.v[i * d + c] - up[c]) * invcell;
      if (d == 2) {
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            force[c][std::size_t(ix[a]) * n + iy[b]] += amp * wx[a] * wy[b];
      } else {
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            for (int g = 0; g < 3; ++g)
              force[c][(std::size_t(ix[a]) * n + iy[b]) * n + iz[g]] += amp * wx[a] * wy[b] * wz[g];
      }
    }
  }
  return force;
}

void VnsSim::exchange_substep(double dt, CouplingDiagnostics& diag) {
  if (cloud_.count() == 0 || cfg_.kappa == 0.0) return;
  const int n = cfg_.grid_n;
  const int d = cfg_.dim;
  std::vector<std::vector<double>> u_real(d);
  for (int c = 0; c < d; ++c) fluid_->to_real(*fft_, c, u_real[c]);

  const double decay = std::exp(-cfg_.kappa * dt);
  const double invcell = 1.0 / fluid_->cell_volume();
  const double invh = n / kBox;
  std::vector<std::vector<double>> du(d, std::vector<double>(fluid_->grid_size(), 0.0));
  double up[3];
  int ix[3], iy[3], iz[3];
  double wx[3], wy[3], wz[3];
  for (std::size_t i = 0; i < cloud_.count(); ++i) {
    const double* xp = &cloud_.x[i * d];
    interp_velocity(u_real, xp, up);
    tsc_weights(xp[0] * invh, n, ix, wx);
    tsc_weights(xp[1] * invh, n, iy, wy);
    if (d == 3) tsc_weights(xp[2] * invh, n, iz, wz);
    for (int c = 0; c < d; ++c) {
      const double vold = cloud_.v[i * d + c];
      const double vnew = up[c] + (vold - up[c]) * decay;
      cloud_.v[i * d + c] = vnew;
      const double dp = cloud_.weight[i] * (vnew - vold);  // particle momentum gain
      const double amp = -dp * invcell;
      if (d == 2) {
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) du[c][std::size_t(ix[a]) * n + iy[b]] += amp * wx[a] * wy[b];
      } else {
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            for (int g = 0; g < 3; ++g)
              du[c][(std::size_t(ix[a]) * n + iy[b]) * n + iz[g]] += amp * wx[a] * wy[b] * wz[g];
      }
    }
  }
  // Norm of the exchanged impulse per unit time (Brinkman force magnitude).
  double fn = 0.0;
  for (int c = 0; c < d; ++c)
    for (double vgrid : du[c]) fn += vgrid * vgrid;
  diag.brinkman_norm = std::sqrt(fn * fluid_->cell_volume()) / dt;

  if (!cfg_.freeze_fluid) {
    std::vector<std::complex<double>> duhat;
    for (int c = 0; c < d; ++c) {
      fft_->forward(du[c], duhat);
      auto& uh = fluid_->uhat(c);
      for (std::size_t s = 0; s < fluid_->spec_size(); ++s) uh[s] += duhat[s];
    }
    fluid_->dealias();
    fluid_->project_divfree();
  }
}

void VnsSim::nonlinear_term(const std::vector<std::vector<std::complex<double>>>& in,
                            std::vector<std::vector<std::complex<double>>>& out) const {
  const int d = cfg_.dim;
  const std::size_t spec = fluid_->spec_size();
  std::vector<std::vector<double>> ur(d);
  for (int c = 0; c < d; ++c) fft_->backward(in[c], ur[c]);

  out.assign(d, std::vector<std::complex<double>>(spec, {0.0, 0.0}));
  std::vector<double> prod(fluid_->grid_size());
  std::vector<std::complex<double>> prod_hat;
  const auto& kv = fluid_->kvec();
  const auto& mask = fluid_->dealias_mask();
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      for (std::size_t s = 0; s < prod.size(); ++s) prod[s] = ur[a][s] * ur[b][s];
      fft_->forward(prod, prod_hat);
      // div(u (x) u)_i = ik_j (u_i u_j)^
      for (std::size_t s = 0; s < spec; ++s) {
        const std::complex<double> v = prod_hat[s] * mask[s];
        const std::complex<double> ik_a{0.0, kv[s][a]};
        const std::complex<double> ik_b{0.0, kv[s][b]};
        out[b][s] += ik_a * v;
        if (a != b) out[a][s] += ik_b * v;
      }
    }
  // Leray projection of -div(u (x) u).
  for (std::size_t s = 0; s < spec; ++s) {
    const auto& k = kv[s];
    const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    std::complex<double> kd{0.0, 0.0};
    for (int c = 0; c < d; ++c) kd += k[c] * out[c][s];
    for (int c = 0; c < d; ++c) {
      std::complex<double> val = out[c][s];
      if (k2 > 0.0) val -= k[c] * kd / k2;
      out[c][s] = -val;
    }
  }
}

void VnsSim::fluid_rk4_step(double dt) {
  const int d = cfg_.dim;
  const std::size_t spec = fluid_->spec_size();
  const auto& kv = fluid_->kvec();

  std::vector<double> e1(spec), e2(spec);
  for (std::size_t s = 0; s < spec; ++s) {
    const double k2 = kv[s][0] * kv[s][0] + kv[s][1] * kv[s][1] + kv[s][2] * kv[s][2];
    e1[s] = std::exp(-cfg_.nu * k2 * dt * 0.5);
    e2[s] = e1[s] * e1[s];
  }

  std::vector<std::vector<std::complex<double>>> u0(d), stage(d), n1, n2, n3, n4;
  for (int c = 0; c < d; ++c) u0[c] = fluid_->uhat(c);

  nonlinear_term(u0, n1);
  for (int c = 0; c < d; ++c) {
    stage[c].resize(spec);
    for (std::size_t s = 0; s < spec; ++s)
      stage[c][s] = e1[s] * (u0[c][s] + 0.5 * dt * n1[c][s]);
  }
  nonlinear_term(stage, n2);
  for (int c = 0; c < d; ++c)
    for (std::size_t s = 0; s < spec; ++s)
      stage[c][s] = e1[s] * u0[c][s] + 0.5 * dt * n2[c][s];
  nonlinear_term(stage, n3);
  for (int c = 0; c < d; ++c)
    for (std::size_t s = 0; s < spec; ++s)
      stage[c][s] = e2[s] * u0[c][s] + dt * e1[s] * n3[c][s];
  nonlinear_term(stage, n4);

  for (int c = 0; c < d; ++c) {
    auto& uh = fluid_->uhat(c);
    for (std::size_t s = 0; s < spec; ++s) {
      uh[s] = e2[s] * u0[c][s] +
              (dt / 6.0) * (e2[s] * n1[c][s] + 2.0 * e1[s] * (n2[c][s] + n3[c][s]) + n4[c][s]);
    }
  }
  fluid_->dealias();
  fluid_->project_divfree();
}

double VnsSim::max_real_speed(const std::vector<std::vector<double>>& u_real) const {
  double m = 0.0;
  for (std::size_t s = 0; s < fluid_->grid_size(); ++s) {
    double v2 = 0.0;
    for (int c = 0; c < cfg_.dim; ++c) v2 += u_real[c][s] * u_real[c][s];
    m = std::max(m, v2);
  }
  return std::sqrt(m);
}

void VnsSim::check_finite() {
  for (int c = 0; c < cfg_.dim; ++c)
    for (const auto& z : fluid_->uhat(c))
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        if (!cfg_.out_dir.empty()) write_snapshot(cfg_.out_dir + "/crash_dump.bin");
        throw Error("vns: non-finite fluid state at step " + std::to_string(fluid_->step_index));
      }
  for (double vi : cloud_.v)
    if (!std::isfinite(vi)) {
      if (!cfg_.out_dir.empty()) write_snapshot(cfg_.out_dir + "/crash_dump.bin");
      throw Error("vns: non-finite particle state at step " + std::to_string(fluid_->step_index));
    }
}

CouplingDiagnostics VnsSim::step() {
  const double dt = cfg_.dt;
  const int d = cfg_.dim;
  CouplingDiagnostics diag;

  // CFL guard on both phases.
  {
    std::vector<std::vector<double>> ur(d);
    for (int c = 0; c < d; ++c) fluid_->to_real(*fft_, c, ur[c]);
    double vmax = max_real_speed(ur);
    for (std::size_t i = 0; i < cloud_.count(); ++i) {
      double v2 = 0.0;
      for (int c = 0; c < d; ++c) v2 += cloud_.v[i * d + c] * cloud_.v[i * d + c];
      vmax = std::max(vmax, std::sqrt(v2));
    }
    const double h = kBox / cfg_.grid_n;
    AK_REQUIRE(dt * vmax <= cfg_.cfl_limit * h + 1e-12,
               "vns: CFL violation, reduce dt (dt*vmax=" + std::to_string(dt * vmax) +
                   ", limit=" + std::to_string(cfg_.cfl_limit * h) + ")");
  }

  // Half drift.
  for (std::size_t i = 0; i < cloud_.count(); ++i)
    for (int c = 0; c < d; ++c) cloud_.x[i * d + c] += 0.5 * dt * cloud_.v[i * d + c];
  cloud_.wrap();

  exchange_substep(dt, diag);

  if (!cfg_.freeze_fluid) fluid_rk4_step(dt);

  for (std::size_t i = 0; i < cloud_.count(); ++i)
    for (int c = 0; c < d; ++c) cloud_.x[i * d + c] += 0.5 * dt * cloud_.v[i * d + c];
  cloud_.wrap();

  fluid_->time += dt;
  fluid_->step_index += 1;
  check_finite();

  diag.step = fluid_->step_index;
  diag.time = fluid_->time;
  diag.fluid_momentum = fluid_->momentum();
  diag.particle_momentum = cloud_.momentum();
  diag.total_momentum = diag.fluid_momentum + diag.particle_momentum;
  diag.fluid_energy = fluid_->kinetic_energy();
  diag.particle_energy = cloud_.kinetic_energy();
  diag.total_energy = diag.fluid_energy + diag.particle_energy;
  diag.div_max = fluid_->max_divergence();
  if (cfg_.check_energy && !cfg_.freeze_fluid) {
    diag.energy_ok =
        diag.total_energy <= prev_energy_ * (1.0 + cfg_.energy_tol_rel) + 1e-14;
  }
  prev_energy_ = diag.total_energy;
  return diag;
}

double VnsSim::pressure_poisson_residual(std::vector<double>* pressure_out) const {
  const int d = cfg_.dim;
  const std::size_t spec = fluid_->spec_size();
  const auto& kv = fluid_->kvec();
  const auto& mask = fluid_->dealias_mask();

  // Gradient products: S1 = sum_ij d_i u_j d_j u_i.
  std::vector<std::vector<double>> gradr(std::size_t(d) * d);
  std::vector<std::complex<double>> tmp(spec);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      for (std::size_t s = 0; s < spec; ++s)
        tmp[s] = std::complex<double>{0.0, kv[s][i]} * fluid_->uhat(j)[s];
      fft_->backward(tmp, gradr[std::size_t(i) * d + j]);
    }
  std::vector<double> s1(fluid_->grid_size(), 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const auto& gij = gradr[std::size_t(i) * d + j];
      const auto& gji = gradr[std::size_t(j) * d + i];
      for (std::size_t s = 0; s < s1.size(); ++s) s1[s] += gij[s] * gji[s];
    }
  std::vector<std::complex<double>> s1_hat;
  fft_->forward(s1, s1_hat);

  // Brinkman divergence.
  std::vector<std::complex<double>> divb(spec, {0.0, 0.0});
  std::vector<std::vector<std::complex<double>>> bhat(d);
  if (cloud_.count() > 0 && cfg_.kappa > 0.0) {
    auto force = deposit_brinkman();
    for (int c = 0; c < d; ++c) {
      fft_->forward(force[c], bhat[c]);
      for (std::size_t s = 0; s < spec; ++s)
        divb[s] += std::complex<double>{0.0, kv[s][c]} * bhat[c][s];
    }
  } else {
    for (int c = 0; c < d; ++c) bhat[c].assign(spec, {0.0, 0.0});
  }

  // -lap p = S1 - div B.
  std::vector<std::complex<double>> phat(spec, {0.0, 0.0});
  for (std::size_t s = 1; s < spec; ++s) {
    const double k2 = kv[s][0] * kv[s][0] + kv[s][1] * kv[s][1] + kv[s][2] * kv[s][2];
    if (k2 == 0.0) continue;
    phat[s] = (s1_hat[s] * mask[s] - divb[s] * mask[s]) / k2;
  }
  if (pressure_out) fft_->backward(phat, *pressure_out);

  // Divergence of the momentum balance with this pressure; the raw
  // (unprojected) convection term is rebuilt so p absorbs its longitudinal
  // part.
  double resid = 0.0;
  {
    std::vector<std::vector<double>> ur(d);
    for (int c = 0; c < d; ++c) fluid_->to_real(*fft_, c, ur[c]);
    std::vector<double> prod(fluid_->grid_size());
    std::vector<std::complex<double>> prod_hat;
    std::vector<std::vector<std::complex<double>>> raw(d);
    for (int c = 0; c < d; ++c) raw[c].assign(spec, {0.0, 0.0});
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b) {
        for (std::size_t s = 0; s < prod.size(); ++s) prod[s] = ur[a][s] * ur[b][s];
        fft_->forward(prod, prod_hat);
        for (std::size_t s = 0; s < spec; ++s) {
          const std::complex<double> v = prod_hat[s] * mask[s];
          raw[b][s] += std::complex<double>{0.0, kv[s][a]} * v;
          if (a != b) raw[a][s] += std::complex<double>{0.0, kv[s][b]} * v;
        }
      }
    const double scale = 1.0 / double(fluid_->grid_size());
    for (std::size_t s = 0; s < spec; ++s) {
      const double k2 = kv[s][0] * kv[s][0] + kv[s][1] * kv[s][1] + kv[s][2] * kv[s][2];
      std::complex<double> div_rhs{0.0, 0.0};
      for (int c = 0; c < d; ++c) {
        const std::complex<double> rhs_c =
            -raw[c][s] - std::complex<double>{0.0, kv[s][c]} * phat[s] -
            cfg_.nu * k2 * fluid_->uhat(c)[s] + bhat[c][s] * mask[s];
        div_rhs += std::complex<double>{0.0, kv[s][c]} * rhs_c;
      }
      resid = std::max(resid, std::abs(div_rhs) * scale);
    }
  }
  return resid;
}

void VnsSim::fluid_component_real(int c, std::vector<double>& out) const {
  fluid_->to_real(*fft_, c, out);
}

std::vector<CouplingDiagnostics> VnsSim::run(int steps) {
  const int nsteps = steps < 0 ? cfg_.steps : steps;
  std::vector<CouplingDiagnostics> rows;
  rows.reserve(nsteps);
  for (int s = 0; s < nsteps; ++s) {
    CouplingDiagnostics d = step();
    if (cfg_.snapshot_every > 0 && fluid_->step_index % std::uint64_t(cfg_.snapshot_every) == 0 &&
        !cfg_.out_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof(name), "/snap_%08llu.bin",
                    static_cast<unsigned long long>(fluid_->step_index));
      write_snapshot(cfg_.out_dir + name);
      d.pressure_residual = pressure_poisson_residual();
    }
    rows.push_back(d);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Snapshot IO: little-endian 64-bit reals; header below.
// ---------------------------------------------------------------------------

namespace {
struct SnapshotHeader {
  char magic[4];  // "VNS1"
  std::uint32_t dim = 0;
  std::uint64_t grid_n = 0;
  std::uint64_t particle_count = 0;
  double time = 0.0;
  std::uint64_t step = 0;
  double nu = 0.0;
  double kappa = 0.0;
  std::uint64_t config_hash = 0;
};
}  // namespace

void VnsSim::write_snapshot(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  AK_REQUIRE(out.good(), "cannot open snapshot for writing: " + path);
  SnapshotHeader h;
  h.magic[0] = 'V';
  h.magic[1] = 'N';
  h.magic[2] = 'S';
  h.magic[3] = '1';
  h.dim = cfg_.dim;
  h.grid_n = cfg_.grid_n;
  h.particle_count = cloud_.count();
  h.time = fluid_->time;
  h.step = fluid_->step_index;
  h.nu = cfg_.nu;
  h.kappa = cfg_.kappa;
  h.config_hash = cfg_.config_hash;
  out.write(reinterpret_cast<const char*>(&h), sizeof(h));
  // The state of record is spectral; storing the coefficients keeps restart
  // exact. Layout: per component, r2c half-spectrum as interleaved (re, im).
  for (int c = 0; c < cfg_.dim; ++c) {
    const auto& uh = fluid_->uhat(c);
    out.write(reinterpret_cast<const char*>(uh.data()),
              uh.size() * sizeof(std::complex<double>));
  }
  out.write(reinterpret_cast<const char*>(cloud_.x.data()), cloud_.x.size() * sizeof(double));
  out.write(reinterpret_cast<const char*>(cloud_.v.data()), cloud_.v.size() * sizeof(double));
  out.write(reinterpret_cast<const char*>(cloud_.weight.data()),
            cloud_.weight.size() * sizeof(double));
}

void VnsSim::load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  AK_REQUIRE(in.good(), "cannot open snapshot: " + path);
  SnapshotHeader h;
  in.read(reinterpret_cast<char*>(&h), sizeof(h));
  AK_REQUIRE(in.good() && h.magic[0] == 'V' && h.magic[1] == 'N' && h.magic[2] == 'S' &&
                 h.magic[3] == '1',
             "bad snapshot magic: " + path);
  AK_REQUIRE(int(h.dim) == cfg_.dim && int(h.grid_n) == cfg_.grid_n,
             "snapshot grid does not match configuration");
  for (int c = 0; c < cfg_.dim; ++c) {
    auto& uh = fluid_->uhat(c);
    in.read(reinterpret_cast<char*>(uh.data()), uh.size() * sizeof(std::complex<double>));
  }
  cloud_.dim = cfg_.dim;
  cloud_.x.resize(h.particle_count * h.dim);
  cloud_.v.resize(h.particle_count * h.dim);
  cloud_.weight.resize(h.particle_count);
  in.read(reinterpret_cast<char*>(cloud_.x.data()), cloud_.x.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(cloud_.v.data()), cloud_.v.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(cloud_.weight.data()), cloud_.weight.size() * sizeof(double));
  AK_REQUIRE(in.good(), "truncated snapshot: " + path);
  fluid_->time = h.time;
  fluid_->step_index = h.step;
  prev_energy_ = fluid_->kinetic_energy() + cloud_.kinetic_energy();
}

std::vector<CouplingDiagnostics> run_simulation(const VnsConfig& cfg,
                                                const std::string& diagnostics_csv) {
  VnsSim sim(cfg);
  auto rows = sim.run();
  if (!cfg.out_dir.empty()) sim.write_snapshot(cfg.out_dir + "/final.bin");
  if (!diagnostics_csv.empty()) write_diagnostics_csv(diagnostics_csv, rows, cfg);
  return rows;
}

void write_diagnostics_csv(const std::string& path, const std::vector<CouplingDiagnostics>& rows,
                           const VnsConfig& cfg) {
  std::ofstream out(path);
  AK_REQUIRE(out.good(), "cannot open diagnostics csv: " + path);
  out << "# tool_version=" << kToolVersion << " config_hash=" << cfg.config_hash
      << " seed=" << cfg.seed << "\n";
  out << "step,time,fluid_px,fluid_py,fluid_pz,part_px,part_py,part_pz,total_px,total_py,"
         "total_pz,fluid_ke,part_ke,total_e,brinkman_norm,div_max,energy_ok\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.step << ',' << r.time << ',' << r.fluid_momentum.x << ',' << r.fluid_momentum.y
        << ',' << r.fluid_momentum.z << ',' << r.particle_momentum.x << ','
        << r.particle_momentum.y << ',' << r.particle_momentum.z << ',' << r.total_momentum.x
        << ',' << r.total_momentum.y << ',' << r.total_momentum.z << ',' << r.fluid_energy << ','
        << r.particle_energy << ',' << r.total_energy << ',' << r.brinkman_norm << ','
        << r.div_max << ',' << (r.energy_ok ? 1 : 0) << "\n";
  }
}

}  // namespace aerokin::vns
