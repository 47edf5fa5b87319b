#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "aerokin/common.hpp"
#include "aerokin/vec3.hpp"

namespace aerokin::vns {

/// Periodic box [0, 2pi)^dim, dim = 2 or 3, pseudo-spectral velocity field
/// with 2/3-rule dealiasing. Wavenumbers are integers.
struct VnsConfig {
  int grid_n = 64;
  int dim = 2;
  double nu = 0.02;
  double kappa = 1.0;
  double dt = 0.005;
  int steps = 200;
  int snapshot_every = 0;
  double cfl_limit = 0.4;
  bool freeze_fluid = false;
  bool check_energy = true;
  double energy_tol_rel = 1e-9;

  int particle_count = 0;
  std::string particle_preset = "gaussian";  // gaussian | rest | single
  double particle_vth = 0.5;
  Vec3 particle_v0{1.0, 0.0, 0.0};
  double particle_weight_total = 1.0;
  std::uint64_t seed = 1;

  std::string fluid_preset = "taylor_green";  // taylor_green | zero | random
  double fluid_amplitude = 1.0;

  std::string out_dir;
  std::uint64_t config_hash = 0;

  void validate() const;
};

class Fft;  // fftw wrapper, hidden

/// Divergence-free velocity field in spectral representation.
class FluidState {
 public:
  FluidState(int dim, int n);

  int dim() const { return dim_; }
  int n() const { return n_; }
  std::size_t grid_size() const { return grid_size_; }
  std::size_t spec_size() const { return spec_size_; }

  std::vector<std::complex<double>>& uhat(int c) { return uhat_[c]; }
  const std::vector<std::complex<double>>& uhat(int c) const { return uhat_[c]; }
  const std::vector<std::array<double, 3>>& kvec() const { return kvec_; }
  const std::vector<double>& dealias_mask() const { return mask_; }

  double time = 0.0;
  std::uint64_t step_index = 0;

  /// Leray projection: remove the longitudinal part of every mode; the mean
  /// mode is untouched.
  void project_divfree();
  /// Zero all modes outside the 2/3 ball.
  void dealias();
  /// max_k |k . uhat_k| (normalized spectral divergence).
  double max_divergence() const;

  void to_real(const Fft& fft, int c, std::vector<double>& out) const;
  void from_real(const Fft& fft, int c, const std::vector<double>& in);

  Vec3 momentum() const;        // int u dx
  double kinetic_energy() const;  // (1/2) int |u|^2 dx

  double cell_volume() const;
  double box_volume() const;

 private:
  int dim_ = 2, n_ = 0;
  std::size_t grid_size_ = 0, spec_size_ = 0;
  std::vector<std::vector<std::complex<double>>> uhat_;
  std::vector<std::array<double, 3>> kvec_;
  std::vector<double> mask_;
};

/// Dispersed phase as a weighted particle set; positions wrapped to the box.
struct ParticleCloud {
  int dim = 2;
  std::vector<double> x;       // count * dim
  std::vector<double> v;       // count * dim
  std::vector<double> weight;  // count

  std::size_t count() const { return weight.size(); }
  Vec3 momentum() const;
  double kinetic_energy() const;
  double total_weight() const;
  void wrap();
};

struct CouplingDiagnostics {
  std::uint64_t step = 0;
  double time = 0.0;
  Vec3 fluid_momentum{};
  Vec3 particle_momentum{};
  Vec3 total_momentum{};
  double fluid_energy = 0.0;
  double particle_energy = 0.0;
  double total_energy = 0.0;
  double brinkman_norm = 0.0;
  double div_max = 0.0;
  double pressure_residual = 0.0;
  bool energy_ok = true;
};

class VnsSim {
 public:
  explicit VnsSim(VnsConfig cfg);
  ~VnsSim();

  const VnsConfig& config() const { return cfg_; }
  FluidState& fluid() { return *fluid_; }
  const FluidState& fluid() const { return *fluid_; }
  ParticleCloud& cloud() { return cloud_; }
  const ParticleCloud& cloud() const { return cloud_; }

  /// Drag force density kappa sum_i w_i (v_i - u(x_i)) S(x - x_i) / cell
  /// volume, deposited with the same quadratic B-spline used to evaluate u
  /// at the particles. Returns dim real grid fields.
  std::vector<std::vector<double>> deposit_brinkman() const;

  /// One time step: half drift, exchange substep with the exact exponential
  /// drag update, pseudo-spectral integrating-factor RK4 for the fluid,
  /// half drift.
  CouplingDiagnostics step();

  /// Spectral pressure solve; returns the residual of the divergence of the
  /// momentum balance and optionally the pressure field.
  double pressure_poisson_residual(std::vector<double>* pressure_out = nullptr) const;

  std::vector<CouplingDiagnostics> run(int steps = -1);

  /// Real-space view of one velocity component.
  void fluid_component_real(int c, std::vector<double>& out) const;

  void write_snapshot(const std::string& path) const;
  void load_snapshot(const std::string& path);

 private:
  void init_fields();
  void init_particles();
  void fluid_rk4_step(double dt);
  void exchange_substep(double dt, CouplingDiagnostics& diag);
  void nonlinear_term(const std::vector<std::vector<std::complex<double>>>& in,
                      std::vector<std::vector<std::complex<double>>>& out) const;
  void interp_velocity(const std::vector<std::vector<double>>& u_real, const double* xp,
                       double* u_out) const;
  double max_real_speed(const std::vector<std::vector<double>>& u_real) const;
  void check_finite();

  VnsConfig cfg_;
  std::unique_ptr<Fft> fft_;
  std::unique_ptr<FluidState> fluid_;
  ParticleCloud cloud_;
  double prev_energy_ = -1.0;
};

/// Fixed-step driver with CSV diagnostics and snapshot cadence, reproducible
/// from (config, seed).
std::vector<CouplingDiagnostics> run_simulation(const VnsConfig& cfg,
                                                const std::string& diagnostics_csv = "");

void write_diagnostics_csv(const std::string& path, const std::vector<CouplingDiagnostics>& rows,
                           const VnsConfig& cfg);

}  // namespace aerokin::vns
