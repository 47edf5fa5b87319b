#pragma once

#include <functional>
#include <string>
#include <vector>

#include "aerokin/kernels.hpp"
#include "aerokin/states.hpp"

namespace aerokin {

/// C^2 velocity test function with bounded first and second derivatives.
struct TestFunction {
  std::string name;
  std::function<double(const Vec3&)> value;
  std::function<Vec3(const Vec3&)> grad;
  std::function<Mat3(const Vec3&)> hess;

  static TestFunction v1();       // phi(v) = v1 (zero curvature)
  static TestFunction cos_v1();   // phi(v) = cos(v1)
  static TestFunction by_name(const std::string& name);
};

/// Velocity-space state at a single space-time point: a Gaussian dispersed
/// phase profile, a hydrodynamic gas fluctuation and a test function.
struct PrescribedState {
  std::string name = "custom";
  Vec3 v0{};
  double spread = 1.0;
  HermitePerturbation g{};
  TestFunction phi = TestFunction::v1();

  static PrescribedState by_name(const std::string& name);
};

struct SweepRow {
  double epsilon = 0.0;
  double eta = 0.0;
  std::vector<double> estimate;
  std::vector<double> limit;
  double error = 0.0;
  double extra = 0.0;  // prop-specific diagnostic (|J|, identity gap, trace)
};

struct SweepResult {
  std::string prop;
  std::string kernel;
  std::string state;
  std::vector<std::string> estimate_labels;
  std::string extra_label;
  std::vector<SweepRow> rows;
  double fitted_order = 0.0;
  double extra_order = 0.0;  // decay order of the extra column where meaningful

  const SweepRow& front() const { return rows.front(); }
  const SweepRow& back() const { return rows.back(); }
};

struct SweepOptions {
  int outer_gh = 10;
  int inner_radial = 40;
  int inner_sphere_degree = 22;
  double inner_rmax = 10.0;
  double beta = 1.0;  // surface-temperature parameter for the inelastic model
};

/// Weak drag functional (1/eta) int D(F, M(1+eps g)) phi dv per schedule
/// point, decomposed into the first-moment term and the second-order
/// deflection remainder; converges to -kappa int F grad(phi).(v-u) dv.
SweepResult drag_limit_sweep(const PrescribedState& state, const KernelModel& kernel,
                             const Schedule& schedule, const SweepOptions& opts = {});

/// Momentum flux (1/eps) int w R(f, F) dw per schedule point; checks the
/// pointwise equality with -(1/eta) int v D(F, f) dv and convergence to
/// kappa int (v - u) F dv.
SweepResult friction_limit_sweep(const PrescribedState& state, const KernelModel& kernel,
                                 const Schedule& schedule, const SweepOptions& opts = {});

/// Tensor-weighted molecule flux int Atilde R(f, F) dw with Atilde =
/// alpha A; must vanish in the limit. The final row holds the closed
/// eps = eta = 0 evaluation.
SweepResult friction_flux_sweep(const PrescribedState& state, const KernelModel& kernel,
                                const Schedule& schedule, double alpha,
                                const SweepOptions& opts = {});

/// First moment <w g> of the gas fluctuation; equals u.
Vec3 incompressibility_identity(const HermitePerturbation& g);

/// Least-squares slope of log(err) against log(eps) over the last
/// `tail` rows with nonzero error.
double fitted_order(const std::vector<double>& eps, const std::vector<double>& err, int tail = 4);

}  // namespace aerokin
