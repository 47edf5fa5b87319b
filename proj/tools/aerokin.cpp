#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "aerokin/acceptance.hpp"
#include "aerokin/kernels.hpp"
#include "aerokin/limits.hpp"
#include "aerokin/moments.hpp"
#include "aerokin/report.hpp"
#include "aerokin/transport.hpp"
#include "aerokin/vns.hpp"

namespace {

using namespace aerokin;

struct GlobalOpts {
  std::uint64_t seed = 20250810;
  int workers = 0;
  bool show_config = false;
};

std::uint64_t hash_config(const std::string& subcommand, const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ostringstream os;
  os << subcommand << "\n";
  for (const auto& [k, v] : kv) os << k << "=" << v << "\n";
  return fnv1a_hash(os.str());
}

void log_provenance(const CLI::App& sub, bool show) {
  if (!show) return;
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_name().empty() || opt->count() == 0) continue;
    std::cout << "# option " << opt->get_name() << " = " << opt->results()[0] << "\n";
  }
}

int cmd_verify_kernels(const GlobalOpts& g, const std::string& kernel_name, double eps, double eta,
                       double beta, std::uint64_t samples, const std::string& out) {
  KernelModel kernel = KernelModel::by_name(kernel_name);
  ScalingParams p{eps, eta, beta};
  CheckOptions copts;
  copts.n_samples = samples;
  copts.seed = g.seed;
  copts.workers = g.workers;
  auto reports = verify_kernel_suite(kernel, p, copts);
  const std::uint64_t h = hash_config("verify-kernels", {{"kernel", kernel_name},
                                                         {"epsilon", std::to_string(eps)},
                                                         {"eta", std::to_string(eta)},
                                                         {"beta", std::to_string(beta)},
                                                         {"samples", std::to_string(samples)},
                                                         {"seed", std::to_string(g.seed)}});
  if (!out.empty()) write_reports_json(out, reports, g.seed, h);
  int failures = 0;
  for (const auto& r : reports) {
    std::cout << (r.passed() ? "pass " : "FAIL ") << r.check;
    if (!r.estimate.empty() && !r.closed_form.empty())
      std::cout << "  estimate " << r.estimate[0] << "  target " << r.closed_form[0];
    std::cout << "\n";
    if (!r.passed()) ++failures;
  }
  std::cout << (failures ? "verify-kernels: FAILURES " + std::to_string(failures)
                         : "verify-kernels: all checks passed")
            << "\n";
  return failures == 0 ? 0 : 1;
}

int cmd_coeffs(const GlobalOpts& g, const std::string& molecular, const std::string& q_preset,
               int degree, const std::string& out) {
  LinearizedOperator::Options lop;
  lop.workers = g.workers;
  MolecularKernel mk = MolecularKernel::by_name(molecular);
  if (!mk.is_maxwell()) {
    std::cout << "# warning: only the maxwell preset guarantees a bounded radial profile; "
                 "results for other kernels are reported without that guarantee\n";
  }
  LinearizedOperator op(mk, lop);
  ATildeOptions aopts;
  aopts.degree = degree;
  ATildeSolution sol = solve_A_tilde(op, aopts);
  SectorBlock block = op.assemble_sector(2, LinearizedOperator::sector_count(degree, 2));
  NuResult nu = compute_nu(sol, block);
  QProfile q = QProfile::parse(q_preset);
  const double kappa = compute_kappa(q.Q);

  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["seed"] = g.seed;
  j["config_hash"] = hash_config("coeffs", {{"molecular", molecular},
                                            {"Q", q_preset},
                                            {"degree", std::to_string(degree)}});
  j["molecular_kernel"] = molecular;
  j["nu"] = nu.nu;
  j["nu_cross"] = nu.nu_cross;
  j["kappa"] = kappa;
  j["kappa_preset"] = q.name;
  j["alpha_profile"] = {{"r", sol.radial_grid}, {"alpha", sol.alpha}};
  j["alpha_spread"] = sol.alpha_spread;
  j["residuals"] = {{"l2", sol.residual},
                    {"galerkin", sol.galerkin_residual},
                    {"iterations", sol.iterations}};
  if (!mk.is_maxwell()) {
    // Observed tail behaviour of the radial profile, reported without any
    // claim attached.
    const std::size_t m = sol.alpha.size();
    j["alpha_tail_log_slope"] =
        std::log(std::abs(sol.alpha[m - 1] / sol.alpha[m - 8])) /
        std::log(sol.radial_grid[m - 1] / sol.radial_grid[m - 8]);
    j["alpha_bounded_guarantee"] = false;
  } else {
    j["alpha_bounded_guarantee"] = true;
  }
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f.good()) {
      std::cerr << "cannot open " << out << "\n";
      return 1;
    }
    f << j.dump(2) << "\n";
  }
  std::cout << "nu = " << nu.nu << "  kappa(" << q.name << ") = " << kappa
            << "  residual = " << sol.residual << "\n";
  return 0;
}

int cmd_limit_sweep(const GlobalOpts& g, const std::string& prop, const std::string& kernel_name,
                    const std::string& state_name, const std::string& schedule_spec, double beta,
                    const std::string& out) {
  KernelModel kernel = KernelModel::by_name(kernel_name);
  Schedule schedule = Schedule::default_schedule();
  if (!schedule_spec.empty()) {
    std::vector<double> eps;
    std::stringstream ss(schedule_spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) eps.push_back(std::stod(tok));
    schedule = Schedule::cubic(eps);
  }
  SweepOptions sopts;
  sopts.beta = beta;

  SweepResult sweep;
  if (prop == "drag") {
    sweep = drag_limit_sweep(PrescribedState::by_name(state_name), kernel, schedule, sopts);
  } else if (prop == "friction") {
    sweep = friction_limit_sweep(PrescribedState::by_name(state_name), kernel, schedule, sopts);
  } else if (prop == "flux") {
    LinearizedOperator::Options lop;
    lop.workers = g.workers;
    LinearizedOperator op(MolecularKernel::maxwell(), lop);
    ATildeSolution sol = solve_A_tilde(op);
    sweep = friction_flux_sweep(PrescribedState::by_name(state_name), kernel, schedule,
                                sol.alpha_fn(1.0), sopts);
  } else {
    std::cerr << "unknown prop: " << prop << " (expected drag|friction|flux)\n";
    return 1;
  }
  const std::uint64_t h = hash_config("limit-sweep", {{"prop", prop},
                                                      {"kernel", kernel_name},
                                                      {"state", state_name},
                                                      {"schedule", schedule_spec},
                                                      {"beta", std::to_string(beta)}});
  if (!out.empty()) write_sweep_csv(out, sweep, h);
  std::cout << "prop=" << prop << " fitted_order=" << sweep.fitted_order
            << " first_error=" << sweep.rows.front().error
            << " last_error=" << sweep.rows[sweep.rows.size() - (prop == "flux" ? 2 : 1)].error
            << "\n";
  return 0;
}

struct VnsCliOpts {
  vns::VnsConfig cfg;
  std::string coeffs_file;
  std::string restart;
  std::string diagnostics = "diagnostics.csv";
};

int cmd_simulate_vns(const GlobalOpts& g, VnsCliOpts o) {
  o.cfg.seed = g.seed;
  if (!o.coeffs_file.empty()) {
    std::ifstream in(o.coeffs_file);
    if (!in.good()) {
      std::cerr << "cannot open coeffs file: " << o.coeffs_file << "\n";
      return 1;
    }
    nlohmann::json j;
    in >> j;
    o.cfg.nu = j.value("nu", o.cfg.nu);
    o.cfg.kappa = j.value("kappa", o.cfg.kappa);
    std::cout << "# coefficients from " << o.coeffs_file << ": nu=" << o.cfg.nu
              << " kappa=" << o.cfg.kappa << "\n";
  }
  o.cfg.config_hash = hash_config(
      "simulate-vns", {{"grid_n", std::to_string(o.cfg.grid_n)},
                       {"dim", std::to_string(o.cfg.dim)},
                       {"nu", std::to_string(o.cfg.nu)},
                       {"kappa", std::to_string(o.cfg.kappa)},
                       {"dt", std::to_string(o.cfg.dt)},
                       {"steps", std::to_string(o.cfg.steps)},
                       {"particles", std::to_string(o.cfg.particle_count)},
                       {"seed", std::to_string(g.seed)}});
  if (!o.cfg.out_dir.empty()) std::filesystem::create_directories(o.cfg.out_dir);
  vns::VnsSim sim(o.cfg);
  if (!o.restart.empty()) sim.load_snapshot(o.restart);
  auto rows = sim.run();
  if (!o.cfg.out_dir.empty()) {
    sim.write_snapshot(o.cfg.out_dir + "/final.bin");
    vns::write_diagnostics_csv(o.cfg.out_dir + "/" + o.diagnostics, rows, o.cfg);
  }
  const auto& last = rows.back();
  std::cout << "steps=" << rows.size() << " t=" << last.time << " div_max=" << last.div_max
            << " total_momentum=(" << last.total_momentum.x << "," << last.total_momentum.y
            << "," << last.total_momentum.z << ") energy=" << last.total_energy << "\n";
  return 0;
}

int cmd_all(const GlobalOpts& g, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  int failures = 0;

  // Kernel verification suites with their JSON reports.
  for (const char* name : {"charles_inelastic", "hard_sphere_pg"}) {
    KernelModel kernel = KernelModel::by_name(name);
    ScalingParams p{0.1, 0.01, 1.0};
    CheckOptions copts;
    copts.n_samples = 200000;
    copts.seed = g.seed;
    copts.workers = g.workers;
    auto reports = verify_kernel_suite(kernel, p, copts, 10);
    write_reports_json(out_dir + "/verify_" + std::string(name) + ".json", reports, g.seed,
                       hash_config("verify-kernels", {{"kernel", name}}));
    int bad = 0;
    for (const auto& r : reports)
      if (!r.passed()) ++bad;
    std::cout << (bad ? "FAIL " : "pass ") << "verify-kernels " << name << " (" << reports.size()
              << " checks)\n";
    failures += bad ? 1 : 0;
  }

  AcceptanceOptions opts;
  opts.seed = g.seed;
  opts.workers = g.workers;
  opts.scratch_dir = out_dir;
  opts.artifact_dir = out_dir;
  failures += run_acceptance(opts, std::cout);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aerokin: two-species collision kernels, transport coefficients, hydrodynamic "
               "limit sweeps and the limiting particle-fluid solver"};
  app.set_config("--config", "", "INI/TOML-style configuration file");
  app.allow_config_extras(false);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "base RNG seed recorded in all artifacts");
  app.add_option("--threads", g.workers, "worker cap (or env AEROKIN_THREADS)");
  app.add_flag("--show-config", g.show_config, "print resolved options");

  // verify-kernels
  auto* vk = app.add_subcommand("verify-kernels", "statistical checks of the scattering models");
  std::string vk_kernel = "charles_inelastic";
  double vk_eps = 0.1, vk_eta = 0.01, vk_beta = 1.0;
  std::uint64_t vk_samples = 1000000;
  std::string vk_out = "report.json";
  vk->add_option("--kernel", vk_kernel, "hard_sphere_pg | charles_inelastic | tabulated:<csv>");
  vk->add_option("--epsilon", vk_eps, "thermal speed ratio");
  vk->add_option("--eta", vk_eta, "mass ratio");
  vk->add_option("--beta", vk_beta, "surface-temperature parameter");
  vk->add_option("--samples", vk_samples, "Monte-Carlo samples per check");
  vk->add_option("--out", vk_out, "JSON report path");

  // coeffs
  auto* co = app.add_subcommand("coeffs", "transport coefficients nu and kappa");
  std::string co_mol = "maxwell", co_q = "charles:1.0", co_out = "coeffs.json";
  int co_degree = 12;
  co->add_option("--molecular-kernel", co_mol, "maxwell | hard_sphere_gg");
  co->add_option("--Q-preset", co_q, "constant:<c0> | hardsphere | hard_sphere_pg | charles:<beta>");
  co->add_option("--degree", co_degree, "total polynomial degree of the Galerkin space");
  co->add_option("--out", co_out, "JSON output path");

  // limit-sweep
  auto* ls = app.add_subcommand("limit-sweep", "quantitative limit sweeps over (epsilon, eta)");
  std::string ls_prop = "drag", ls_kernel = "charles_inelastic", ls_state = "drag_default";
  std::string ls_schedule, ls_out = "sweep.csv";
  double ls_beta = 1.0;
  ls->add_option("--prop", ls_prop, "drag | friction | flux");
  ls->add_option("--kernel", ls_kernel, "scattering model preset");
  ls->add_option("--state-preset", ls_state, "drag_default | drag_v1 | friction_default | flux_default");
  ls->add_option("--schedule", ls_schedule, "comma-separated epsilon list (eta = epsilon^3)");
  ls->add_option("--beta", ls_beta, "surface-temperature parameter");
  ls->add_option("--out", ls_out, "CSV output path");

  // simulate-vns
  auto* sv = app.add_subcommand("simulate-vns", "particle-fluid solver on the periodic box");
  VnsCliOpts vo;
  sv->add_option("--grid-n,--grid_n", vo.cfg.grid_n, "grid points per dimension");
  sv->add_option("--dim", vo.cfg.dim, "2 or 3");
  sv->add_option("--nu", vo.cfg.nu, "kinematic viscosity");
  sv->add_option("--kappa", vo.cfg.kappa, "drag coefficient");
  sv->add_option("--dt", vo.cfg.dt, "time step");
  sv->add_option("--steps", vo.cfg.steps, "number of steps");
  sv->add_option("--snapshot-every,--snapshot_every", vo.cfg.snapshot_every, "snapshot cadence");
  sv->add_option("--particles-count,--particles.count", vo.cfg.particle_count, "particle count");
  sv->add_option("--particles-init-preset,--particles.init_preset", vo.cfg.particle_preset,
                 "gaussian | rest | single");
  sv->add_option("--particles-seed,--particles.seed", vo.cfg.seed, "particle init seed");
  sv->add_option("--fluid-preset", vo.cfg.fluid_preset, "taylor_green | zero | uniform | random");
  sv->add_option("--fluid-amplitude", vo.cfg.fluid_amplitude, "initial field amplitude");
  sv->add_flag("--freeze-fluid", vo.cfg.freeze_fluid, "keep the fluid fixed (drag tests)");
  sv->add_option("--coeffs-file", vo.coeffs_file, "take nu and kappa from coeffs.json");
  sv->add_option("--restart", vo.restart, "restart from a snapshot");
  sv->add_option("--out-dir", vo.cfg.out_dir, "output directory");

  // all
  auto* al = app.add_subcommand("all", "full verification pipeline");
  std::string all_out = "aerokin_out";
  al->add_option("--out-dir", all_out, "artifact directory");

  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*vk) {
      log_provenance(*vk, g.show_config);
      return cmd_verify_kernels(g, vk_kernel, vk_eps, vk_eta, vk_beta, vk_samples, vk_out);
    }
    if (*co) {
      log_provenance(*co, g.show_config);
      return cmd_coeffs(g, co_mol, co_q, co_degree, co_out);
    }
    if (*ls) {
      log_provenance(*ls, g.show_config);
      return cmd_limit_sweep(g, ls_prop, ls_kernel, ls_state, ls_schedule, ls_beta, ls_out);
    }
    if (*sv) {
      log_provenance(*sv, g.show_config);
      return cmd_simulate_vns(g, vo);
    }
    if (*al) {
      return cmd_all(g, all_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
