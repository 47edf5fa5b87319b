#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "aerokin/kernels.hpp"
#include "aerokin/report.hpp"

using namespace aerokin;

namespace {

std::string cli_path() {
  const char* p = std::getenv("AEROKIN_CLI");
  return p ? std::string(p) : std::string();
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  const std::string out_file = "cli_test_output.txt";
  const int rc = std::system((cli_path() + " " + args + " > " + out_file + " 2>&1").c_str());
  if (output) {
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  return rc;
}

}  // namespace

TEST_CASE("config hash is stable and content-sensitive") {
  CHECK(fnv1a_hash("abc") == fnv1a_hash("abc"));
  CHECK(fnv1a_hash("abc") != fnv1a_hash("abd"));
}

TEST_CASE("unknown presets carry the offending name") {
  try {
    KernelModel::by_name("charles_elastic");
    CHECK(false);
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("charles_elastic") != std::string::npos);
  }
}

TEST_CASE("cli: defaults parse and dispatch") {
  if (cli_path().empty()) return;  // library-only environment
  std::string out;
  const int rc = run_cli("verify-kernels --samples 20000 --seed 4242 --out cli_report.json", &out);
  CHECK(rc == 0);
  CHECK(out.find("all checks passed") != std::string::npos);
  std::ifstream in("cli_report.json");
  CHECK(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str().find("\"seed\": 4242") != std::string::npos);
  CHECK(ss.str().find("config_hash") != std::string::npos);
}

TEST_CASE("cli: unknown config keys are rejected by name") {
  if (cli_path().empty()) return;
  {
    std::ofstream f("cli_bad.ini");
    f << "epsilonn=0.2\n";
  }
  std::string out;
  const int rc = run_cli("--config cli_bad.ini verify-kernels --samples 1000", &out);
  CHECK(rc != 0);
  CHECK(out.find("epsilonn") != std::string::npos);
}

TEST_CASE("cli: flags override config-file values") {
  if (cli_path().empty()) return;
  {
    std::ofstream f("cli_sweep.ini");
    f << "[limit-sweep]\n";
    f << "prop=drag\n";
    f << "schedule=0.4,0.2\n";
  }
  std::string out;
  const int rc = run_cli(
      "--config cli_sweep.ini limit-sweep --schedule 0.3,0.15 --state-preset drag_v1 "
      "--out cli_sweep.csv",
      &out);
  CHECK(rc == 0);
  std::ifstream in("cli_sweep.csv");
  std::string line, all;
  bool saw_03 = false, saw_04 = false;
  while (std::getline(in, line)) {
    all += line + "\n";
    if (line.rfind("0.3", 0) == 0) saw_03 = true;
    if (line.rfind("0.4", 0) == 0) saw_04 = true;
  }
  CHECK(saw_03);        // the flag value won
  CHECK_FALSE(saw_04);  // the file value was overridden
  CHECK(all.find("fitted_order") != std::string::npos);
}

TEST_CASE("cli: coeffs emits the coefficient file") {
  if (cli_path().empty()) return;
  std::string out;
  const int rc = run_cli("coeffs --Q-preset charles:1.0 --degree 6 --out cli_coeffs.json", &out);
  CHECK(rc == 0);
  std::ifstream in("cli_coeffs.json");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str().find("\"kappa\": 2.9632") != std::string::npos);
  CHECK(ss.str().find("alpha_profile") != std::string::npos);
}
