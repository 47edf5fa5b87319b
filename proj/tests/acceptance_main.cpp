#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "aerokin/acceptance.hpp"

int main() {
  aerokin::AcceptanceOptions opts;
  opts.scratch_dir = "acceptance_out";
  opts.artifact_dir = "acceptance_out";
  std::filesystem::create_directories(opts.scratch_dir);
  if (const char* cli = std::getenv("AEROKIN_CLI")) opts.cli_path = cli;
  const int failures = aerokin::run_acceptance(opts, std::cout);
  return failures == 0 ? 0 : 1;
}
