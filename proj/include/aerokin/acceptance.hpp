#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace aerokin {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  std::string detail;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20250810;
  int workers = 0;
  std::string scratch_dir = ".";   // for solver artifacts
  std::string artifact_dir;        // when set, criteria write reports/CSVs here
  std::string cli_path;            // when set, criterion 10 spawns `<cli> all`
};

/// Run the verification battery, printing one pass/fail line per criterion.
/// Returns the number of failed criteria.
int run_acceptance(const AcceptanceOptions& opts, std::ostream& os);

}  // namespace aerokin
