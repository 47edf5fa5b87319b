#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aerokin/limits.hpp"
#include "aerokin/moments.hpp"

namespace aerokin {

std::uint64_t fnv1a_hash(const std::string& text);

nlohmann::json report_to_json(const MomentReport& report);

/// JSON report file: metadata (tool version, seed, config hash) plus one
/// entry per check with {check, inputs, estimate, closed_form, stderr,
/// verdict}.
void write_reports_json(const std::string& path, const std::vector<MomentReport>& reports,
                        std::uint64_t seed, std::uint64_t config_hash);

/// Sweep CSV: comment header with provenance, one row per schedule point,
/// fitted order in the footer row.
void write_sweep_csv(const std::string& path, const SweepResult& sweep, std::uint64_t config_hash);

}  // namespace aerokin
