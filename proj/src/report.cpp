#include "aerokin/report.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "aerokin/common.hpp"

namespace aerokin {

using nlohmann::json;

std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

json report_to_json(const MomentReport& r) {
  json j;
  j["check"] = r.check;
  j["inputs"] = {{"kernel", r.kernel},
                 {"epsilon", r.params.epsilon},
                 {"eta", r.params.eta},
                 {"beta", r.params.beta},
                 {"V", {r.V.x, r.V.y, r.V.z}},
                 {"W", {r.W.x, r.W.y, r.W.z}},
                 {"n_samples", r.n_samples}};
  j["estimate"] = r.estimate;
  j["closed_form"] = r.closed_form;
  j["stderr"] = r.stderr_;
  j["verdict"] = r.verdict;
  if (r.one_sided) j["slack"] = r.slack;
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

void write_reports_json(const std::string& path, const std::vector<MomentReport>& reports,
                        std::uint64_t seed, std::uint64_t config_hash) {
  json j;
  j["tool_version"] = kToolVersion;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  json arr = json::array();
  int failures = 0;
  for (const auto& r : reports) {
    arr.push_back(report_to_json(r));
    if (!r.passed()) ++failures;
  }
  j["checks"] = arr;
  j["failures"] = failures;
  std::ofstream out(path);
  AK_REQUIRE(out.good(), "cannot open report file: " + path);
  out << j.dump(2) << "\n";
}

void write_sweep_csv(const std::string& path, const SweepResult& sweep,
                     std::uint64_t config_hash) {
  std::ofstream out(path);
  AK_REQUIRE(out.good(), "cannot open sweep csv: " + path);
  out << "# tool_version=" << kToolVersion << " config_hash=" << config_hash
      << " prop=" << sweep.prop << " kernel=" << sweep.kernel << " state=" << sweep.state << "\n";
  out << "epsilon,eta";
  for (const auto& l : sweep.estimate_labels) out << ',' << l;
  for (const auto& l : sweep.estimate_labels) out << ",limit_" << l;
  out << ",error," << sweep.extra_label << "\n";
  out.precision(17);
  for (const auto& row : sweep.rows) {
    out << row.epsilon << ',' << row.eta;
    for (double v : row.estimate) out << ',' << v;
    for (double v : row.limit) out << ',' << v;
    out << ',' << row.error << ',' << row.extra << "\n";
  }
  out << "# fitted_order," << sweep.fitted_order << ",extra_order," << sweep.extra_order << "\n";
}

}  // namespace aerokin
