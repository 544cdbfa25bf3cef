#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sublp/bernstein.hpp"
#include "sublp/bound_report.hpp"

namespace sublp {

inline constexpr int kReportSchemaVersion = 1;
std::string artifact_version();

/// Caps checked before any work starts.
struct ResourceLimits {
  int max_n = 4096;
  double max_cells = 16777216.0;       // n^d
  double max_space_time = 268435456.0; // n^d * M
  int max_replicas = 1000000;
  double max_samples = 1e8;
};

/// Everything a run depends on.  Replaying the echoed config on the same
/// build reproduces every number in the report.
struct RunConfig {
  std::string command = "all";
  std::string phi_name = "stable";
  ParamMap phi_params;
  int d = 1;
  double L = 6.283185307179586;
  int n = 64;
  int M = 256;
  double T = 1.0;
  int K = 1;
  std::vector<double> p = {2.0, 4.0};
  std::uint64_t seed = 2024;
  int random_fields = 20;
  int kmax = 6;
  int replicas = 1000;
  double samples = 1e6;
  std::vector<std::string> checks;  // empty: the command's default set
  std::string report_path;          // empty: stdout
  std::string csv_path;
  std::string binary_path;
  bool demo = false;
  ResourceLimits limits;

  BernsteinFunction phi() const;
  /// SchemaError on unknown keys or wrong types.
  static RunConfig from_json(const json& j);
  json to_json() const;
  /// SchemaError / ParameterError on bad values, ResourceLimitError on caps.
  void validate() const;
};

struct CheckInfo {
  std::string id;
  std::string module;
  std::string statement;
};

/// Every check id with the module that owns it.
std::vector<CheckInfo> list_checks();

/// Checks a command runs when the config names none.
std::vector<std::string> default_checks(const std::string& command, const RunConfig& config);
const std::vector<std::string>& commands();

/// Runs one check; throws whatever the owning module throws.
BoundReport run_check(const std::string& id, const RunConfig& config);

struct ReportEnvelope {
  json config;
  std::string version;
  std::vector<BoundReport> reports;
  json errors = json::array();  // {id, type, message}
  double wall_seconds = 0.0;
  long peak_rss_kb = 0;
  bool pass() const;
  json to_json() const;
};

/// Validates, runs the selected checks (merged by id order) and writes the
/// side artifacts (CSV demo, binary samples).  Check failures are captured in
/// the envelope; config and resource errors propagate before any output.
ReportEnvelope run(const RunConfig& config);

}  // namespace sublp
