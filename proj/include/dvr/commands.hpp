#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dvr {

/// Process exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 1,
  kExitEstimability = 2,
  kExitNumerical = 3,
};

struct RunConfig {
  std::string topology_path;
  std::string data_path;
  std::string references_path;
  std::string window = "24h";
  std::string window_offset = "0s";
  std::string cadence = "1h";
  std::vector<std::string> alpha_overrides;
  std::string policy = "never";
  std::optional<double> low_production_threshold;
  std::optional<double> expected_production_floor;
  double min_coverage = 0.5;
  int max_iter = 5;
  std::size_t frozen_count = 0;
  bool keep_negative = false;
  std::string format = "json";
  std::string output_path;
  unsigned workers = 0;
  /// When set, first-pass detections are scored against this truth file.
  std::string score_truth_path;
  /// Metrics output; defaults to the report path with `.metrics.json` appended.
  std::string score_output_path;
};

/// Full pass over a data file; writes the JSON report (or the rates CSV).
/// Failed windows are kept in the report and the exit code reflects the most
/// severe failure.
int cmd_reconcile(const RunConfig& config, std::ostream& err);

/// Writes `data.csv` and `truth.json` into `output_dir`.
int cmd_simulate(const std::string& scenario_path, std::uint64_t seed, const std::string& output_dir,
                 std::ostream& err);

/// Scores the first-pass detections of a reconcile report against a truth file.
int cmd_score(const std::string& truth_path, const std::string& report_path, const std::string& output_path,
              std::ostream& err);

} // namespace dvr
