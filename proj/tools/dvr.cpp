// Command-line front end: reconcile, simulate, score.

#include "dvr/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Steady-state flow reconciliation with gross error detection"};
  app.require_subcommand(1);

  dvr::RunConfig run;
  double low_threshold = 0.0;
  double expected_floor = 0.0;
  auto* reconcile = app.add_subcommand("reconcile", "Reconcile windowed measurements and test for gross errors");
  reconcile->add_option("--topology", run.topology_path, "Topology JSON")->required();
  reconcile->add_option("--data", run.data_path, "Measurement CSV (timestamp,channel_id,value,quality)")->required();
  reconcile->add_option("--references", run.references_path, "Well-test CSV (channel_id,timestamp,measured,reference)");
  reconcile->add_option("--window", run.window, "Aggregation window, e.g. 24h")->capture_default_str();
  reconcile->add_option("--window-offset", run.window_offset, "Window alignment offset from UTC midnight")
      ->capture_default_str();
  reconcile->add_option("--cadence", run.cadence, "Nominal sample spacing")->capture_default_str();
  reconcile->add_option("--alpha", run.alpha_overrides, "Significance override TYPE=VALUE or CHANNEL=VALUE");
  reconcile->add_option("--policy", run.policy, "Elimination policy")
      ->check(CLI::IsMember({"never", "max_abs_z", "threshold_rule"}))
      ->capture_default_str();
  auto* low_opt =
      reconcile->add_option("--low-threshold", low_threshold, "threshold_rule: low-production reading, Sm3/d");
  auto* floor_opt =
      reconcile->add_option("--expected-floor", expected_floor, "threshold_rule: expected production floor, Sm3/d");
  reconcile->add_option("--min-coverage", run.min_coverage, "Minimum window coverage")->capture_default_str();
  reconcile->add_option("--max-iter", run.max_iter, "Maximum reconciliation passes per window")->capture_default_str();
  reconcile->add_option("--frozen-count", run.frozen_count, "Frozen-signal run length (0 disables)")
      ->capture_default_str();
  reconcile->add_flag("--keep-negative", run.keep_negative, "Keep negative samples");
  reconcile->add_option("--format", run.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  reconcile->add_option("--workers", run.workers, "Worker threads (0 = all cores)");
  reconcile->add_option("--out", run.output_path, "Output file")->required();
  reconcile->add_option("--score", run.score_truth_path, "Also score first-pass detections against a truth.json");
  reconcile->add_option("--score-out", run.score_output_path, "Metrics JSON (default: <out>.metrics.json)");

  std::string scenario_path;
  std::string sim_out;
  std::uint64_t seed = 42;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic campaign");
  simulate->add_option("scenario,--scenario", scenario_path, "Scenario JSON")->required();
  simulate->add_option("--seed", seed, "Random seed")->capture_default_str();
  simulate->add_option("--out", sim_out, "Output directory")->required();

  std::string truth_path;
  std::string report_path;
  std::string score_out;
  auto* score = app.add_subcommand("score", "Score detections against a synthetic campaign");
  score->add_option("--truth", truth_path, "truth.json written by simulate")->required();
  score->add_option("--report", report_path, "Report written by reconcile")->required();
  score->add_option("--out", score_out, "Metrics JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dvr::kExitInput;
  }

  if (*reconcile) {
    if (low_opt->count() > 0) run.low_production_threshold = low_threshold;
    if (floor_opt->count() > 0) run.expected_production_floor = expected_floor;
    return dvr::cmd_reconcile(run, std::cerr);
  }
  if (*simulate) {
    return dvr::cmd_simulate(scenario_path, seed, sim_out, std::cerr);
  }
  return dvr::cmd_score(truth_path, report_path, score_out, std::cerr);
}
