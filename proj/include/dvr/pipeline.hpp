#pragma once

#include "dvr/config.hpp"
#include "dvr/ged.hpp"
#include "dvr/ingest.hpp"
#include "dvr/uncertainty.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dvr {

struct PipelineOptions {
  Duration window{std::chrono::hours{24}};
  Duration window_offset{0};
  /// Nominal sample spacing; window / cadence samples make full coverage.
  Duration cadence{std::chrono::hours{1}};
  FilterRules filter;
  double min_coverage = 0.5;
  EliminationPolicy policy;
  int max_iter = 5;
  double calibration_decay = kDefaultCalibrationDecay;
  /// 0 picks the hardware concurrency.
  unsigned workers = 0;
};

enum class WindowError { None, Input, Estimability, Numerical };

struct WindowResult {
  Timestamp window_start{};
  Timestamp window_end{};
  /// Aggregated reading per configured channel that had samples.
  std::map<std::string, WindowedMeasurement> aggregates;
  std::map<std::string, double> sigma2;
  std::vector<std::string> excluded;
  std::optional<IterationTrace> trace;
  WindowError error = WindowError::None;
  std::string message;
};

/// Runs every window touched by the data through filtering, aggregation,
/// uncertainty, reconciliation and the elimination loop. Windows are
/// processed concurrently; the result is ordered by window start.
std::vector<WindowResult> run_pipeline(const FieldConfig& field, const SeriesTable& series,
                                       const ReferenceTable& references, const PipelineOptions& options);

} // namespace dvr
