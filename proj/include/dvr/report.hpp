#pragma once

#include "dvr/ged.hpp"
#include "dvr/pipeline.hpp"
#include "dvr/simgen.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace dvr {

using ordered_json = nlohmann::ordered_json;

/// Identifies the layout of the reconcile report; bump on incompatible change.
inline constexpr const char* kReportSchemaId = "dvr-report/1";

ordered_json to_json(const DetectionReport& report);
ordered_json to_json(const ReconciliationResult& result, const SystemMatrices& m, const MeasurementVector& y);
ordered_json to_json(const IterationTrace& trace);
ordered_json to_json(const WindowResult& window);

struct RunInfo {
  PipelineOptions options;
  std::vector<std::string> unknown_channels;
};

ordered_json make_report(const std::vector<WindowResult>& windows, const RunInfo& info);

/// window_start,node_id,y_hat from the last pass of each reconciled window.
void write_rates_csv(std::ostream& out, const std::vector<WindowResult>& windows);

/// First-pass detection of every window in a report; failed windows carry an
/// empty detection.
std::vector<WindowDetection> detections_from_report(const nlohmann::json& report);
DetectionReport detection_from_json(const nlohmann::json& j);

ordered_json to_json(const CampaignTruth& truth);
CampaignTruth truth_from_json(const nlohmann::json& j);

ordered_json to_json(const DetectionMetrics& metrics);

} // namespace dvr
