#pragma once

#include "dvr/config.hpp"
#include "dvr/ged.hpp"
#include "dvr/ingest.hpp"
#include "dvr/time.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dvr {

struct GrossErrorScenario {
  enum class Kind { Bias, Drift, DropoutZero };

  std::string channel_id;
  Kind kind = Kind::Bias;
  /// Sm3/d for bias, Sm3/d per day for drift; ignored for dropout.
  double magnitude = 0.0;
  Timestamp start{};
  Timestamp end{};

  /// Reading of a sample at `t` whose fault-free value is `value`.
  double apply(Timestamp t, double value) const;
  bool active_at(Timestamp t) const { return start <= t && t < end; }
  bool overlaps(Timestamp from, Timestamp to) const { return start < to && from < end; }
};

std::string_view to_string(GrossErrorScenario::Kind kind);
GrossErrorScenario::Kind parse_scenario_kind(std::string_view text);

/// Truth of a well: median rate `baseline`, log-normal day-to-day spread
/// `noise`, and an optional slow sinusoid of relative amplitude
/// `seasonal_amplitude`.
struct WellSpec {
  std::string node;
  double baseline = 0.0;
  double noise = 0.0;
  double seasonal_amplitude = 0.0;
  double seasonal_period_days = 30.0;
};

struct ScenarioConfig {
  FieldConfig field;
  Timestamp start{};
  Duration horizon{};
  Duration cadence{std::chrono::hours{1}};
  Duration window{std::chrono::hours{24}};
  /// Per-sample white noise as a multiple of the channel's sigma. The rest
  /// of the variance is held for the whole window, so a fully covered window
  /// mean carries exactly the declared sigma^2.
  double sample_jitter = 1.0;
  /// Multiplier on every channel's sigma; 0 gives noiseless readings.
  double noise_scale = 1.0;
  std::vector<WellSpec> wells{};
  std::vector<GrossErrorScenario> scenarios{};

  double samples_per_window() const {
    return static_cast<double>(window.count()) / static_cast<double>(cadence.count());
  }
  void validate() const;
};

/// Scenario JSON: {topology, start, horizon, cadence, window, sample_jitter,
/// noise_scale, wells: [{node, baseline, noise, seasonal_amplitude, seasonal_period_days}],
/// scenarios: [{channel, kind, magnitude, start, end}]}. `topology` is a path
/// relative to the scenario file.
ScenarioConfig parse_scenario_config(std::string_view json_text, const std::string& base_dir);
ScenarioConfig load_scenario_config(const std::string& path);

/// Ground truth needed to score detections.
struct CampaignTruth {
  std::uint64_t seed = 0;
  Duration window{};
  std::vector<Timestamp> window_starts;
  std::vector<std::string> node_order;
  /// true_rates[w][j]: node node_order[j] in window w, Sm3/d.
  std::vector<std::vector<double>> true_rates;
  std::vector<GrossErrorScenario> scenarios{};

  bool faulty(std::string_view channel, Timestamp window_start) const;
};

struct SyntheticCampaign {
  CampaignTruth truth;
  SeriesTable channel_series;
};

/// Well truths are drawn, every other node follows from the balances, rates
/// are quantized to 1/1024 Sm3/d so the balances hold exactly in floating
/// point. Each channel draws from its own stream seeded by (seed, channel).
SyntheticCampaign simulate_campaign(const ScenarioConfig& config, std::uint64_t seed);

struct WindowDetection {
  Timestamp window_start{};
  DetectionReport report;
};

struct ChannelScore {
  std::string channel_id;
  std::size_t true_positive = 0;
  std::size_t false_negative = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;

  double tpr() const;
  double fpr() const;
};

struct DetectionMetrics {
  std::vector<ChannelScore> channels;
  ChannelScore total;
  std::size_t faulty_windows = 0;
  std::size_t localized_windows = 0;

  double tpr() const { return total.tpr(); }
  double fpr() const { return total.fpr(); }
  /// Share of windows with a fault where the top-ranked channel is faulty.
  double localization_accuracy() const;
};

/// Every report window must be a campaign window and vice versa.
DetectionMetrics score_detections(const std::vector<WindowDetection>& reports, const CampaignTruth& truth);

} // namespace dvr
