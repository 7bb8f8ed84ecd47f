#pragma once

#include "dvr/reconcile.hpp"
#include "dvr/time.hpp"
#include "dvr/topology.hpp"

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dvr {

enum class Quality { Good, Bad, Unknown };
std::string_view to_string(Quality q);
Quality parse_quality(std::string_view text);

struct Sample {
  Timestamp time{};
  double value = 0.0;
  Quality quality = Quality::Good;
};

/// Time series of one channel; timestamps strictly increasing.
class RawSeries {
public:
  RawSeries() = default;
  RawSeries(std::string channel_id, std::vector<Sample> samples);

  const std::string& channel_id() const { return channel_id_; }
  const std::vector<Sample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }

private:
  std::string channel_id_;
  std::vector<Sample> samples_;
};

struct FilterRules {
  bool reject_negative = true;
  bool reject_bad_quality = true;
  /// Within a run of identical values only the first `frozen_count` samples
  /// are kept; 0 disables the rule.
  std::size_t frozen_count = 0;
};

/// Drops non-finite samples always, plus negative, bad-quality and frozen ones
/// as configured.
RawSeries filter_invalid(const RawSeries& raw, const FilterRules& rules);

struct WindowedMeasurement {
  std::string channel_id;
  Timestamp window_start{};
  Timestamp window_end{};
  double mean_value = 0.0;
  /// n_samples / expected, capped at 1.
  double coverage = 0.0;
  std::size_t n_samples = 0;
};

/// Arithmetic mean of the samples in each window holding at least one sample.
/// Windows are aligned as in window_floor.
std::vector<WindowedMeasurement> aggregate_window(const RawSeries& raw, Duration window,
                                                  double expected_samples,
                                                  Duration offset = Duration{0});

struct AssembledProblem {
  /// Input channels with `active` cleared for every excluded one.
  std::vector<MeasurementChannel> channels;
  SystemMatrices matrices;
  MeasurementVector measurements;
  std::vector<std::string> excluded;
};

/// Builds the reconciliation input for one window. Channels without a window
/// entry or with coverage below `min_coverage` are deactivated before the
/// matrices are built. Throws EstimabilityError when what remains cannot
/// determine every node.
AssembledProblem assemble_problem(const NetworkTopology& topology,
                                  std::span<const MeasurementChannel> channels,
                                  const std::map<std::string, WindowedMeasurement>& windows,
                                  const std::map<std::string, double>& sigma2, double min_coverage);

using SeriesTable = std::map<std::string, RawSeries>;

/// Reads `timestamp,channel_id,value,quality`. Rows may interleave channels;
/// each series is sorted and duplicate timestamps are rejected.
SeriesTable read_series_csv(const std::string& path);
SeriesTable parse_series_csv(const std::string& text);

/// Writes all samples ordered by timestamp, then channel id.
void write_series_csv(std::ostream& out, const SeriesTable& table);

/// Shortest decimal that round-trips.
std::string format_number(double v);

} // namespace dvr
