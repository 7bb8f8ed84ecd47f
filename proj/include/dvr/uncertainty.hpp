#pragma once

#include "dvr/time.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace dvr {

enum class UncertaintyMode { APriori, Calibrated };

/// Per-channel uncertainty declaration. The standard deviation of a reading r
/// is max(relative * r, absolute_floor), in Sm3/d.
struct UncertaintySpec {
  double relative = 0.05;
  double absolute_floor = 1.0;
  UncertaintyMode mode = UncertaintyMode::APriori;
};

/// A meter reading paired with a well-test reference value.
struct ReferencePair {
  double measured = 0.0;
  double reference = 0.0;
  Timestamp timestamp{};
};

/// Decay per well test used when a channel is in calibrated mode.
inline constexpr double kDefaultCalibrationDecay = 0.8;

void validate(const UncertaintySpec& spec);

/// sigma^2 = max(relative * reading, absolute_floor)^2.
double a_priori_variance(const UncertaintySpec& spec, double reading);

/// Exponentially weighted mean squared deviation of `history` (ordered oldest
/// first), newest pair weighted 1 and each older one by a further factor of
/// `decay`; never below floor^2.
double calibrate_variance(std::span<const ReferencePair> history, double decay, double floor);

/// Variance for one channel and window: calibrated from the reference pairs
/// strictly before `as_of` in calibrated mode when any exist, otherwise
/// the a-priori band at max(reading, 0).
double channel_variance(const UncertaintySpec& spec, double reading,
                        std::span<const ReferencePair> history, Timestamp as_of,
                        double decay = kDefaultCalibrationDecay);

/// Reference pairs keyed by channel id, each list sorted by timestamp.
using ReferenceTable = std::map<std::string, std::vector<ReferencePair>>;

/// Reads `channel_id,timestamp,measured,reference` with a header row.
ReferenceTable read_reference_csv(const std::string& path);
ReferenceTable parse_reference_csv(const std::string& text);

} // namespace dvr
