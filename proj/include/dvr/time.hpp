#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace dvr {

using Timestamp = std::chrono::sys_seconds;
using Duration = std::chrono::seconds;

/// Parses `YYYY-MM-DDTHH:MM:SS[.fff](Z|+00:00)`. Only UTC offsets are accepted;
/// fractional seconds are truncated.
Timestamp parse_timestamp(std::string_view text);

/// Formats as `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_timestamp(Timestamp t);

/// Parses durations such as `24h`, `30m`, `90s`, `7d`. A bare integer is seconds.
Duration parse_duration(std::string_view text);

std::string format_duration(Duration d);

/// Start of the window containing `t`, for windows of length `window` aligned
/// to the epoch shifted by `offset` (UTC midnight for 24h windows and zero offset).
Timestamp window_floor(Timestamp t, Duration window, Duration offset = Duration{0});

} // namespace dvr
