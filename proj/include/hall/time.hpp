#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace hall {

using Millis = std::chrono::milliseconds;
/// UTC wall-clock instant at millisecond precision.
using Timestamp = std::chrono::sys_time<Millis>;

Timestamp now_utc();

/// RFC 3339 with millisecond fraction and a `Z` suffix, e.g.
/// `2023-10-15T08:30:00.250Z`.
std::string format_rfc3339(Timestamp t);

/// Accepts `Z` or numeric offsets and 0-9 fractional digits (truncated to ms).
std::optional<Timestamp> parse_rfc3339(std::string_view text);

inline double seconds_between(Timestamp from, Timestamp to) {
  return std::chrono::duration<double>(to - from).count();
}

}  // namespace hall
