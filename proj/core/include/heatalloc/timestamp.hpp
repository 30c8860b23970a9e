#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace heatalloc {

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr double kSecondsPerHour = 3600.0;

/// Parses `YYYY-MM-DDTHH:MM:SSZ` (a trailing `Z` or `+00:00` is accepted).
/// Throws DataError on anything else.
Timestamp parse_iso8601(std::string_view text);

/// Formats as `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_iso8601(Timestamp t);

}  // namespace heatalloc
