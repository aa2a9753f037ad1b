#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ramp_stdae {

inline constexpr std::int64_t kSecondsPerDay = 86400;

/// Seconds since the Unix epoch (UTC, no leap seconds).
using EpochSeconds = std::int64_t;

/// Parses "YYYY-MM-DDTHH:MM:SS" (a trailing 'Z' or a space separator are
/// accepted). Throws ParseError on anything else.
EpochSeconds parse_iso8601(std::string_view text);
std::string format_iso8601(EpochSeconds t);

/// Fraction of the day elapsed, in [0, 1).
double time_of_day_fraction(EpochSeconds t);
/// Monday = 0 ... Sunday = 6, divided by 7.
double day_of_week_fraction(EpochSeconds t);

}  // namespace ramp_stdae
