#pragma once

#include <optional>
#include <string_view>

#include "drivelab/model.hpp"

namespace drivelab {

enum class TimeFormat { relative_ms, epoch_ms, iso8601 };

const char* to_string(TimeFormat f);

/// Epoch milliseconds of an ISO-8601 date-time ("2023-05-04T10:00:00.250Z",
/// optional fraction, 'Z' or +hh:mm offset, no zone means UTC).
std::optional<Millis> parse_iso8601(std::string_view s);

/// Numeric values of at least this magnitude are taken as epoch milliseconds.
inline constexpr double kEpochThresholdMs = 1e11;

/// Classifies a time column from its first value.
std::optional<TimeFormat> detect_time_format(std::string_view first_value);

/// Session-relative milliseconds of a value in the given column format.
std::optional<Millis> parse_time(std::string_view s, TimeFormat f, Millis t0);

}  // namespace drivelab
