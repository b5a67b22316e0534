#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace mercury {

/// A UTC instant at one-second resolution.
using Instant = std::chrono::sys_seconds;

/// Datestamp granularity a repository declares.
enum class Granularity { day, seconds };

struct ParsedDatestamp {
    Instant instant;
    Granularity granularity;
};

Instant now_utc();

/// "YYYY-MM-DDThh:mm:ssZ"
std::string format_rfc3339(Instant t);
/// "YYYY-MM-DD"
std::string format_day(Instant t);
std::string format_datestamp(Instant t, Granularity g);

/// Strict OAI-PMH datestamp: "YYYY-MM-DD" or "YYYY-MM-DDThh:mm:ssZ".
/// Throws ShapeError on anything else.
ParsedDatestamp parse_datestamp(std::string_view text);

/// RFC 3339 date-time with "Z" or a numeric offset; fractional seconds are
/// truncated. Throws ShapeError.
Instant parse_rfc3339(std::string_view text);

/// Either a bare date or an RFC 3339 date-time. Bare dates resolve to the
/// first second of the day, or the last when `end_of_day` is set.
Instant parse_date_or_time(std::string_view text, bool end_of_day = false);

Instant start_of_day(Instant t);
Instant end_of_day(Instant t);

std::string_view granularity_name(Granularity g);
std::optional<Granularity> granularity_from_name(std::string_view name);

} // namespace mercury
