#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace archgraph {

// Archival datetimes are 14-digit UTC strings (YYYYMMDDHHMMSS). They sort
// correctly as plain strings, so most code never converts them.
bool is_valid_timestamp(std::string_view ts);

// "20091104011307" -> "04-Nov-09"
std::string format_short_date(std::string_view ts);

// Accepts "2010-01-30T00:30:05Z" (optionally with fractional seconds).
std::optional<std::string> timestamp_from_iso8601(std::string_view iso);
std::string iso8601_from_timestamp(std::string_view ts);

// Inclusive range of archival timestamps. An empty bound is unbounded.
struct TimeRange {
  std::string from;
  std::string to;

  bool contains(std::string_view ts) const {
    return (from.empty() || ts >= from) && (to.empty() || ts <= to);
  }
  bool unbounded() const { return from.empty() && to.empty(); }

  static TimeRange whole() { return {}; }
  // "2010-01" or "201001" -> [20100101000000, 20100131235959]
  static std::optional<TimeRange> month(std::string_view year_month);
};

}  // namespace archgraph
