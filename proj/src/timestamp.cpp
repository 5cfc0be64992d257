#include "archgraph/timestamp.hpp"

#include <array>
#include <cctype>

#include <fmt/format.h>

namespace archgraph {
namespace {

bool all_digits(std::string_view s) {
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return !s.empty();
}

int to_int(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

bool is_leap(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

int days_in_month(int year, int month) {
  static constexpr std::array<int, 12> kDays{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2 && is_leap(year)) return 29;
  return kDays[month - 1];
}

constexpr std::array<const char*, 12> kMonthNames{"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                  "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

}  // namespace

bool is_valid_timestamp(std::string_view ts) {
  if (ts.size() != 14 || !all_digits(ts)) return false;
  const int year = to_int(ts.substr(0, 4));
  const int month = to_int(ts.substr(4, 2));
  const int day = to_int(ts.substr(6, 2));
  const int hour = to_int(ts.substr(8, 2));
  const int minute = to_int(ts.substr(10, 2));
  const int second = to_int(ts.substr(12, 2));
  if (year < 1 || month < 1 || month > 12) return false;
  if (day < 1 || day > days_in_month(year, month)) return false;
  return hour < 24 && minute < 60 && second < 60;
}

std::string format_short_date(std::string_view ts) {
  if (!is_valid_timestamp(ts)) return std::string(ts);
  const int month = to_int(ts.substr(4, 2));
  return fmt::format("{}-{}-{}", ts.substr(6, 2), kMonthNames[month - 1], ts.substr(2, 2));
}

std::optional<std::string> timestamp_from_iso8601(std::string_view iso) {
  // YYYY-MM-DDTHH:MM:SS[.fff]Z
  if (iso.size() < 20) return std::nullopt;
  if (iso[4] != '-' || iso[7] != '-' || iso[10] != 'T' || iso[13] != ':' || iso[16] != ':') {
    return std::nullopt;
  }
  if (iso.back() != 'Z') return std::nullopt;
  std::string ts;
  ts.reserve(14);
  ts.append(iso.substr(0, 4)).append(iso.substr(5, 2)).append(iso.substr(8, 2));
  ts.append(iso.substr(11, 2)).append(iso.substr(14, 2)).append(iso.substr(17, 2));
  if (!is_valid_timestamp(ts)) return std::nullopt;
  return ts;
}

std::string iso8601_from_timestamp(std::string_view ts) {
  return fmt::format("{}-{}-{}T{}:{}:{}Z", ts.substr(0, 4), ts.substr(4, 2), ts.substr(6, 2),
                     ts.substr(8, 2), ts.substr(10, 2), ts.substr(12, 2));
}

std::optional<TimeRange> TimeRange::month(std::string_view year_month) {
  std::string compact;
  for (char c : year_month) {
    if (c != '-') compact.push_back(c);
  }
  if (compact.size() != 6 || !all_digits(compact)) return std::nullopt;
  const int year = to_int(std::string_view(compact).substr(0, 4));
  const int month = to_int(std::string_view(compact).substr(4, 2));
  if (year < 1 || month < 1 || month > 12) return std::nullopt;
  return TimeRange{compact + "01000000",
                   fmt::format("{}{:02d}235959", compact, days_in_month(year, month))};
}

}  // namespace archgraph
