#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "marsbid/error.hpp"

namespace marsbid {

// Whole UTC hour, counted from the Unix epoch.
struct UtcHour {
  std::int64_t value = 0;

  friend constexpr auto operator<=>(UtcHour, UtcHour) = default;
  constexpr UtcHour operator+(std::int64_t hours) const { return UtcHour{value + hours}; }
  constexpr std::int64_t operator-(UtcHour other) const { return value - other.value; }
};

inline UtcHour make_utc_hour(int year, unsigned month, unsigned day, int hour = 0) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  require<DataError>(ymd.ok(), "invalid calendar date ", year, "-", month, "-", day);
  require<DataError>(hour >= 0 && hour < 24, "invalid hour ", hour);
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return UtcHour{static_cast<std::int64_t>(days_since_epoch) * 24 + hour};
}

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline bool parse_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

}  // namespace detail

inline int hour_of_day(UtcHour t) {
  return static_cast<int>(t.value - detail::floor_div(t.value, 24) * 24);
}

// Monday = 0 ... Sunday = 6. 1970-01-01 was a Thursday.
inline int day_of_week(UtcHour t) {
  const std::int64_t days = detail::floor_div(t.value, 24);
  return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

inline int hour_of_week(UtcHour t) { return day_of_week(t) * 24 + hour_of_day(t); }

inline std::chrono::year_month_day calendar_date(UtcHour t) {
  using namespace std::chrono;
  return year_month_day{sys_days{days{detail::floor_div(t.value, 24)}}};
}

// Accepts "YYYY-MM-DDTHH:MM[:SS][Z]", a space instead of 'T', or a bare date.
// Minutes and seconds must be zero.
inline UtcHour parse_utc_hour(std::string_view text) {
  const auto fail = [&]() -> UtcHour {
    throw DataError("unparseable timestamp '" + std::string(text) + "'");
  };
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!detail::parse_digits(text, 0, 4, y) || text.size() < 10 || text[4] != '-' ||
      !detail::parse_digits(text, 5, 2, mo) || text[7] != '-' || !detail::parse_digits(text, 8, 2, d)) {
    return fail();
  }
  std::size_t pos = 10;
  if (pos < text.size()) {
    if (text[pos] != 'T' && text[pos] != ' ') return fail();
    if (!detail::parse_digits(text, pos + 1, 2, h)) return fail();
    pos += 3;
    if (pos < text.size() && text[pos] == ':') {
      if (!detail::parse_digits(text, pos + 1, 2, mi)) return fail();
      pos += 3;
      if (pos < text.size() && text[pos] == ':') {
        if (!detail::parse_digits(text, pos + 1, 2, s)) return fail();
        pos += 3;
      }
    }
    if (pos < text.size() && text[pos] == 'Z') ++pos;
    if (pos != text.size()) return fail();
  }
  if (mi != 0 || s != 0) {
    throw DataError("timestamp '" + std::string(text) + "' is not on an hour boundary");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23) return fail();
  return make_utc_hour(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), h);
}

inline std::string format_utc_hour(UtcHour t) {
  const auto ymd = calendar_date(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00:00Z", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hour_of_day(t));
  return buf;
}

}  // namespace marsbid
