#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace landtriage {

// Calendar dates are whole days; YYYY-MM-DD on the wire.
using Date = std::chrono::sys_days;

Date parse_date(std::string_view text, std::string_view field = "date");
std::string format_date(Date d);

inline Date make_date(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

inline int days_between(Date from, Date to) { return static_cast<int>((to - from).count()); }

inline Date add_days(Date d, int n) { return d + std::chrono::days{n}; }

// UTC calendar date of the system clock.
Date today_utc();

// ISO-8601 UTC timestamp of the system clock, second resolution.
std::string now_timestamp_utc();

}  // namespace landtriage
