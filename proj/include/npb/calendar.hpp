#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>

namespace npb {

// Calendar date restricted to what the booking data needs: ISO-8601 parsing,
// ordering, and month arithmetic.
struct Date {
  std::chrono::year_month_day ymd;

  Date() : ymd(std::chrono::year{1970}, std::chrono::month{1}, std::chrono::day{1}) {}
  Date(int y, unsigned m, unsigned d)
      : ymd(std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}) {}

  int year() const { return int(ymd.year()); }
  unsigned month() const { return unsigned(ymd.month()); }
  unsigned day() const { return unsigned(ymd.day()); }

  // Months since year 0, so consecutive calendar months differ by 1.
  std::int64_t ym_index() const {
    return std::int64_t(year()) * 12 + (std::int64_t(month()) - 1);
  }

  friend auto operator<=>(const Date& a, const Date& b) {
    return std::chrono::sys_days(a.ymd) <=> std::chrono::sys_days(b.ymd);
  }
  friend bool operator==(const Date& a, const Date& b) { return a.ymd == b.ymd; }
};

// Parses "YYYY-MM-DD". Throws std::invalid_argument on malformed text or an
// impossible calendar date (e.g. 2021-02-30).
Date parse_date(const std::string& s);

std::string format_date(const Date& d);

}  // namespace npb
