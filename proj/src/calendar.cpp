#include "npb/calendar.hpp"

#include <cctype>
#include <cstdio>
#include <stdexcept>

namespace npb {

Date parse_date(const std::string& s) {
  // Strict "YYYY-MM-DD": four digits, dash, two digits, dash, two digits.
  auto fail = [&] {
    throw std::invalid_argument("invalid date '" + s + "', expected YYYY-MM-DD");
  };
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') fail();
  for (int i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) fail();
  }
  const int y = std::stoi(s.substr(0, 4));
  const unsigned m = unsigned(std::stoi(s.substr(5, 2)));
  const unsigned d = unsigned(std::stoi(s.substr(8, 2)));
  Date out(y, m, d);
  if (!out.ymd.ok()) fail();
  return out;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", d.year(), d.month(), d.day());
  return buf;
}

}  // namespace npb
