#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "npb/calendar.hpp"

namespace npb {

enum class Phase { PreCovid, Restriction, PostVaccine };

const char* phase_name(Phase p);

// Phase boundaries: PreCovid runs through pre_end, Restriction through
// restr_end, PostVaccine afterwards. Defaults are the pandemic-phase dates
// used throughout the reports.
struct PhaseBoundaries {
  Date pre_end{2020, 3, 14};
  Date restr_end{2021, 6, 14};
};

Phase assign_phase(const Date& d, const PhaseBoundaries& b = {});

// One collapsed reservation row: `weight` identical bookings of `nights`
// nights created on `created`.
struct BookingRecord {
  int nights = 0;
  std::int64_t weight = 0;
  Date created;
  Phase phase = Phase::PreCovid;
  int month = 1;  // calendar month of `created`, 1..12
};

struct BookingTable {
  std::vector<BookingRecord> records;
  std::string source;
  std::int64_t rows_read = 0;
  std::int64_t rows_dropped = 0;    // nights outside [1, cap]
  std::int64_t weight_dropped = 0;
  std::int64_t total_weight = 0;    // of retained records
};

struct IngestOptions {
  PhaseBoundaries phases;
  int cap = 180;          // nights above this are dropped (cap itself retained)
  bool collapse = true;   // merge duplicate (nights, created) keys
};

// Reads `nights,weight,created_date` CSV. Malformed or non-integer rows
// throw std::runtime_error naming the row; out-of-range nights are dropped
// and counted instead.
BookingTable load_bookings(std::istream& in, const IngestOptions& opts = {});
BookingTable load_bookings_file(const std::string& path, const IngestOptions& opts = {});

void write_bookings(std::ostream& out, const BookingTable& table);

struct MonthlyPoint {
  std::int64_t ym_index = 0;  // year*12 + (month-1)
  int year = 0;
  int month = 0;
  double wmean = 0.0;
  double wsd = 0.0;
  std::int64_t total_weight = 0;
  double phase_share[3] = {0.0, 0.0, 0.0};  // weight fraction per Phase
};

// One point per distinct year-month, chronological. Calendar gaps are legal
// here; the seasonal model rejects them when it builds its series.
std::vector<MonthlyPoint> monthly_aggregate(const BookingTable& table);

// Reads the `month,wmean,wsd,total_weight` series written by the
// descriptives stage (month formatted YYYY-MM, rows in any order).
std::vector<MonthlyPoint> load_monthly_series(std::istream& in);
std::vector<MonthlyPoint> load_monthly_series_file(const std::string& path);

}  // namespace npb
