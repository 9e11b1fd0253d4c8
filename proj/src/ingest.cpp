#include "npb/ingest.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "npb/accum.hpp"
#include "npb/errors.hpp"
#include "npb/wstats.hpp"

namespace npb {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::PreCovid: return "pre_covid";
    case Phase::Restriction: return "restriction";
    case Phase::PostVaccine: return "post_vaccine";
  }
  return "unknown";
}

Phase assign_phase(const Date& d, const PhaseBoundaries& b) {
  if (d <= b.pre_end) return Phase::PreCovid;
  if (d <= b.restr_end) return Phase::Restriction;
  return Phase::PostVaccine;
}

namespace {

std::int64_t parse_int_field(const std::string& field, const char* what, long line_no) {
  std::int64_t value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw DataError("row " + std::to_string(line_no) + ": " + what +
                    " is not an integer: '" + field + "'");
  }
  return value;
}

double parse_double_field(const std::string& field, const char* what, long line_no) {
  double value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw DataError("row " + std::to_string(line_no) + ": " + what +
                    " is not a number: '" + field + "'");
  }
  return value;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

BookingTable load_bookings(std::istream& in, const IngestOptions& opts) {
  BookingTable table;
  std::string line;
  long line_no = 0;

  if (!std::getline(in, line)) throw DataError("input is empty");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "nights,weight,created_date") {
    throw DataError("expected header 'nights,weight,created_date', got '" + line + "'");
  }

  // Collapse key is (created, nights); the map keeps records in a
  // deterministic chronological order.
  std::map<std::pair<std::int64_t, int>, std::int64_t> merged;
  std::vector<BookingRecord> sequential;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::string f[3];
    int nf = 0;
    size_t start = 0;
    for (size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (nf < 3) f[nf] = line.substr(start, i - start);
        ++nf;
        start = i + 1;
      }
    }
    if (nf != 3) {
      throw DataError("row " + std::to_string(line_no) + ": expected 3 fields, got " +
                      std::to_string(nf));
    }

    const std::int64_t nights = parse_int_field(f[0], "nights", line_no);
    const std::int64_t weight = parse_int_field(f[1], "weight", line_no);
    Date created;
    try {
      created = parse_date(f[2]);
    } catch (const std::invalid_argument& e) {
      throw DataError("row " + std::to_string(line_no) + ": " + e.what());
    }
    if (weight < 1) {
      throw DataError("row " + std::to_string(line_no) + ": weight must be >= 1, got " +
                      std::to_string(weight));
    }

    ++table.rows_read;
    if (nights < 1 || nights > opts.cap) {
      ++table.rows_dropped;
      table.weight_dropped += weight;
      continue;
    }

    if (opts.collapse) {
      merged[{std::chrono::sys_days(created.ymd).time_since_epoch().count(),
              int(nights)}] += weight;
    } else {
      BookingRecord r;
      r.nights = int(nights);
      r.weight = weight;
      r.created = created;
      sequential.push_back(r);
    }
  }

  if (opts.collapse) {
    for (const auto& [key, weight] : merged) {
      BookingRecord r;
      r.created.ymd = std::chrono::year_month_day(
          std::chrono::sys_days(std::chrono::days(key.first)));
      r.nights = key.second;
      r.weight = weight;
      sequential.push_back(r);
    }
  }

  for (auto& r : sequential) {
    r.phase = assign_phase(r.created, opts.phases);
    r.month = int(r.created.month());
    table.total_weight += r.weight;
  }
  table.records = std::move(sequential);
  if (table.records.empty()) throw DataError("no records remain after filtering");
  return table;
}

BookingTable load_bookings_file(const std::string& path, const IngestOptions& opts) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file: " + path);
  BookingTable table = load_bookings(in, opts);
  table.source = path;
  return table;
}

void write_bookings(std::ostream& out, const BookingTable& table) {
  out << "nights,weight,created_date\n";
  for (const auto& r : table.records) {
    out << r.nights << ',' << r.weight << ',' << format_date(r.created) << '\n';
  }
}

std::vector<MonthlyPoint> monthly_aggregate(const BookingTable& table) {
  if (table.records.empty()) throw DataError("monthly_aggregate: empty table");

  std::map<std::int64_t, std::vector<const BookingRecord*>> by_month;
  for (const auto& r : table.records) {
    by_month[r.created.ym_index()].push_back(&r);
  }

  std::vector<MonthlyPoint> out;
  for (const auto& [ym, rows] : by_month) {
    WeightedSample s;
    s.values.resize(Eigen::Index(rows.size()));
    s.weights.resize(Eigen::Index(rows.size()));
    MonthlyPoint p;
    p.ym_index = ym;
    p.year = int(ym / 12);
    p.month = int(ym % 12) + 1;
    double phase_weight[3] = {0, 0, 0};
    for (size_t i = 0; i < rows.size(); ++i) {
      s.values(Eigen::Index(i)) = double(rows[i]->nights);
      s.weights(Eigen::Index(i)) = double(rows[i]->weight);
      p.total_weight += rows[i]->weight;
      phase_weight[int(rows[i]->phase)] += double(rows[i]->weight);
    }
    p.wmean = weighted_mean(s);
    p.wsd = weighted_sd(s);
    for (int k = 0; k < 3; ++k) {
      p.phase_share[k] = phase_weight[k] / double(p.total_weight);
    }
    out.push_back(p);
  }
  return out;
}

std::vector<MonthlyPoint> load_monthly_series(std::istream& in) {
  std::string line;
  long line_no = 0;

  if (!std::getline(in, line)) throw DataError("series input is empty");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "month,wmean,wsd,total_weight") {
    throw DataError("expected header 'month,wmean,wsd,total_weight', got '" + line + "'");
  }

  std::map<std::int64_t, MonthlyPoint> by_ym;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 4) {
      throw DataError("row " + std::to_string(line_no) + ": expected 4 fields, got " +
                      std::to_string(f.size()));
    }
    if (f[0].size() != 7 || f[0][4] != '-') {
      throw DataError("row " + std::to_string(line_no) + ": month must be YYYY-MM, got '" +
                      f[0] + "'");
    }
    const std::int64_t year = parse_int_field(f[0].substr(0, 4), "year", line_no);
    const std::int64_t month = parse_int_field(f[0].substr(5, 2), "month", line_no);
    if (month < 1 || month > 12) {
      throw DataError("row " + std::to_string(line_no) + ": month out of range: '" + f[0] + "'");
    }

    MonthlyPoint p;
    p.ym_index = year * 12 + (month - 1);
    p.year = int(year);
    p.month = int(month);
    p.wmean = parse_double_field(f[1], "wmean", line_no);
    p.wsd = parse_double_field(f[2], "wsd", line_no);
    p.total_weight = parse_int_field(f[3], "total_weight", line_no);
    if (!by_ym.emplace(p.ym_index, p).second) {
      throw DataError("row " + std::to_string(line_no) + ": duplicate month '" + f[0] + "'");
    }
  }
  if (by_ym.empty()) throw DataError("series has no data rows");

  std::vector<MonthlyPoint> out;
  out.reserve(by_ym.size());
  for (const auto& [ym, p] : by_ym) out.push_back(p);
  return out;
}

std::vector<MonthlyPoint> load_monthly_series_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open series file: " + path);
  return load_monthly_series(in);
}

}  // namespace npb
