#include "npb/simgen.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "npb/errors.hpp"
#include "npb/rng.hpp"
#include "npb/special.hpp"

namespace npb {

namespace {

const char* kMonthKeys[11] = {"feb", "mar", "apr", "may", "jun", "jul",
                              "aug", "sep", "oct", "nov", "dec"};

double month_offset(const std::array<double, 11>& v, int month) {
  return month >= 2 ? v[size_t(month - 2)] : 0.0;
}

double phase_offset(double post, double pre, Phase p) {
  if (p == Phase::PostVaccine) return post;
  if (p == Phase::PreCovid) return pre;
  return 0.0;
}

// Inverse-CDF negative binomial draw via the pmf recurrence
// pmf(k+1)/pmf(k) = ((k+theta)/(k+1)) * (mean/(mean+theta)). One uniform per
// draw keeps streams language-portable.
long long nb_draw(CounterRng& rng, double mean, double theta) {
  const double u = rng.uniform();
  double pmf = std::pow(theta / (theta + mean), theta);
  double cdf = pmf;
  long long k = 0;
  const double ratio_base = mean / (mean + theta);
  while (u > cdf) {
    pmf *= (double(k) + theta) / (double(k) + 1.0) * ratio_base;
    cdf += pmf;
    ++k;
    if (k > 100000000) throw NumericError("nb_draw: cdf walk failed to terminate");
  }
  return k;
}

// pmf table of a log-normal discretized by half-integer cell edges and
// truncated to [1, hi].
std::vector<double> truncated_lognormal_pmf(double mu, double sigma, int hi) {
  std::vector<double> pmf(static_cast<size_t>(hi));
  double total = 0.0;
  for (int k = 1; k <= hi; ++k) {
    const double a = k == 1 ? -std::numeric_limits<double>::infinity()
                            : (std::log(k - 0.5) - mu) / sigma;
    const double b = (std::log(k + 0.5) - mu) / sigma;
    pmf[size_t(k - 1)] = norm_cdf(b) - (k == 1 ? 0.0 : norm_cdf(a));
    total += pmf[size_t(k - 1)];
  }
  if (!(total > 0.0)) throw NumericError("short-stay pmf is degenerate");
  for (double& p : pmf) p /= total;
  return pmf;
}

int draw_from_pmf(CounterRng& rng, const std::vector<double>& pmf) {
  const double u = rng.uniform();
  double cdf = 0.0;
  for (size_t i = 0; i < pmf.size(); ++i) {
    cdf += pmf[i];
    if (u <= cdf) return int(i) + 1;
  }
  return int(pmf.size());  // rounding leftover lands on the last cell
}

}  // namespace

void validate(const BookingSimSpec& spec) {
  if (spec.n_months < 1) throw std::invalid_argument("booking spec: n_months must be >= 1");
  if (spec.intensity < 1) throw std::invalid_argument("booking spec: intensity must be >= 1");
  if (!(spec.theta > 0.0)) throw std::invalid_argument("booking spec: theta must be > 0");
  if (!(spec.short_sigma > 0.0)) {
    throw std::invalid_argument("booking spec: short_sigma must be > 0");
  }
  if (spec.threshold < 2 || spec.threshold > 180) {
    throw std::invalid_argument("booking spec: threshold must lie in [2, 180]");
  }
}

BookingTable simulate_bookings(const BookingSimSpec& spec) {
  validate(spec);
  BookingTable table;
  table.source = "simulated";

  for (int mi = 0; mi < spec.n_months; ++mi) {
    const std::int64_t ym = spec.start_ym + mi;
    const int year = int(ym / 12);
    const int month = int(ym % 12) + 1;
    const Date created(year, unsigned(month), 15);
    const Phase phase = assign_phase(created, spec.phases);

    const double alpha = spec.alpha0 +
                         phase_offset(spec.alpha_post, spec.alpha_pre, phase) +
                         month_offset(spec.alpha_month, month);
    const double p_long = 1.0 / (1.0 + std::exp(-alpha));
    const double mu_long = std::exp(
        spec.zeta0 + phase_offset(spec.zeta_post, spec.zeta_pre, phase) +
        month_offset(spec.zeta_month, month));
    if (mu_long <= double(spec.threshold)) {
      throw std::invalid_argument(
          "booking spec: long-stay mean must exceed the threshold in every cell");
    }
    const double mu_short = spec.short_mu +
                            phase_offset(spec.beta_post, spec.beta_pre, phase) +
                            month_offset(spec.gamma_month, month);
    const auto short_pmf =
        truncated_lognormal_pmf(mu_short, spec.short_sigma, spec.threshold - 1);

    CounterRng rng(spec.seed, std::uint64_t(mi));
    std::vector<std::int64_t> counts(181, 0);
    for (std::int64_t b = 0; b < spec.intensity; ++b) {
      long long y;
      if (rng.uniform() < p_long) {
        y = spec.threshold +
            nb_draw(rng, mu_long - double(spec.threshold), spec.theta);
        if (y > 180) y = 180;
      } else {
        y = draw_from_pmf(rng, short_pmf);
      }
      ++counts[size_t(y)];
    }

    for (int nights = 1; nights <= 180; ++nights) {
      if (counts[size_t(nights)] == 0) continue;
      BookingRecord r;
      r.nights = nights;
      r.weight = counts[size_t(nights)];
      r.created = created;
      r.phase = phase;
      r.month = month;
      table.records.push_back(r);
      table.total_weight += r.weight;
    }
    table.rows_read += spec.intensity;
  }
  return table;
}

BookingTable simulate_nb_glm(const NbGlmSimSpec& spec) {
  if (spec.n_months < 1) throw std::invalid_argument("nb spec: n_months must be >= 1");
  if (spec.total_bookings < 1) {
    throw std::invalid_argument("nb spec: total_bookings must be >= 1");
  }
  if (!(spec.theta > 0.0)) throw std::invalid_argument("nb spec: theta must be > 0");

  BookingTable table;
  table.source = "simulated";
  const std::int64_t base = spec.total_bookings / spec.n_months;
  const std::int64_t rem = spec.total_bookings % spec.n_months;

  for (int mi = 0; mi < spec.n_months; ++mi) {
    const std::int64_t ym = spec.start_ym + mi;
    const int year = int(ym / 12);
    const int month = int(ym % 12) + 1;
    const Date created(year, unsigned(month), 15);
    const Phase phase = assign_phase(created, spec.phases);
    const double mu = std::exp(spec.beta0 +
                               phase_offset(spec.beta_post, spec.beta_pre, phase) +
                               month_offset(spec.gamma_month, month));

    CounterRng rng(spec.seed, std::uint64_t(mi));
    const std::int64_t count = base + (mi < rem ? 1 : 0);
    std::map<long long, std::int64_t> counts;
    for (std::int64_t b = 0; b < count; ++b) ++counts[nb_draw(rng, mu, spec.theta)];

    for (const auto& [nights, weight] : counts) {
      BookingRecord r;
      r.nights = int(nights);
      r.weight = weight;
      r.created = created;
      r.phase = phase;
      r.month = month;
      table.records.push_back(r);
      table.total_weight += weight;
    }
    table.rows_read += count;
  }
  return table;
}

void validate(const SarimaSimSpec& spec) {
  if (!(std::abs(spec.theta) < 1.0 && std::abs(spec.Theta) < 1.0)) {
    throw std::invalid_argument("sarima spec: |theta| and |Theta| must be < 1");
  }
  if (spec.sigma2 < 0.0) throw std::invalid_argument("sarima spec: sigma2 must be >= 0");
  if (spec.n_months < 14) throw std::invalid_argument("sarima spec: need >= 14 months");
  if (spec.restr_start < 0 || spec.post_start < spec.restr_start ||
      spec.post_start > spec.n_months) {
    throw std::invalid_argument("sarima spec: phase starts must satisfy "
                                "0 <= restr_start <= post_start <= n_months");
  }
}

MonthlySeries simulate_sarima(const SarimaSimSpec& spec) {
  validate(spec);
  const int n = spec.n_months;
  const double sd = std::sqrt(spec.sigma2);

  // eps[i] is the innovation for month i-13; the first 13 are burn-in so the
  // MA(13) filter is fully warmed up at month 13.
  std::vector<double> eps(size_t(n) + 13);
  for (size_t i = 0; i < eps.size(); ++i) {
    CounterRng rng(spec.seed, std::uint64_t(i));
    eps[i] = sd * rng.normal();
  }
  auto e = [&](int t) { return eps[size_t(t + 13)]; };

  auto d_post = [&](int t) { return t >= spec.post_start ? 1.0 : 0.0; };
  auto d_pre = [&](int t) { return t < spec.restr_start ? 1.0 : 0.0; };

  MonthlySeries s;
  s.start_ym = spec.start_ym;
  s.values.resize(n);
  s.xreg.resize(n, 2);
  s.xreg_labels = {"post_vaccine", "pre_covid"};

  // Deterministic level-plus-seasonal initial conditions; everything the
  // model explains lives in the doubly-differenced remainder.
  for (int t = 0; t < 13 && t < n; ++t) {
    s.values(t) = spec.base_level + 0.3 * std::sin(2.0 * M_PI * t / 12.0);
  }
  for (int t = 13; t < n; ++t) {
    const double ma = e(t) - spec.theta * e(t - 1) - spec.Theta * e(t - 12) +
                      spec.theta * spec.Theta * e(t - 13);
    const double dx_post = d_post(t) - d_post(t - 1);
    const double dx_pre = d_pre(t) - d_pre(t - 1);
    const double w = ma + spec.beta_post * dx_post + spec.beta_pre * dx_pre;
    s.values(t) = s.values(t - 1) + s.values(t - 12) - s.values(t - 13) + w;
  }
  for (int t = 0; t < n; ++t) {
    s.xreg(t, 0) = d_post(t);
    s.xreg(t, 1) = d_pre(t);
  }
  return s;
}

namespace {

std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key, value, extra;
    if (!(ls >> key)) continue;
    if (!(ls >> value) || (ls >> extra)) {
      throw DataError("spec line " + std::to_string(line_no) +
                      ": expected 'key value'");
    }
    if (!kv.emplace(key, value).second) {
      throw DataError("spec: duplicate key '" + key + "'");
    }
  }
  return kv;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw DataError("spec: value of '" + key + "' is not a number: '" + v + "'");
  }
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x)) {
    throw DataError("spec: value of '" + key + "' is not an integer: '" + v + "'");
  }
  return std::int64_t(x);
}

// "YYYY-MM" to a months-since-year-zero index.
std::int64_t to_ym(const std::string& key, const std::string& v) {
  if (v.size() != 7 || v[4] != '-') {
    throw DataError("spec: value of '" + key + "' must look like YYYY-MM");
  }
  const Date d = parse_date(v + "-01");
  return d.ym_index();
}

using Setter = std::function<void(const std::string&, const std::string&)>;

void apply_kv(const std::map<std::string, std::string>& kv,
              std::map<std::string, Setter>& setters) {
  for (const auto& [key, value] : kv) {
    if (key == "kind") continue;
    const auto it = setters.find(key);
    if (it == setters.end()) throw DataError("spec: unknown key '" + key + "'");
    it->second(key, value);
  }
}

}  // namespace

std::string spec_kind(const std::string& text) {
  const auto kv = parse_kv(text);
  const auto it = kv.find("kind");
  if (it == kv.end()) throw DataError("spec: missing 'kind' (bookings or sarima)");
  if (it->second != "bookings" && it->second != "sarima") {
    throw DataError("spec: kind must be 'bookings' or 'sarima', got '" + it->second + "'");
  }
  return it->second;
}

BookingSimSpec parse_booking_spec(const std::string& text) {
  const auto kv = parse_kv(text);
  BookingSimSpec spec;
  std::map<std::string, Setter> set;
  auto num = [&](const char* k, double* slot) {
    set[k] = [slot](const std::string& key, const std::string& v) {
      *slot = to_double(key, v);
    };
  };
  num("short_mu", &spec.short_mu);
  num("short_sigma", &spec.short_sigma);
  num("beta_post", &spec.beta_post);
  num("beta_pre", &spec.beta_pre);
  num("alpha0", &spec.alpha0);
  num("alpha_post", &spec.alpha_post);
  num("alpha_pre", &spec.alpha_pre);
  num("zeta0", &spec.zeta0);
  num("zeta_post", &spec.zeta_post);
  num("zeta_pre", &spec.zeta_pre);
  num("theta", &spec.theta);
  for (int m = 0; m < 11; ++m) {
    num(("gamma_" + std::string(kMonthKeys[m])).c_str(), &spec.gamma_month[size_t(m)]);
    num(("alpha_" + std::string(kMonthKeys[m])).c_str(), &spec.alpha_month[size_t(m)]);
    num(("zeta_" + std::string(kMonthKeys[m])).c_str(), &spec.zeta_month[size_t(m)]);
  }
  set["start_ym"] = [&spec](const std::string& k, const std::string& v) {
    spec.start_ym = to_ym(k, v);
  };
  set["n_months"] = [&spec](const std::string& k, const std::string& v) {
    spec.n_months = int(to_int(k, v));
  };
  set["intensity"] = [&spec](const std::string& k, const std::string& v) {
    spec.intensity = to_int(k, v);
  };
  set["threshold"] = [&spec](const std::string& k, const std::string& v) {
    spec.threshold = int(to_int(k, v));
  };
  set["seed"] = [&spec](const std::string& k, const std::string& v) {
    spec.seed = std::uint64_t(to_int(k, v));
  };
  set["pre_end"] = [&spec](const std::string&, const std::string& v) {
    spec.phases.pre_end = parse_date(v);
  };
  set["restr_end"] = [&spec](const std::string&, const std::string& v) {
    spec.phases.restr_end = parse_date(v);
  };
  apply_kv(kv, set);
  validate(spec);
  return spec;
}

SarimaSimSpec parse_sarima_spec(const std::string& text) {
  const auto kv = parse_kv(text);
  SarimaSimSpec spec;
  std::map<std::string, Setter> set;
  auto num = [&](const char* k, double* slot) {
    set[k] = [slot](const std::string& key, const std::string& v) {
      *slot = to_double(key, v);
    };
  };
  num("theta", &spec.theta);
  num("seasonal_theta", &spec.Theta);
  num("beta_post", &spec.beta_post);
  num("beta_pre", &spec.beta_pre);
  num("sigma2", &spec.sigma2);
  num("base_level", &spec.base_level);
  set["n_months"] = [&spec](const std::string& k, const std::string& v) {
    spec.n_months = int(to_int(k, v));
  };
  set["start_ym"] = [&spec](const std::string& k, const std::string& v) {
    spec.start_ym = to_ym(k, v);
  };
  set["restr_start"] = [&spec](const std::string& k, const std::string& v) {
    spec.restr_start = int(to_int(k, v));
  };
  set["post_start"] = [&spec](const std::string& k, const std::string& v) {
    spec.post_start = int(to_int(k, v));
  };
  set["seed"] = [&spec](const std::string& k, const std::string& v) {
    spec.seed = std::uint64_t(to_int(k, v));
  };
  apply_kv(kv, set);
  validate(spec);
  return spec;
}

}  // namespace npb
