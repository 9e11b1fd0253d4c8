#include <doctest.h>

#include <cmath>
#include <set>

#include "npb/errors.hpp"
#include "npb/sarima.hpp"
#include "npb/simgen.hpp"

using namespace npb;

TEST_CASE("spec files parse key-value lines with comments") {
  const std::string text =
      "# synthetic bookings\n"
      "kind bookings\n"
      "\n"
      "alpha0 -3.0\n"
      "zeta_post -0.25\n"
      "gamma_jul 0.12\n"
      "intensity 500\n"
      "start_ym 2020-02\n"
      "threshold 30\n"
      "seed 9\n"
      "pre_end 2020-04-01\n";
  CHECK(spec_kind(text) == "bookings");
  const BookingSimSpec spec = parse_booking_spec(text);
  CHECK(spec.alpha0 == -3.0);
  CHECK(spec.zeta_post == -0.25);
  CHECK(spec.gamma_month[5] == 0.12);  // July is the 6th of February..December
  CHECK(spec.intensity == 500);
  CHECK(spec.start_ym == 2020 * 12 + 1);
  CHECK(spec.threshold == 30);
  CHECK(spec.seed == 9);
  CHECK(spec.phases.pre_end == Date(2020, 4, 1));
  // untouched keys keep defaults
  CHECK(spec.short_mu == 1.0);
  CHECK(spec.n_months == 72);
}

TEST_CASE("sarima spec parsing") {
  const std::string text =
      "kind sarima\n"
      "theta -0.5\n"
      "seasonal_theta -0.8\n"
      "sigma2 0.04\n"
      "n_months 120\n"
      "beta_pre -1.0\n"
      "restr_start 10\n";
  CHECK(spec_kind(text) == "sarima");
  const SarimaSimSpec spec = parse_sarima_spec(text);
  CHECK(spec.theta == -0.5);
  CHECK(spec.Theta == -0.8);
  CHECK(spec.sigma2 == 0.04);
  CHECK(spec.n_months == 120);
  CHECK(spec.beta_pre == -1.0);
  CHECK(spec.restr_start == 10);
  CHECK(spec.post_start == 29);
}

TEST_CASE("malformed specs are rejected with the offending key") {
  CHECK_THROWS_AS((void)spec_kind("alpha0 1\n"), DataError);           // no kind
  CHECK_THROWS_AS((void)spec_kind("kind metropolis\n"), DataError);    // bad kind
  CHECK_THROWS_WITH_AS((void)parse_booking_spec("kind bookings\nbogus 3\n"),
                       doctest::Contains("bogus"), DataError);
  CHECK_THROWS_WITH_AS((void)parse_booking_spec("kind bookings\nalpha0 x\n"),
                       doctest::Contains("alpha0"), DataError);
  CHECK_THROWS_AS((void)parse_booking_spec("kind bookings\nalpha0 1 2\n"),
                  DataError);  // extra token
  CHECK_THROWS_AS(
      (void)parse_booking_spec("kind bookings\nseed 1\nseed 2\n"),
      DataError);  // duplicate
  CHECK_THROWS_AS((void)parse_booking_spec("kind bookings\nstart_ym 2020-3\n"),
                  DataError);  // month must be zero-padded YYYY-MM
  CHECK_THROWS_AS((void)parse_booking_spec("kind bookings\nintensity 2.5\n"),
                  DataError);  // non-integer count
}

TEST_CASE("booking simulation is deterministic and respects support bounds") {
  BookingSimSpec spec;
  spec.intensity = 400;
  spec.n_months = 24;
  spec.seed = 3;
  const BookingTable a = simulate_bookings(spec);
  const BookingTable b = simulate_bookings(spec);
  REQUIRE(a.records.size() == b.records.size());
  CHECK(a.total_weight == b.total_weight);
  for (size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].nights == b.records[i].nights);
    CHECK(a.records[i].weight == b.records[i].weight);
    CHECK(a.records[i].created == b.records[i].created);
  }

  std::int64_t weight_sum = 0;
  for (const auto& r : a.records) {
    CHECK(r.nights >= 1);
    CHECK(r.nights <= 180);
    CHECK(r.created.day() == 15);  // all bookings sit on the 15th
    weight_sum += r.weight;
  }
  CHECK(weight_sum == a.total_weight);
  CHECK(a.total_weight == std::int64_t(spec.intensity) * spec.n_months);

  BookingSimSpec other = spec;
  other.seed = 4;
  const BookingTable c = simulate_bookings(other);
  bool distinct = c.records.size() != a.records.size();
  for (size_t i = 0; !distinct && i < a.records.size(); ++i) {
    distinct = a.records[i].nights != c.records[i].nights ||
               a.records[i].weight != c.records[i].weight;
  }
  CHECK(distinct);
}

TEST_CASE("gate prevalence and long-stay mean match the planted predictors") {
  BookingSimSpec spec;
  spec.intensity = 20000;
  spec.n_months = 12;  // all pre-covid months, January..December 2019
  spec.alpha0 = -2.0;
  spec.alpha_pre = 0.0;
  spec.zeta0 = 3.8;
  spec.seed = 6;
  // zero out month effects so every month shares the same cell values
  spec.gamma_month.fill(0.0);
  spec.alpha_month.fill(0.0);
  spec.zeta_month.fill(0.0);
  const BookingTable t = simulate_bookings(spec);

  double w_long = 0.0, w_all = 0.0, long_nights = 0.0;
  for (const auto& r : t.records) {
    const double w = double(r.weight);
    w_all += w;
    if (r.nights >= spec.threshold) {
      w_long += w;
      long_nights += w * r.nights;
    }
  }
  const double prevalence = w_long / w_all;
  const double want_prev = 1.0 / (1.0 + std::exp(-spec.alpha0));
  // binomial SE with n = 240000 draws
  const double se_prev = std::sqrt(want_prev * (1.0 - want_prev) / w_all);
  CHECK(std::abs(prevalence - want_prev) < 4.0 * se_prev);

  // conditional mean of the long part: exp(zeta0), clamping bias at 180 is
  // tiny for these values but the tolerance allows for it
  const double long_mean = long_nights / w_long;
  CHECK(long_mean == doctest::Approx(std::exp(spec.zeta0)).epsilon(0.02));
}

TEST_CASE("short-stay lengths stay strictly below the threshold") {
  BookingSimSpec spec;
  spec.intensity = 5000;
  spec.n_months = 6;
  spec.alpha0 = -40.0;  // gate effectively closed: everything is short
  spec.seed = 10;
  const BookingTable t = simulate_bookings(spec);
  for (const auto& r : t.records) {
    CHECK(r.nights >= 1);
    CHECK(r.nights < spec.threshold);
  }
}

TEST_CASE("booking spec validation") {
  BookingSimSpec spec;
  spec.zeta0 = std::log(10.0);  // conditional mean below the threshold
  CHECK_THROWS_AS((void)simulate_bookings(spec), std::invalid_argument);

  BookingSimSpec neg = {};
  neg.intensity = 0;
  CHECK_THROWS_AS((void)simulate_bookings(neg), std::invalid_argument);

  BookingSimSpec bad_sigma = {};
  bad_sigma.short_sigma = -0.1;
  CHECK_THROWS_AS((void)simulate_bookings(bad_sigma), std::invalid_argument);
}

TEST_CASE("NB-GLM sampler hits its planted moments") {
  NbGlmSimSpec spec;
  spec.beta0 = 1.3;
  spec.beta_post = -0.07;
  spec.theta = 1.5;
  spec.total_bookings = 200000;
  spec.seed = 2;
  spec.gamma_month.fill(0.0);
  const BookingTable t = simulate_nb_glm(spec);

  // restriction-phase cells have mean exp(beta0), variance mu + mu^2/theta
  double sw = 0.0, sy = 0.0, syy = 0.0;
  for (const auto& r : t.records) {
    if (r.phase != Phase::Restriction) continue;
    const double w = double(r.weight);
    sw += w;
    sy += w * r.nights;
    syy += w * double(r.nights) * double(r.nights);
  }
  REQUIRE(sw > 10000.0);
  const double mu = std::exp(spec.beta0);
  const double mean = sy / sw;
  const double var = syy / sw - mean * mean;
  const double want_var = mu + mu * mu / spec.theta;
  CHECK(mean == doctest::Approx(mu).epsilon(0.02));
  CHECK(var == doctest::Approx(want_var).epsilon(0.06));
}

TEST_CASE("seasonal simulator reproduces the MA autocorrelation signature") {
  SarimaSimSpec spec;
  spec.theta = -0.76;
  spec.Theta = -0.9;
  spec.sigma2 = 0.066;
  spec.n_months = 288;
  spec.seed = 21;
  const MonthlySeries s = simulate_sarima(spec);
  REQUIRE(s.values.size() == 288);
  REQUIRE(s.xreg.rows() == 288);

  // With zero betas the doubly-differenced series is the pure MA(1)x(1)_12:
  // lag-1 ACF = -theta/(1+theta^2), lag-12 ACF = -Theta/(1+Theta^2).
  const Eigen::VectorXd z = difference(s.values, 1, 1, 12);
  const int n = int(z.size());
  const double mean = z.mean();
  auto acf = [&](int lag) {
    double num = 0.0, den = 0.0;
    for (int t = 0; t < n; ++t) {
      den += (z(t) - mean) * (z(t) - mean);
      if (t + lag < n) num += (z(t) - mean) * (z(t + lag) - mean);
    }
    return num / den;
  };
  const double band = 3.0 / std::sqrt(double(n));
  CHECK(std::abs(acf(1) - 0.48174442190669371) < band);
  CHECK(std::abs(acf(12) - 0.49723756906077354) < band);
  // cross lag (1 + 12 interplay): ACF at lag 13 = (theta*Theta)/((1+theta^2)(1+Theta^2))
  const double want13 = (spec.theta * spec.Theta) /
                        ((1.0 + spec.theta * spec.theta) * (1.0 + spec.Theta * spec.Theta));
  CHECK(std::abs(acf(13) - want13) < band);
  // a lag with zero true correlation stays inside the band
  CHECK(std::abs(acf(6)) < band);
}

TEST_CASE("seasonal simulator injects dummy effects on the differenced scale") {
  // Contract: the doubly-differenced response equals beta' * first-differenced
  // dummies plus the MA noise. With near-zero noise the pulses are visible
  // exactly where the phases switch.
  SarimaSimSpec spec;
  spec.beta_pre = -1.2;
  spec.beta_post = 0.4;
  spec.sigma2 = 1e-18;  // effectively deterministic
  spec.n_months = 72;
  spec.seed = 1;
  const MonthlySeries s = simulate_sarima(spec);

  const Eigen::VectorXd z = difference(s.values, 1, 1, 12);
  REQUIRE(z.size() == 72 - 13);
  for (int i = 0; i < z.size(); ++i) {
    const int t = i + 13;  // month index of z(i)
    double want = 0.0;
    if (t == spec.restr_start) want = -spec.beta_pre;  // pre dummy drops 1 -> 0
    if (t == spec.post_start) want = spec.beta_post;   // post dummy rises 0 -> 1
    CHECK(z(i) == doctest::Approx(want).scale(1.0).epsilon(1e-6));
  }

  // xreg columns reproduce the phase windows
  for (int t = 0; t < 72; ++t) {
    CHECK(s.xreg(t, 0) == (t >= spec.post_start ? 1.0 : 0.0));
    CHECK(s.xreg(t, 1) == (t < spec.restr_start ? 1.0 : 0.0));
  }

  CHECK_THROWS_AS([&] {
    SarimaSimSpec bad = spec;
    bad.sigma2 = -1.0;
    (void)simulate_sarima(bad);
  }(), std::invalid_argument);
  CHECK_THROWS_AS([&] {
    SarimaSimSpec bad = spec;
    bad.restr_start = 60;
    bad.post_start = 50;  // phases out of order
    (void)simulate_sarima(bad);
  }(), std::invalid_argument);
}
