#include <doctest.h>

#include <cmath>
#include <vector>

#include "npb/errors.hpp"
#include "npb/hurdle.hpp"
#include "npb/ingest.hpp"
#include "npb/rng.hpp"
#include "npb/simgen.hpp"

using namespace npb;

namespace {

BookingRecord rec(int nights, std::int64_t w, Phase ph, int month) {
  BookingRecord r;
  r.nights = nights;
  r.weight = w;
  const int year = ph == Phase::PreCovid ? 2019 : (ph == Phase::Restriction ? 2020 : 2022);
  r.created = Date(year, unsigned(month), 15);
  r.phase = ph;
  r.month = month;
  return r;
}

BookingTable mixed_table(std::uint64_t seed, int n) {
  CounterRng rng(seed, 0);
  BookingTable t;
  for (int i = 0; i < n; ++i) {
    const Phase ph = Phase(int(rng.uniform() * 3.0));
    const int month = 1 + int(rng.uniform() * 12.0);
    const bool is_long = rng.uniform() < (ph == Phase::PostVaccine ? 0.25 : 0.10);
    const int nights =
        is_long ? 28 + int(rng.uniform() * 60.0) : 1 + int(rng.uniform() * 20.0);
    t.records.push_back(rec(nights, 1 + std::int64_t(rng.uniform() * 3.0), ph, month));
    t.total_weight += t.records.back().weight;
  }
  t.rows_read = n;
  return t;
}

}  // namespace

TEST_CASE("hurdle parts see the right responses") {
  const BookingTable t = mixed_table(31, 4000);
  const HurdleFit fit = fit_hurdle(t, 28);
  REQUIRE(fit.logit_part.converged);
  REQUIRE(fit.nb_part.converged);
  CHECK(fit.threshold == 28);

  // gate: recompute the weighted long-share and compare to an
  // all-restriction-january cell-free aggregate check via prevalence bounds
  double w_long = 0.0, w_all = 0.0;
  for (const auto& r : t.records) {
    w_all += double(r.weight);
    if (r.nights >= 28) w_long += double(r.weight);
  }
  const double share = w_long / w_all;
  // prevalence at every cell should straddle the overall share direction-wise
  double lo = 1.0, hi = 0.0;
  for (int ph = 0; ph < 3; ++ph) {
    for (int m = 1; m <= 12; ++m) {
      const double p = prevalence(fit, Phase(ph), m);
      lo = std::min(lo, p);
      hi = std::max(hi, p);
      CHECK(p > 0.0);
      CHECK(p < 1.0);
      CHECK(conditional_mean(fit, Phase(ph), m) >= 1.0);
    }
  }
  CHECK(lo < share);
  CHECK(hi > share);

  // month_mass totals the table weight
  CHECK(fit.month_mass.sum() == doctest::Approx(double(t.total_weight)).epsilon(1e-12));
}

TEST_CASE("contribution equals prevalence times conditional mean") {
  const BookingTable t = mixed_table(7, 3000);
  const HurdleFit fit = fit_hurdle(t, 28);
  const auto rows = combined_impact(fit, Phase::PreCovid);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].phase == Phase::PreCovid);
  CHECK(rows[1].phase == Phase::Restriction);
  CHECK(rows[2].phase == Phase::PostVaccine);
  for (const auto& row : rows) {
    CHECK(row.contribution ==
          doctest::Approx(row.prevalence * row.conditional_mean).epsilon(1e-12));
    CHECK(row.excess_vs_ref ==
          doctest::Approx(row.contribution - rows[0].contribution).epsilon(1e-12));
  }
  CHECK(rows[0].excess_vs_ref == 0.0);

  // the reference can be any phase
  const auto alt = combined_impact(fit, Phase::Restriction);
  CHECK(alt[1].excess_vs_ref == 0.0);
  CHECK(alt[0].excess_vs_ref ==
        doctest::Approx(alt[0].contribution - alt[1].contribution).epsilon(1e-12));
}

TEST_CASE("impact rows reproduce hand-computed phase arithmetic") {
  // (prevalence, conditional mean) per phase in Phase order
  const auto rows = impact_rows_from(
      {{0.015, 45.8}, {0.022, 45.8}, {0.029, 42.6}}, 0);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].contribution == doctest::Approx(0.687).epsilon(1e-12));
  CHECK(rows[1].contribution == doctest::Approx(1.0076).epsilon(1e-12));
  CHECK(rows[2].contribution == doctest::Approx(1.2354).epsilon(1e-12));
  CHECK(rows[2].excess_vs_ref == doctest::Approx(0.5484).epsilon(1e-12));
  CHECK(rows[1].excess_vs_ref == doctest::Approx(0.3206).epsilon(1e-12));

  // a lone component is its own reference
  const auto solo = impact_rows_from({{0.1, 2.0}}, 0);
  REQUIRE(solo.size() == 1);
  CHECK(solo[0].excess_vs_ref == 0.0);
  CHECK_THROWS_AS((void)impact_rows_from({{0.1, 2.0}, {0.2, 3.0}, {0.3, 4.0}}, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)impact_rows_from({{0.1, 2.0}, {0.2, 3.0}}, -1),
                  std::invalid_argument);
}

TEST_CASE("empirical decomposition identity holds to machine precision") {
  CounterRng rng(77, 1);
  for (int repcase = 0; repcase < 20; ++repcase) {
    BookingTable t;
    const int n = 50 + int(rng.uniform() * 200.0);
    bool any_long = false, any_short = false;
    for (int i = 0; i < n; ++i) {
      const int nights = 1 + int(rng.uniform() * 90.0);
      any_long = any_long || nights >= 28;
      any_short = any_short || nights < 28;
      t.records.push_back(rec(nights, 1 + std::int64_t(rng.uniform() * 10.0),
                              Phase(int(rng.uniform() * 3.0)),
                              1 + int(rng.uniform() * 12.0)));
      t.total_weight += t.records.back().weight;
    }
    if (!any_long || !any_short) continue;

    const EmpiricalDecomposition d = empirical_decomposition(t, 28);
    CHECK(d.total_mean ==
          doctest::Approx(d.long_share * d.long_mean +
                          (1.0 - d.long_share) * d.short_mean).epsilon(1e-12));
    CHECK(d.long_share > 0.0);
    CHECK(d.long_share < 1.0);
    CHECK(d.long_mean >= 28.0);
    CHECK(d.short_mean < 28.0);
  }
}

TEST_CASE("simulated hurdle data round-trips the planted effects") {
  BookingSimSpec spec;
  spec.intensity = 3000.0;
  spec.seed = 23;
  const BookingTable t = simulate_bookings(spec);
  const HurdleFit fit = fit_hurdle(t, spec.threshold);
  REQUIRE(fit.logit_part.converged);
  REQUIRE(fit.nb_part.converged);

  // gate coefficients within 3 SE of the planted alphas
  const auto& lg = fit.logit_part;
  CHECK(std::abs(lg.coefficients(0) - spec.alpha0) <
        3.0 * std::sqrt(lg.covariance(0, 0)));
  CHECK(std::abs(lg.coefficients(1) - spec.alpha_post) <
        3.0 * std::sqrt(lg.covariance(1, 1)));
  CHECK(std::abs(lg.coefficients(2) - spec.alpha_pre) <
        3.0 * std::sqrt(lg.covariance(2, 2)));

  // conditional-mean intercept: planted exp(zeta0) for the long part
  const auto& nb = fit.nb_part;
  CHECK(std::abs(nb.coefficients(0) - spec.zeta0) <
        3.0 * std::sqrt(nb.covariance(0, 0)) + 0.02);
}

TEST_CASE("degenerate hurdles are rejected") {
  // no long stays at all
  BookingTable shorts;
  for (int i = 0; i < 108; ++i) {
    shorts.records.push_back(
        rec(1 + i % 10, 1, Phase((i / 12) % 3), 1 + (i % 12)));
    shorts.total_weight += 1;
  }
  CHECK_THROWS_AS((void)fit_hurdle(shorts, 28), DataError);

  // all long stays: the gate has a single class
  BookingTable longs;
  for (int i = 0; i < 108; ++i) {
    longs.records.push_back(
        rec(30 + i % 10, 1, Phase((i / 12) % 3), 1 + (i % 12)));
    longs.total_weight += 1;
  }
  CHECK_THROWS_AS((void)fit_hurdle(longs, 28), DataError);

  CHECK_THROWS_AS((void)fit_hurdle(mixed_table(1, 500), 1), std::invalid_argument);
}
