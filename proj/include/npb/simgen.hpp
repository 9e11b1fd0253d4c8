#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "npb/ingest.hpp"
#include "npb/sarima.hpp"

namespace npb {

// Ground-truth booking generator. Stay lengths follow the two-part process
// the estimators assume: a logit gate at `threshold`, a shifted negative
// binomial above it (support starts at the threshold, conditional mean
// exactly exp of the cell's zeta predictor), and a discretized log-normal
// truncated to [1, threshold-1] below it. Linear predictors use the same
// phase/month dummy coding as the fitted models.
struct BookingSimSpec {
  std::int64_t start_ym = 2019 * 12 + 0;  // January 2019
  int n_months = 72;

  // short-stay log-normal location offsets (log scale)
  double short_mu = 1.0;
  double short_sigma = 0.6;
  double beta_post = 0.0;
  double beta_pre = 0.0;
  std::array<double, 11> gamma_month{};  // February..December

  // long-stay gate, logit scale
  double alpha0 = -3.5;
  double alpha_post = 0.0;
  double alpha_pre = 0.0;
  std::array<double, 11> alpha_month{};

  // long-stay conditional mean, log scale
  double zeta0 = 3.75;
  double zeta_post = 0.0;
  double zeta_pre = 0.0;
  std::array<double, 11> zeta_month{};
  double theta = 2.0;  // NB dispersion of the long part

  std::int64_t intensity = 1000;  // bookings per month
  int threshold = 28;
  std::uint64_t seed = 1;
  PhaseBoundaries phases;
};

void validate(const BookingSimSpec& spec);

// Bookings are created on the 15th of their month, so every booking in a
// month shares one phase under the default boundaries. Lengths are clamped
// to [1, 180] and collapsed to weighted rows. Months draw from independent
// streams keyed by (seed, month index), so the table is reproducible and
// order-independent.
BookingTable simulate_bookings(const BookingSimSpec& spec);

// Plain NB-GLM sampler: y ~ NegBin(mean = exp(x'beta), theta) with the
// phase/month design, no gate and no clamping. Used to exercise the count
// regression on data that exactly matches its likelihood.
struct NbGlmSimSpec {
  std::int64_t start_ym = 2019 * 12 + 0;
  int n_months = 72;
  double beta0 = 1.3;
  double beta_post = 0.0;
  double beta_pre = 0.0;
  std::array<double, 11> gamma_month{};
  double theta = 1.5;
  std::int64_t total_bookings = 100000;  // spread evenly over months
  std::uint64_t seed = 1;
  PhaseBoundaries phases;
};

BookingTable simulate_nb_glm(const NbGlmSimSpec& spec);

// Seasonal MA simulator matching the fitted equation: the doubly-differenced
// response equals beta' * first-differenced dummies plus
// (1 - theta B)(1 - Theta B^12) eps_t, integrated back from fixed initial
// conditions.
struct SarimaSimSpec {
  double theta = -0.76;
  double Theta = -0.9;
  double beta_post = 0.0;
  double beta_pre = 0.0;
  double sigma2 = 0.066;
  int n_months = 72;
  std::int64_t start_ym = 2019 * 12 + 0;
  // 0-based month offsets where Restriction and PostVaccine begin. Defaults
  // line up with the default PhaseBoundaries under the month-of-the-15th
  // rule: 2020-03 and 2021-06 counted from 2019-01.
  int restr_start = 14;
  int post_start = 29;
  double base_level = 3.7;
  std::uint64_t seed = 1;
};

void validate(const SarimaSimSpec& spec);

MonthlySeries simulate_sarima(const SarimaSimSpec& spec);

// Key-value spec files for the CLI (`kind: bookings|sarima`, one `key value`
// pair per line, '#' comments).
BookingSimSpec parse_booking_spec(const std::string& text);
SarimaSimSpec parse_sarima_spec(const std::string& text);
std::string spec_kind(const std::string& text);  // "bookings" or "sarima"

}  // namespace npb
