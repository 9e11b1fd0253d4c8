#pragma once

#include <Eigen/Core>

#include <vector>

#include "npb/ingest.hpp"

namespace npb {

// Values with positive weights, equal length. Weights are booking counts in
// the main pipeline but any positive reals are accepted.
struct WeightedSample {
  Eigen::VectorXd values;
  Eigen::VectorXd weights;
};

WeightedSample to_weighted_sample(const BookingTable& table);

void validate(const WeightedSample& s);

double weighted_mean(const WeightedSample& s);

// Population form Σw(y-ȳ)²/Σw, matching the frequency-weight reading of the
// weights; no Bessel correction.
double weighted_variance(const WeightedSample& s);

double weighted_sd(const WeightedSample& s);

// Left inverse of the right-continuous weighted ECDF:
// inf{ y : F_w(y) >= p }, 0 < p <= 1. For integer weights this equals the
// order statistic ceil(p*N) of the weight-expanded sample.
double weighted_quantile(const WeightedSample& s, double p);

struct PhaseDescriptives {
  Phase phase;
  double mean = 0.0;
  double median = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
  double sd = 0.0;
  std::int64_t total_weight = 0;
};

// Per-phase summary rows in Phase order; phases with no weight are omitted.
std::vector<PhaseDescriptives> phase_descriptives(const BookingTable& table);

}  // namespace npb
