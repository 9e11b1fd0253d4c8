#pragma once

#include <Eigen/Core>

#include <vector>

#include "npb/glm.hpp"
#include "npb/ingest.hpp"

namespace npb {

// Two-part long-stay model: logistic for Pr(y >= threshold) on all rows,
// NB for E[y | y >= threshold] on the long subset (untruncated likelihood,
// mirroring the conditioned-GLM formulation it reproduces).
struct HurdleFit {
  GlmFit logit_part;
  GlmFit nb_part;
  int threshold = 28;
  // Booking mass per (phase, month) cell, used to average cell predictions
  // into per-phase report numbers.
  Eigen::Matrix<double, 3, 12> month_mass;
};

// Throws if the table has no long stays or the logistic response is
// single-class.
HurdleFit fit_hurdle(const BookingTable& table, int threshold = 28);

// Inverse-logit of the cell's linear predictor.
double prevalence(const HurdleFit& fit, Phase phase, int month);

// exp of the NB part's linear predictor for the cell.
double conditional_mean(const HurdleFit& fit, Phase phase, int month);

struct ImpactRow {
  Phase phase;
  double prevalence;        // month-weighted average of cell prevalences
  double conditional_mean;  // month-weighted average of cell means
  double contribution;      // prevalence * conditional_mean
  double excess_vs_ref;     // contribution minus the reference phase's
};

// Phase-level decomposition. Per-phase numbers are month-weighted averages
// of cell predictions with weights equal to the booking mass observed in
// each month of that phase.
std::vector<ImpactRow> combined_impact(const HurdleFit& fit,
                                       Phase reference = Phase::PreCovid);

// Same arithmetic from bare (prevalence, conditional_mean) pairs, one per
// phase in Phase order; lets report code and tests feed published numbers
// straight through.
std::vector<ImpactRow> impact_rows_from(
    const std::vector<std::pair<double, double>>& components, int reference_index);

struct EmpiricalDecomposition {
  double total_mean;        // weighted mean of y over the table
  double long_share;        // weight fraction with y >= threshold
  double long_mean;         // weighted mean of y on that subset
  double short_mean;        // weighted mean of y below the threshold
};

// total_mean == long_share*long_mean + (1-long_share)*short_mean holds to
// machine precision by construction; exposed so tests can assert it.
EmpiricalDecomposition empirical_decomposition(const BookingTable& table,
                                               int threshold = 28);

}  // namespace npb
