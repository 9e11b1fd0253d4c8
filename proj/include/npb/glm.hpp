#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "npb/ingest.hpp"

namespace npb {

// Rows aligned to a BookingTable: intercept, post/pre phase dummies
// (Restriction baseline), eleven month dummies (January reference).
struct DesignMatrix {
  Eigen::MatrixXd X;
  std::vector<std::string> labels;
};

DesignMatrix build_design(const BookingTable& table);

// Single design row for a (phase, month) cell under the same coding.
Eigen::VectorXd design_row(Phase phase, int month);

enum class GlmFamily { NegBin, Logistic };

struct GlmFit {
  GlmFamily family = GlmFamily::NegBin;
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;  // inverse weighted Fisher information
  std::vector<std::string> labels;
  double theta = 0.0;  // NB dispersion; unused for logistic
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Weighted IRLS. NB uses a log link with theta profiled by golden-section
// on log(theta), alternating with IRLS until the joint change is below 1e-8.
// Logistic expects y in {0,1}. Weights are frequency weights. Throws on a
// rank-deficient design, naming the collinear columns; separation or hitting
// the iteration cap returns converged=false.
GlmFit fit_weighted_glm(const DesignMatrix& design, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w, GlmFamily family);

// NB fit with the dispersion held fixed instead of profiled. With a huge
// theta this collapses to the weighted Poisson GLM.
GlmFit fit_weighted_nb_fixed_theta(const DesignMatrix& design, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& w, double theta);

struct RateRatioRow {
  std::string label;
  double ratio;    // exp(coef): IRR for NB, OR for logistic
  double ci_low;   // exp(coef - 1.96*se)
  double ci_high;  // exp(coef + 1.96*se)
};

std::vector<RateRatioRow> rate_ratios(const GlmFit& fit);

// Fitted exp(x'beta) per row, aggregated to weighted monthly means for the
// observed-vs-predicted overlay.
struct MonthlyPrediction {
  std::int64_t ym_index;
  int year;
  int month;
  double observed;
  double predicted;
  std::int64_t total_weight;
};

std::vector<MonthlyPrediction> predict_monthly_mean(const GlmFit& fit,
                                                    const BookingTable& table);

}  // namespace npb
