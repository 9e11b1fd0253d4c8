#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "npb/ingest.hpp"

namespace npb {

// Monthly mean-stay series with optional undifferenced phase-dummy columns
// (post, pre). Months must be contiguous.
struct MonthlySeries {
  Eigen::VectorXd values;
  std::int64_t start_ym = 0;  // ym_index of values[0]
  Eigen::MatrixXd xreg;       // n x 2 (post, pre) or empty
  std::vector<std::string> xreg_labels;
};

// Builds the series from monthly aggregates. A month belongs to the phase of
// its 15th day, which keeps the default boundaries aligned with whole months.
// Throws on calendar gaps.
MonthlySeries make_monthly_series(const std::vector<MonthlyPoint>& points,
                                  const PhaseBoundaries& b = {});

// (1-B)^d (1-B^s)^D applied in sequence; output length n - d - D*s.
Eigen::VectorXd difference(const Eigen::VectorXd& x, int d, int D, int s);

struct SarimaParams {
  double theta = 0.0;   // MA(1) coefficient in (1 - theta B)
  double Theta = 0.0;   // seasonal MA coefficient in (1 - Theta B^12)
  Eigen::VectorXd beta; // regression coefficients on differenced xreg
  double sigma2 = 1.0;
};

// Exact Gaussian log-likelihood of z under the MA(1)x SMA(12) innovation
// model, via the innovations algorithm on the band-limited MA(13)
// autocovariance. Also exposes the one-step errors and their scaled
// variances v_t (Var e_t = sigma2 * v_t) for residual work.
struct Innovations {
  Eigen::VectorXd e;  // one-step prediction errors
  Eigen::VectorXd v;  // relative variances, v_t >= 1
  double loglik = 0.0;
};

Innovations ma_innovations(const Eigen::VectorXd& z, double theta, double Theta,
                           double sigma2);

double ma_loglik(const Eigen::VectorXd& z, double theta, double Theta, double sigma2);

// Applies (1-B)(1-B^12) to the response and (1-B) to the dummies (they are
// step functions, so the seasonal difference would annihilate them), then
// evaluates the regression-with-MA-errors likelihood.
double exact_loglik(const SarimaParams& params, const MonthlySeries& series);

struct SarimaFit {
  double ma1 = 0.0;
  double sma12 = 0.0;
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
  Eigen::VectorXd se;  // (ma1, sma12, beta...) from the profile Hessian
  std::vector<std::string> labels;
  double loglik = 0.0;
  double aic = 0.0;   // k counts sigma2
  double aicc = 0.0;
  double bic = 0.0;
  int k = 0;
  int n_diff = 0;              // doubly-differenced length
  Eigen::VectorXd residuals;   // e_t / sqrt(v_t), constant variance sigma2
  bool converged = false;
  bool boundary_warning = false;  // |sma12| ended within 1e-3 of the unit circle
};

// Maximizes exact_loglik over (theta, Theta) by Nelder-Mead in atanh
// coordinates with beta solved by generalized least squares and sigma2
// concentrated out. include_xreg=false drops the dummies (the null model of
// the likelihood-ratio comparison).
SarimaFit fit_sarima(const MonthlySeries& series, bool include_xreg);

struct LrTest {
  double statistic;  // 2 (l_full - l_null)
  int dof;           // parameter-count difference
  double p_value;    // chi-squared upper tail
};

// Throws if the models are not nested (l_full < l_null or k_full <= k_null).
LrTest lr_test(const SarimaFit& full, const SarimaFit& null_fit);

struct LjungBox {
  double statistic;
  int dof;
  double p_value;
};

// Q = n(n+2) Σ_{k=1..L} ρ̂_k² / (n-k), dof = L - fitdf.
LjungBox ljung_box(const Eigen::VectorXd& residuals, int max_lag, int fitdf);

struct DiagnosticsReport {
  Eigen::VectorXd acf;     // lags 1..24
  double acf_bound = 0.0;  // 1.96 / sqrt(n)
  std::vector<LjungBox> lb;  // lags {12, 24}, fitdf 2
  std::vector<double> hist_edges;
  std::vector<int> hist_counts;
};

DiagnosticsReport residual_diagnostics(const SarimaFit& fit);

}  // namespace npb
