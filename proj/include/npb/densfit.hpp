#pragma once

#include <string>
#include <vector>

#include "npb/ingest.hpp"
#include "npb/wstats.hpp"

namespace npb {

enum class FamilyKind { LogNormal, Gamma, PoissonLogNormal };

const char* family_name(FamilyKind k);

// Two-parameter family value. For LogNormal and PoissonLogNormal the slots
// are (mu, sigma); for Gamma they are (shape k, rate lambda).
struct DensityFamily {
  FamilyKind kind;
  double p1 = 0.0;
  double p2 = 1.0;
};

struct DensityFit {
  DensityFamily family;
  double loglik = 0.0;  // weighted, Σ w_i log f(y_i)
  double aic = 0.0;     // 2k - 2*loglik, k = 2 for all three families
  double bic = 0.0;     // k*ln(n_eff) - 2*loglik
  double n_eff = 0.0;   // Σ w_i
  bool converged = false;
  int iterations = 0;
};

// log f(y) for the continuous families evaluated at the integer point
// (no continuity correction); log pmf for PLN.
double log_density(const DensityFamily& fam, double y);

// log of ∫ Poisson(k; e^{mu+sigma z}) φ(z) dz. Mode-centered Gauss-Hermite,
// nodes doubled from 40 until successive estimates differ by < 1e-9;
// absolute error < 1e-8 for k <= 200, sigma <= 3. Falls back to adaptive
// Simpson integration for sigma > 3.
double pln_log_pmf(long long k, double mu, double sigma);

// Σ w_i log f(y_i | family). Throws if the density is non-finite at any
// support point, naming the point.
double weighted_loglik(const DensityFamily& fam, const BookingTable& table);

// Weighted MLE. Log-normal and Gamma start from weighted moment matching and
// run bounded quasi-Newton in (p1, log p2) space; PLN runs Nelder-Mead.
// Throws DataError on degenerate data (all y identical) for the continuous
// families.
DensityFit fit_weighted(FamilyKind kind, const BookingTable& table);

// Closed-form weighted log-moment solution for the log-normal, used to
// cross-check the numerical path.
DensityFamily lognormal_closed_form(const BookingTable& table);

struct RankedFit {
  DensityFit fit;
  double delta_aic = 0.0;  // vs the best
};

// Ascending AIC, ties broken by BIC then input order. All fits must share
// n_eff (same table).
std::vector<RankedFit> rank_models(const std::vector<DensityFit>& fits);

struct OverlayPoint {
  double y;
  double ecdf;
  double fitted_cdf;
};

// One point per distinct y: weighted ECDF vs fitted CDF. PLN uses the pmf
// cumulated from 0; continuous families use their exact CDF.
std::vector<OverlayPoint> overlay_points(const DensityFit& fit, const BookingTable& table);

}  // namespace npb
