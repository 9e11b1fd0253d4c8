#include "npb/densfit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "npb/accum.hpp"
#include "npb/errors.hpp"
#include "npb/optim.hpp"
#include "npb/special.hpp"

namespace npb {

const char* family_name(FamilyKind k) {
  switch (k) {
    case FamilyKind::LogNormal: return "lognormal";
    case FamilyKind::Gamma: return "gamma";
    case FamilyKind::PoissonLogNormal: return "pln";
  }
  return "unknown";
}

namespace {

constexpr double log_2pi = 1.8378770664093453;

double lognormal_logpdf(double y, double mu, double sigma) {
  const double z = (std::log(y) - mu) / sigma;
  return -std::log(y) - std::log(sigma) - 0.5 * log_2pi - 0.5 * z * z;
}

double gamma_logpdf(double y, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - 1.0) * std::log(y) - rate * y;
}

// log integrand of the PLN pmf at latent z, Gaussian factor included:
// h(z) = k(mu + sigma z) - e^{mu + sigma z} - lgamma(k+1) - z^2/2 - log(2pi)/2
struct PlnIntegrand {
  double k, mu, sigma, lgk1;
  double h(double z) const {
    const double eta = mu + sigma * z;
    return k * eta - std::exp(eta) - lgk1 - 0.5 * z * z - 0.5 * log_2pi;
  }
  double dh(double z) const {
    return sigma * (k - std::exp(mu + sigma * z)) - z;
  }
  double d2h(double z) const {
    return -sigma * sigma * std::exp(mu + sigma * z) - 1.0;
  }
};

// h' is strictly decreasing, so the mode is the unique root of dh. Newton
// with a safeguarding bracket.
double pln_mode(const PlnIntegrand& f) {
  double z = (f.k > 0.0) ? (std::log(f.k) - f.mu) / f.sigma : 0.0;
  double lo = z, hi = z;
  double step = 1.0;
  while (f.dh(lo) < 0.0) { lo -= step; step *= 2.0; }
  step = 1.0;
  while (f.dh(hi) > 0.0) { hi += step; step *= 2.0; }
  z = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double g = f.dh(z);
    if (g > 0.0) lo = z; else hi = z;
    double znew = z - g / f.d2h(z);
    if (!(znew > lo && znew < hi)) znew = 0.5 * (lo + hi);
    if (std::abs(znew - z) < 1e-13 * (1.0 + std::abs(z))) return znew;
    z = znew;
  }
  return z;
}

double pln_gauss_hermite(const PlnIntegrand& f, double zhat, double scale, int n) {
  const GaussHermite& gh = gauss_hermite(n);
  const double sq2s = std::sqrt(2.0) * scale;
  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd terms(n);
  for (int i = 0; i < n; ++i) {
    const double x = gh.nodes(i);
    terms(i) = gh.log_weights(i) + x * x + f.h(zhat + sq2s * x);
    best = std::max(best, terms(i));
  }
  CompensatedSum<> acc;
  for (int i = 0; i < n; ++i) acc.add(std::exp(terms(i) - best));
  return best + std::log(acc.value()) + 0.5 * std::log(2.0) + std::log(scale);
}

double simpson_rec(const std::function<double(double)>& g, double a, double m,
                   double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = g(lm), frm = g(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) throw NumericError("pln_log_pmf: adaptive quadrature did not converge");
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(g, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(g, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Mass is concentrated near the mode with curvature <= -1 in z, so +-12
// standard-normal widths bound the tail far below the target tolerance.
double pln_adaptive(const PlnIntegrand& f, double zhat) {
  const double h0 = f.h(zhat);
  auto g = [&](double z) { return std::exp(f.h(z) - h0); };
  const double a = zhat - 12.0, b = zhat + 12.0, m = zhat;
  const double integral =
      simpson_rec(g, a, m, b, g(a), g(m), g(b),
                  (b - a) / 6.0 * (g(a) + 4.0 * g(m) + g(b)), 1e-13, 60);
  return h0 + std::log(integral);
}

}  // namespace

double pln_log_pmf(long long k, double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("pln_log_pmf: sigma must be > 0");
  if (k < 0) return -std::numeric_limits<double>::infinity();

  PlnIntegrand f{double(k), mu, sigma, std::lgamma(double(k) + 1.0)};
  const double zhat = pln_mode(f);
  const double scale = 1.0 / std::sqrt(-f.d2h(zhat));

  if (sigma > 3.0) return pln_adaptive(f, zhat);

  double prev = pln_gauss_hermite(f, zhat, scale, 40);
  for (int n = 80; n <= 320; n *= 2) {
    const double cur = pln_gauss_hermite(f, zhat, scale, n);
    if (std::abs(cur - prev) < 1e-9) return cur;
    prev = cur;
  }
  std::ostringstream os;
  os << "pln_log_pmf: quadrature did not settle at k=" << k << " mu=" << mu
     << " sigma=" << sigma << " (last estimate " << prev << ")";
  throw NumericError(os.str());
}

double log_density(const DensityFamily& fam, double y) {
  switch (fam.kind) {
    case FamilyKind::LogNormal: return lognormal_logpdf(y, fam.p1, fam.p2);
    case FamilyKind::Gamma: return gamma_logpdf(y, fam.p1, fam.p2);
    case FamilyKind::PoissonLogNormal:
      return pln_log_pmf(std::llround(y), fam.p1, fam.p2);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double weighted_loglik(const DensityFamily& fam, const BookingTable& table) {
  if (table.records.empty()) throw DataError("weighted_loglik: empty table");
  CompensatedSum<> acc;
  for (const auto& r : table.records) {
    const double ld = log_density(fam, double(r.nights));
    if (!std::isfinite(ld)) {
      std::ostringstream os;
      os << "weighted_loglik: non-finite " << family_name(fam.kind)
         << " log-density at y=" << r.nights;
      throw NumericError(os.str());
    }
    acc.add(double(r.weight) * ld);
  }
  return acc.value();
}

namespace {

struct Moments {
  double sw = 0.0;       // Σw
  double mean = 0.0;     // weighted mean of y
  double var = 0.0;      // population weighted variance of y
  double mean_log = 0.0; // weighted mean of log y
  double var_log = 0.0;  // population weighted variance of log y
};

Moments weighted_moments(const BookingTable& table) {
  CompensatedSum<> sw, sy, sly;
  for (const auto& r : table.records) {
    const double w = double(r.weight);
    sw.add(w);
    sy.add(w * double(r.nights));
    sly.add(w * std::log(double(r.nights)));
  }
  Moments m;
  m.sw = sw.value();
  m.mean = sy.value() / m.sw;
  m.mean_log = sly.value() / m.sw;
  CompensatedSum<> sv, svl;
  for (const auto& r : table.records) {
    const double w = double(r.weight);
    const double d = double(r.nights) - m.mean;
    const double dl = std::log(double(r.nights)) - m.mean_log;
    sv.add(w * d * d);
    svl.add(w * dl * dl);
  }
  m.var = sv.value() / m.sw;
  m.var_log = svl.value() / m.sw;
  return m;
}

// Distinct y with summed weights; likelihood loops touch each support point
// once regardless of table size.
std::map<int, double> support_weights(const BookingTable& table) {
  std::map<int, double> s;
  for (const auto& r : table.records) s[r.nights] += double(r.weight);
  return s;
}

DensityFit finish_fit(DensityFamily fam, const BookingTable& table, double n_eff,
                      bool converged, int iterations) {
  DensityFit fit;
  fit.family = fam;
  fit.loglik = weighted_loglik(fam, table);
  constexpr double k = 2.0;
  fit.aic = 2.0 * k - 2.0 * fit.loglik;
  fit.bic = k * std::log(n_eff) - 2.0 * fit.loglik;
  fit.n_eff = n_eff;
  fit.converged = converged;
  fit.iterations = iterations;
  return fit;
}

}  // namespace

DensityFamily lognormal_closed_form(const BookingTable& table) {
  const Moments m = weighted_moments(table);
  if (m.var_log <= 0.0) {
    throw DataError("lognormal fit: degenerate data (all stay lengths equal)");
  }
  return {FamilyKind::LogNormal, m.mean_log, std::sqrt(m.var_log)};
}

DensityFit fit_weighted(FamilyKind kind, const BookingTable& table) {
  if (table.records.empty()) throw DataError("fit_weighted: empty table");
  const Moments m = weighted_moments(table);
  const auto support = support_weights(table);

  if (kind == FamilyKind::LogNormal) {
    if (m.var_log <= 0.0) {
      throw DataError("lognormal fit: degenerate data (all stay lengths equal)");
    }
    // Parameters (mu, log sigma); sufficient statistics make evaluation O(1).
    Objective obj;
    obj.f = [&m](const Eigen::VectorXd& p) {
      const double mu = p(0), s2 = std::exp(2.0 * p(1));
      const double q = m.var_log + (m.mean_log - mu) * (m.mean_log - mu);
      return m.mean_log + p(1) + 0.5 * log_2pi + 0.5 * q / s2;
    };
    obj.grad = [&m](const Eigen::VectorXd& p) {
      const double mu = p(0), s2 = std::exp(2.0 * p(1));
      const double q = m.var_log + (m.mean_log - mu) * (m.mean_log - mu);
      Eigen::VectorXd g(2);
      g(0) = -(m.mean_log - mu) / s2;
      g(1) = 1.0 - q / s2;
      return g;
    };
    obj.lower = Eigen::Vector2d(-100.0, std::log(1e-6));
    obj.upper = Eigen::Vector2d(100.0, std::log(1e3));

    // Moment-matching start, deliberately away from the closed form so the
    // optimizer does real work that the closed form can then cross-check.
    const double mu0 = std::log(m.mean * m.mean / std::sqrt(m.var + m.mean * m.mean));
    const double s20 = std::log1p(m.var / (m.mean * m.mean));
    Eigen::VectorXd x0(2);
    x0 << mu0, 0.5 * std::log(s20);
    const OptResult r = minimize_quasi_newton(obj, x0);
    return finish_fit({kind, r.argmin(0), std::exp(r.argmin(1))}, table, m.sw,
                      r.converged, r.iterations);
  }

  if (kind == FamilyKind::Gamma) {
    if (m.var <= 0.0) {
      throw DataError("gamma fit: degenerate data (all stay lengths equal)");
    }
    // Parameters (log shape, log rate); mean log-likelihood from sufficient
    // statistics (mean y, mean log y).
    Objective obj;
    obj.f = [&m](const Eigen::VectorXd& p) {
      const double shape = std::exp(p(0)), rate = std::exp(p(1));
      return -(shape * std::log(rate) - std::lgamma(shape) +
               (shape - 1.0) * m.mean_log - rate * m.mean);
    };
    obj.lower = Eigen::Vector2d(std::log(1e-8), std::log(1e-8));
    obj.upper = Eigen::Vector2d(std::log(1e8), std::log(1e8));

    Eigen::VectorXd x0(2);
    x0 << std::log(m.mean * m.mean / m.var), std::log(m.mean / m.var);
    const OptResult r = minimize_quasi_newton(obj, x0);
    return finish_fit({kind, std::exp(r.argmin(0)), std::exp(r.argmin(1))}, table,
                      m.sw, r.converged, r.iterations);
  }

  // Poisson-lognormal: Nelder-Mead on (mu, log sigma); the gradient is too
  // noisy near the optimum to trust a quasi-Newton path.
  Objective obj;
  obj.f = [&support, &m](const Eigen::VectorXd& p) {
    const double mu = p(0), sigma = std::exp(p(1));
    CompensatedSum<> acc;
    for (const auto& [y, w] : support) {
      acc.add(w * pln_log_pmf(y, mu, sigma));
    }
    return -acc.value() / m.sw;
  };
  obj.lower = Eigen::Vector2d(-50.0, std::log(1e-4));
  obj.upper = Eigen::Vector2d(50.0, std::log(10.0));

  // Moment match: E y = e^{mu + sigma^2/2}, Var y = Ey + (Ey)^2 (e^{sigma^2}-1).
  double s20 = 1e-4;
  if (m.var > m.mean) {
    s20 = std::log1p((m.var - m.mean) / (m.mean * m.mean));
  }
  Eigen::VectorXd x0(2);
  x0 << std::log(m.mean) - 0.5 * s20, 0.5 * std::log(std::max(s20, 1e-4));
  const OptResult r = minimize_nelder_mead(obj, x0);
  return finish_fit({FamilyKind::PoissonLogNormal, r.argmin(0), std::exp(r.argmin(1))},
                    table, m.sw, r.converged, r.iterations);
}

std::vector<RankedFit> rank_models(const std::vector<DensityFit>& fits) {
  if (fits.size() < 2) {
    throw std::invalid_argument("rank_models: need at least two fits");
  }
  for (const auto& f : fits) {
    if (std::abs(f.n_eff - fits.front().n_eff) > 1e-9 * fits.front().n_eff) {
      throw DataError("rank_models: fits come from different tables (n_eff mismatch)");
    }
  }
  std::vector<size_t> idx(fits.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    if (fits[a].aic != fits[b].aic) return fits[a].aic < fits[b].aic;
    return fits[a].bic < fits[b].bic;
  });
  std::vector<RankedFit> out;
  for (size_t i : idx) {
    out.push_back({fits[i], fits[i].aic - fits[idx[0]].aic});
  }
  return out;
}

std::vector<OverlayPoint> overlay_points(const DensityFit& fit,
                                         const BookingTable& table) {
  if (!fit.converged) {
    throw std::invalid_argument("overlay_points: fit did not converge");
  }
  const auto support = support_weights(table);
  double total = 0.0;
  for (const auto& [y, w] : support) total += w;

  std::vector<OverlayPoint> out;
  double cum = 0.0;
  double pln_cum = 0.0;
  long long pln_next = 0;
  for (const auto& [y, w] : support) {
    cum += w;
    OverlayPoint pt;
    pt.y = double(y);
    pt.ecdf = cum / total;
    switch (fit.family.kind) {
      case FamilyKind::LogNormal:
        pt.fitted_cdf = norm_cdf((std::log(pt.y) - fit.family.p1) / fit.family.p2);
        break;
      case FamilyKind::Gamma:
        pt.fitted_cdf = gamma_p(fit.family.p1, fit.family.p2 * pt.y);
        break;
      case FamilyKind::PoissonLogNormal:
        for (; pln_next <= y; ++pln_next) {
          pln_cum += std::exp(pln_log_pmf(pln_next, fit.family.p1, fit.family.p2));
        }
        pt.fitted_cdf = std::min(pln_cum, 1.0);
        break;
    }
    out.push_back(pt);
  }
  return out;
}

}  // namespace npb
