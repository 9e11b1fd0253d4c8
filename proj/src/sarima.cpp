#include "npb/sarima.hpp"

#include <Eigen/QR>

#include <array>
#include <cmath>

#include "npb/accum.hpp"
#include "npb/errors.hpp"
#include "npb/optim.hpp"
#include "npb/special.hpp"

namespace npb {

MonthlySeries make_monthly_series(const std::vector<MonthlyPoint>& points,
                                  const PhaseBoundaries& b) {
  if (points.empty()) throw DataError("make_monthly_series: no monthly points");
  MonthlySeries s;
  const auto n = Eigen::Index(points.size());
  s.values.resize(n);
  s.start_ym = points.front().ym_index;
  s.xreg.resize(n, 2);
  s.xreg_labels = {"post_vaccine", "pre_covid"};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = points[size_t(i)];
    if (p.ym_index != s.start_ym + i) {
      throw DataError("make_monthly_series: gap in the month index at " +
                      std::to_string(p.year) + "-" + std::to_string(p.month));
    }
    s.values(i) = p.wmean;
    // A month belongs to the phase of its 15th day.
    const Phase ph = assign_phase(Date(p.year, unsigned(p.month), 15), b);
    s.xreg(i, 0) = ph == Phase::PostVaccine ? 1.0 : 0.0;
    s.xreg(i, 1) = ph == Phase::PreCovid ? 1.0 : 0.0;
  }
  return s;
}

Eigen::VectorXd difference(const Eigen::VectorXd& x, int d, int D, int s) {
  if (d < 0 || d > 1 || D < 0 || D > 1) {
    throw std::invalid_argument("difference: d and D must be 0 or 1");
  }
  if (x.size() <= d + D * s) {
    throw DataError("difference: series too short for the requested order");
  }
  Eigen::VectorXd out = x;
  if (d == 1) {
    out = (out.tail(out.size() - 1) - out.head(out.size() - 1)).eval();
  }
  if (D == 1) {
    if (s < 1) throw std::invalid_argument("difference: season length must be >= 1");
    out = (out.tail(out.size() - s) - out.head(out.size() - s)).eval();
  }
  return out;
}

namespace {

constexpr int kMaLag = 13;  // (1 - theta B)(1 - Theta B^12) spans 13 lags

// Autocovariances of the MA(1)xSMA(12) polynomial in sigma^2 units.
std::array<double, kMaLag + 1> ma_autocov(double theta, double Theta) {
  std::array<double, kMaLag + 1> psi{};
  psi[0] = 1.0;
  psi[1] = -theta;
  psi[12] = -Theta;
  psi[13] = theta * Theta;
  std::array<double, kMaLag + 1> r{};
  for (int h = 0; h <= kMaLag; ++h) {
    for (int j = 0; j + h <= kMaLag; ++j) r[size_t(h)] += psi[size_t(j)] * psi[size_t(j + h)];
  }
  return r;
}

// Innovations-algorithm coefficients for the band covariance r(|i-j|):
// th(t, h) predicts z_t from the previous innovations, v(t) is the relative
// one-step variance. O(n * q^2) thanks to the MA band.
struct InnovCoeffs {
  Eigen::MatrixXd th;  // n x (kMaLag+1), columns 1..13 used
  Eigen::VectorXd v;
};

InnovCoeffs innovation_coeffs(Eigen::Index n, double theta, double Theta) {
  const auto r = ma_autocov(theta, Theta);
  InnovCoeffs c;
  c.th = Eigen::MatrixXd::Zero(n, kMaLag + 1);
  c.v.resize(n);
  c.v(0) = r[0];
  for (Eigen::Index t = 1; t < n; ++t) {
    const Eigen::Index k_lo = std::max<Eigen::Index>(0, t - kMaLag);
    for (Eigen::Index k = k_lo; k < t; ++k) {
      double acc = r[size_t(t - k)];
      for (Eigen::Index j = k_lo; j < k; ++j) {
        acc -= c.th(k, k - j) * c.th(t, t - j) * c.v(j);
      }
      c.th(t, t - k) = acc / c.v(k);
    }
    double vt = r[0];
    for (Eigen::Index j = k_lo; j < t; ++j) {
      vt -= c.th(t, t - j) * c.th(t, t - j) * c.v(j);
    }
    if (!(vt > 0.0)) {
      throw NumericError("innovations recursion lost positive definiteness");
    }
    c.v(t) = vt;
  }
  return c;
}

Eigen::VectorXd apply_innovations(const InnovCoeffs& c, const Eigen::VectorXd& z) {
  const Eigen::Index n = z.size();
  Eigen::VectorXd e(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    double pred = 0.0;
    const Eigen::Index hmax = std::min<Eigen::Index>(t, kMaLag);
    for (Eigen::Index h = 1; h <= hmax; ++h) pred += c.th(t, h) * e(t - h);
    e(t) = z(t) - pred;
  }
  return e;
}

constexpr double log_2pi = 1.8378770664093453;

// First-difference the dummy columns and keep the tail rows that align with
// the doubly-differenced response.
Eigen::MatrixXd differenced_xreg(const MonthlySeries& series, Eigen::Index n_diff) {
  const Eigen::Index p = series.xreg.cols();
  Eigen::MatrixXd xd(n_diff, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::VectorXd dj = difference(series.xreg.col(j), 1, 0, 12);
    xd.col(j) = dj.tail(n_diff);
  }
  return xd;
}

struct ProfileEval {
  double loglik = 0.0;
  Eigen::VectorXd beta;
  double sigma2 = 0.0;
  Eigen::VectorXd resid;  // e_t / sqrt(v_t)
};

// beta by GLS on the innovations-whitened system, sigma^2 concentrated.
ProfileEval profile_eval(const Eigen::VectorXd& w, const Eigen::MatrixXd& xd,
                         double theta, double Theta) {
  const Eigen::Index n = w.size();
  const InnovCoeffs c = innovation_coeffs(n, theta, Theta);
  const Eigen::VectorXd ew = apply_innovations(c, w);
  const Eigen::VectorXd inv_sqrt_v = c.v.array().rsqrt();

  ProfileEval out;
  Eigen::VectorXd e_res = ew;
  if (xd.cols() > 0) {
    Eigen::MatrixXd ex(n, xd.cols());
    for (Eigen::Index j = 0; j < xd.cols(); ++j) {
      ex.col(j) = apply_innovations(c, xd.col(j));
    }
    const Eigen::MatrixXd a = inv_sqrt_v.asDiagonal() * ex;
    const Eigen::VectorXd b = inv_sqrt_v.asDiagonal() * ew;
    out.beta = a.colPivHouseholderQr().solve(b);
    e_res -= ex * out.beta;
  } else {
    out.beta.resize(0);
  }

  const double s = (e_res.array().square() / c.v.array()).sum();
  out.sigma2 = s / double(n);
  out.loglik = -0.5 * (double(n) * (log_2pi + std::log(out.sigma2)) +
                       c.v.array().log().sum() + double(n));
  out.resid = e_res.array() * inv_sqrt_v.array();
  return out;
}

// Same likelihood with beta held fixed; used for the standard-error Hessian.
double concentrated_loglik(const Eigen::VectorXd& w, const Eigen::MatrixXd& xd,
                           double theta, double Theta, const Eigen::VectorXd& beta) {
  const Eigen::Index n = w.size();
  Eigen::VectorXd z = w;
  if (beta.size() > 0) z -= xd * beta;
  const InnovCoeffs c = innovation_coeffs(n, theta, Theta);
  const Eigen::VectorXd e = apply_innovations(c, z);
  const double s = (e.array().square() / c.v.array()).sum();
  const double sigma2 = s / double(n);
  return -0.5 * (double(n) * (log_2pi + std::log(sigma2)) +
                 c.v.array().log().sum() + double(n));
}

}  // namespace

Innovations ma_innovations(const Eigen::VectorXd& z, double theta, double Theta,
                           double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("ma_innovations: sigma2 must be > 0");
  if (z.size() == 0) throw DataError("ma_innovations: empty series");
  const InnovCoeffs c = innovation_coeffs(z.size(), theta, Theta);
  Innovations out;
  out.e = apply_innovations(c, z);
  out.v = c.v;
  CompensatedSum<> acc;
  for (Eigen::Index t = 0; t < z.size(); ++t) {
    acc.add(std::log(sigma2 * out.v(t)) + out.e(t) * out.e(t) / (sigma2 * out.v(t)));
  }
  out.loglik = -0.5 * (double(z.size()) * log_2pi + acc.value());
  return out;
}

double ma_loglik(const Eigen::VectorXd& z, double theta, double Theta, double sigma2) {
  return ma_innovations(z, theta, Theta, sigma2).loglik;
}

double exact_loglik(const SarimaParams& params, const MonthlySeries& series) {
  const Eigen::VectorXd w = difference(series.values, 1, 1, 12);
  Eigen::VectorXd z = w;
  if (params.beta.size() > 0) {
    if (series.xreg.cols() != params.beta.size()) {
      throw std::invalid_argument("exact_loglik: beta does not match xreg");
    }
    z -= differenced_xreg(series, w.size()) * params.beta;
  }
  return ma_loglik(z, params.theta, params.Theta, params.sigma2);
}

SarimaFit fit_sarima(const MonthlySeries& series, bool include_xreg) {
  if (series.values.size() < 26) {
    throw DataError("fit_sarima: need at least 26 months");
  }
  if (include_xreg && series.xreg.cols() == 0) {
    throw DataError("fit_sarima: dummies requested but series has none");
  }
  const Eigen::VectorXd w = difference(series.values, 1, 1, 12);
  const Eigen::Index n = w.size();
  const Eigen::MatrixXd xd = include_xreg ? differenced_xreg(series, n)
                                          : Eigen::MatrixXd(n, 0);

  Objective obj;
  obj.f = [&](const Eigen::VectorXd& u) {
    return -profile_eval(w, xd, std::tanh(u(0)), std::tanh(u(1))).loglik;
  };

  // Deterministic multi-start over the invertibility square.
  const double starts[][2] = {{0.0, 0.0},   {-0.5, -0.5}, {0.5, -0.5},
                              {-0.5, 0.5},  {0.5, 0.5},   {-0.9, -0.9}};
  OptResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    Eigen::VectorXd u0(2);
    u0 << std::atanh(s[0]), std::atanh(s[1]);
    const OptResult r = minimize_nelder_mead(obj, u0);
    if (r.value < best.value) best = r;
  }

  const double theta = std::tanh(best.argmin(0));
  const double Theta = std::tanh(best.argmin(1));
  const ProfileEval opt = profile_eval(w, xd, theta, Theta);

  SarimaFit fit;
  fit.ma1 = theta;
  fit.sma12 = Theta;
  fit.beta = opt.beta;
  fit.sigma2 = opt.sigma2;
  fit.loglik = opt.loglik;
  fit.labels = {"ma1", "sma12"};
  if (include_xreg) {
    for (const auto& l : series.xreg_labels) fit.labels.push_back(l);
  }
  fit.k = 2 + int(opt.beta.size()) + 1;  // MA terms, dummies, sigma^2
  fit.n_diff = int(n);
  const double kk = double(fit.k), nn = double(n);
  fit.aic = 2.0 * kk - 2.0 * fit.loglik;
  fit.aicc = fit.aic + 2.0 * kk * (kk + 1.0) / (nn - kk - 1.0);
  fit.bic = kk * std::log(nn) - 2.0 * fit.loglik;
  fit.residuals = opt.resid;
  fit.converged = best.converged;
  fit.boundary_warning = std::abs(theta) > 0.999 || std::abs(Theta) > 0.999;

  // Standard errors from the central-difference Hessian of the concentrated
  // likelihood in the natural parameters (theta, Theta, beta).
  const int p = 2 + int(opt.beta.size());
  Eigen::VectorXd x(p);
  x(0) = theta;
  x(1) = Theta;
  for (int j = 2; j < p; ++j) x(j) = opt.beta(j - 2);
  auto nll = [&](const Eigen::VectorXd& q) {
    Eigen::VectorXd b(p - 2);
    for (int j = 2; j < p; ++j) b(j - 2) = q(j);
    return -concentrated_loglik(w, xd, q(0), q(1), b);
  };
  Eigen::MatrixXd hess(p, p);
  Eigen::VectorXd h(p);
  for (int i = 0; i < p; ++i) h(i) = 1e-4 * std::max(1.0, std::abs(x(i)));
  const double f0 = nll(x);
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j) {
      Eigen::VectorXd q = x;
      if (i == j) {
        q(i) = x(i) + h(i);
        const double fp = nll(q);
        q(i) = x(i) - h(i);
        const double fm = nll(q);
        hess(i, i) = (fp - 2.0 * f0 + fm) / (h(i) * h(i));
      } else {
        double acc = 0.0;
        for (int si : {1, -1}) {
          for (int sj : {1, -1}) {
            q = x;
            q(i) = x(i) + si * h(i);
            q(j) = x(j) + sj * h(j);
            acc += si * sj * nll(q);
          }
        }
        hess(i, j) = hess(j, i) = acc / (4.0 * h(i) * h(j));
      }
    }
  }
  const Eigen::MatrixXd cov = hess.colPivHouseholderQr().solve(
      Eigen::MatrixXd::Identity(p, p));
  fit.se.resize(p);
  for (int i = 0; i < p; ++i) {
    const double d = cov(i, i);
    fit.se(i) = d > 0.0 ? std::sqrt(d) : std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

LrTest lr_test(const SarimaFit& full, const SarimaFit& null_fit) {
  if (full.k <= null_fit.k) {
    throw std::invalid_argument("lr_test: models are not nested (k_full <= k_null)");
  }
  if (full.loglik < null_fit.loglik) {
    throw std::invalid_argument("lr_test: full model fits worse; nesting violated");
  }
  LrTest t;
  t.statistic = 2.0 * (full.loglik - null_fit.loglik);
  t.dof = full.k - null_fit.k;
  t.p_value = chi2_sf(t.statistic, double(t.dof));
  return t;
}

LjungBox ljung_box(const Eigen::VectorXd& residuals, int max_lag, int fitdf) {
  const Eigen::Index n = residuals.size();
  if (max_lag <= fitdf) throw std::invalid_argument("ljung_box: max_lag must exceed fitdf");
  if (n <= max_lag) throw DataError("ljung_box: series shorter than max_lag");

  const double mean = residuals.mean();
  const Eigen::VectorXd c = residuals.array() - mean;
  const double denom = c.squaredNorm();
  if (!(denom > 0.0)) throw DataError("ljung_box: residuals have zero variance");

  double q = 0.0;
  for (int k = 1; k <= max_lag; ++k) {
    const double num = c.tail(n - k).dot(c.head(n - k));
    const double rho = num / denom;
    q += rho * rho / double(n - k);
  }
  q *= double(n) * double(n + 2);

  LjungBox out;
  out.statistic = q;
  out.dof = max_lag - fitdf;
  out.p_value = chi2_sf(q, double(out.dof));
  return out;
}

DiagnosticsReport residual_diagnostics(const SarimaFit& fit) {
  const Eigen::VectorXd& r = fit.residuals;
  const Eigen::Index n = r.size();
  if (n < 2) throw DataError("residual_diagnostics: too few residuals");

  const double mean = r.mean();
  const Eigen::VectorXd c = r.array() - mean;
  const double denom = c.squaredNorm();
  if (!(denom > 0.0)) throw DataError("residual_diagnostics: residuals have zero variance");

  DiagnosticsReport rep;
  const int max_lag = int(std::min<Eigen::Index>(24, n - 1));
  rep.acf.resize(max_lag);
  for (int k = 1; k <= max_lag; ++k) {
    rep.acf(k - 1) = c.tail(n - k).dot(c.head(n - k)) / denom;
  }
  rep.acf_bound = 1.96 / std::sqrt(double(n));

  for (int lag : {12, 24}) {
    if (lag > 2 && n > lag) rep.lb.push_back(ljung_box(r, lag, 2));
  }

  const double lo = r.minCoeff(), hi = r.maxCoeff();
  const int bins = 10;
  const double width = (hi - lo) / bins;
  rep.hist_edges.resize(size_t(bins) + 1);
  rep.hist_counts.assign(size_t(bins), 0);
  for (int b = 0; b <= bins; ++b) rep.hist_edges[size_t(b)] = lo + width * b;
  for (Eigen::Index i = 0; i < n; ++i) {
    int b = int((r(i) - lo) / width);
    if (b >= bins) b = bins - 1;
    if (b < 0) b = 0;
    ++rep.hist_counts[size_t(b)];
  }
  return rep;
}

}  // namespace npb
