#include "npb/glm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>
#include <map>
#include <sstream>

#include "npb/accum.hpp"
#include "npb/errors.hpp"
#include "npb/optim.hpp"

namespace npb {

namespace {

const char* kMonthLabels[11] = {"february", "march",    "april",   "may",
                                "june",     "july",     "august",  "september",
                                "october",  "november", "december"};

constexpr int kMaxIrls = 50;
constexpr double kDevTol = 1e-8;
constexpr double kLogThetaLo = -6.907755278982137;  // log 1e-3
constexpr double kLogThetaHi = 13.815510557964274;  // log 1e6

double nb_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                 const Eigen::VectorXd& mu, double theta) {
  CompensatedSum<> acc;
  const double lgt = std::lgamma(theta);
  const double tlt = theta * std::log(theta);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    acc.add(w(i) * (std::lgamma(y(i) + theta) - lgt - std::lgamma(y(i) + 1.0) +
                    tlt + y(i) * std::log(mu(i)) -
                    (theta + y(i)) * std::log(theta + mu(i))));
  }
  return acc.value();
}

double nb_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                   const Eigen::VectorXd& mu, double theta) {
  CompensatedSum<> acc;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double t = 0.0;
    if (y(i) > 0.0) t += y(i) * std::log(y(i) / mu(i));
    t -= (y(i) + theta) * std::log((y(i) + theta) / (mu(i) + theta));
    acc.add(w(i) * t);
  }
  return 2.0 * acc.value();
}

double logistic_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                       const Eigen::VectorXd& mu) {
  CompensatedSum<> acc;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    acc.add(w(i) * (y(i) * std::log(mu(i)) + (1.0 - y(i)) * std::log1p(-mu(i))));
  }
  return acc.value();
}

// Weighted least squares of z on X with weights ww, via QR on the
// square-root-scaled system. Checks rank on the first call and names the
// redundant columns.
Eigen::VectorXd wls_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                          const Eigen::VectorXd& ww,
                          const std::vector<std::string>& labels, bool check_rank) {
  const Eigen::VectorXd sw = ww.array().sqrt();
  const Eigen::MatrixXd Xs = sw.asDiagonal() * X;
  const Eigen::VectorXd zs = sw.asDiagonal() * z;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xs);
  qr.setThreshold(1e-10);
  if (check_rank && qr.rank() < X.cols()) {
    std::ostringstream os;
    os << "rank-deficient design; redundant columns:";
    const auto perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < X.cols(); ++j) {
      os << ' ' << labels[size_t(perm(j))];
    }
    throw DataError(os.str());
  }
  return qr.solve(zs);
}

Eigen::MatrixXd fisher_covariance(const Eigen::MatrixXd& X, const Eigen::VectorXd& ww) {
  const Eigen::MatrixXd info = X.transpose() * ww.asDiagonal() * X;
  Eigen::MatrixXd cov = info.ldlt().solve(
      Eigen::MatrixXd::Identity(X.cols(), X.cols()));
  return 0.5 * (cov + cov.transpose());
}

struct IrlsResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd mu;
  Eigen::VectorXd work_w;
  double deviance = 0.0;
  bool converged = false;
  int iterations = 0;
};

// IRLS for the NB log link at fixed theta. eta0 seeds the linear predictor.
IrlsResult irls_nb(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& w, double theta, Eigen::VectorXd eta,
                   const std::vector<std::string>& labels) {
  IrlsResult r;
  Eigen::VectorXd mu = eta.array().exp();
  double dev = nb_deviance(y, w, mu, theta);
  for (int it = 0; it < kMaxIrls; ++it) {
    const Eigen::VectorXd ww =
        (w.array() * theta * mu.array() / (theta + mu.array())).matrix();
    const Eigen::VectorXd z =
        (eta.array() + (y.array() - mu.array()) / mu.array()).matrix();
    r.beta = wls_solve(X, z, ww, labels, it == 0);
    eta = X * r.beta;
    mu = eta.array().exp();
    const double dev_new = nb_deviance(y, w, mu, theta);
    r.iterations = it + 1;
    if (std::abs(dev_new - dev) < kDevTol * (std::abs(dev_new) + 0.1)) {
      dev = dev_new;
      r.converged = true;
      break;
    }
    dev = dev_new;
  }
  r.mu = mu;
  r.work_w = (w.array() * theta * mu.array() / (theta + mu.array())).matrix();
  r.deviance = dev;
  return r;
}

GlmFit fit_negbin(const DesignMatrix& design, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& w) {
  const Eigen::MatrixXd& X = design.X;

  // Moment start for theta: Var = mu + mu^2/theta.
  const double sw = w.sum();
  const double mean = w.dot(y) / sw;
  const double var = (w.array() * (y.array() - mean).square()).sum() / sw;
  double theta = (var > mean && mean > 0.0)
                     ? std::min(1e4, mean * mean / (var - mean))
                     : 100.0;

  Eigen::VectorXd eta = y.array().max(0.5).log();
  IrlsResult irls = irls_nb(X, y, w, theta, eta, design.labels);

  double log_theta = std::log(theta);
  bool theta_converged = false;
  for (int outer = 0; outer < 100; ++outer) {
    auto profile = [&](double lt) {
      return -nb_loglik(y, w, irls.mu, std::exp(lt));
    };
    const double lt_new =
        minimize_golden_section(profile, kLogThetaLo, kLogThetaHi, 1e-12);
    const double change = std::abs(lt_new - log_theta);
    log_theta = lt_new;
    theta = std::exp(log_theta);
    irls = irls_nb(X, y, w, theta, X * irls.beta, design.labels);
    if (change < 1e-8) {
      theta_converged = true;
      break;
    }
  }

  GlmFit fit;
  fit.family = GlmFamily::NegBin;
  fit.coefficients = irls.beta;
  fit.covariance = fisher_covariance(X, irls.work_w);
  fit.labels = design.labels;
  fit.theta = theta;
  fit.loglik = nb_loglik(y, w, irls.mu, theta);
  fit.converged = irls.converged && theta_converged;
  fit.iterations = irls.iterations;
  return fit;
}

GlmFit fit_logistic(const DesignMatrix& design, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& w) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) {
      throw std::invalid_argument("logistic fit: response must be 0/1");
    }
  }
  if ((y.array() == 0.0).all() || (y.array() == 1.0).all()) {
    throw DataError("logistic fit: response has a single class");
  }

  const Eigen::MatrixXd& X = design.X;
  Eigen::VectorXd mu = ((y.array() + 0.5) / 2.0).matrix();
  Eigen::VectorXd eta = (mu.array() / (1.0 - mu.array())).log();
  Eigen::VectorXd beta;
  double dev = -2.0 * logistic_loglik(y, w, mu);
  bool converged = false;
  int iterations = 0;
  for (int it = 0; it < kMaxIrls; ++it) {
    const Eigen::VectorXd ww = (w.array() * mu.array() * (1.0 - mu.array())).matrix();
    const Eigen::VectorXd z =
        (eta.array() + (y.array() - mu.array()) /
                           (mu.array() * (1.0 - mu.array()))).matrix();
    beta = wls_solve(X, z, ww, design.labels, it == 0);
    eta = X * beta;
    mu = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    const double dev_new = -2.0 * logistic_loglik(y, w, mu);
    iterations = it + 1;
    if (std::abs(dev_new - dev) < kDevTol * (std::abs(dev_new) + 0.1)) {
      dev = dev_new;
      converged = true;
      break;
    }
    dev = dev_new;
  }

  // Fitted probabilities pinned against 0/1 mean the likelihood has no
  // interior maximum (separation): the deviance plateaus near zero while the
  // coefficients diverge, so the plateau test alone would claim convergence.
  if (eta.lpNorm<Eigen::Infinity>() > 15.0) converged = false;

  GlmFit fit;
  fit.family = GlmFamily::Logistic;
  fit.coefficients = beta;
  fit.covariance =
      fisher_covariance(X, (w.array() * mu.array() * (1.0 - mu.array())).matrix());
  fit.labels = design.labels;
  fit.loglik = logistic_loglik(y, w, mu);
  fit.converged = converged;
  fit.iterations = iterations;
  return fit;
}

}  // namespace

DesignMatrix build_design(const BookingTable& table) {
  DesignMatrix d;
  d.labels = {"intercept", "post_vaccine", "pre_covid"};
  for (const char* m : kMonthLabels) d.labels.push_back(m);
  d.X.resize(Eigen::Index(table.records.size()), 14);
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    const auto& r = table.records[size_t(i)];
    d.X.row(i) = design_row(r.phase, r.month).transpose();
  }
  return d;
}

Eigen::VectorXd design_row(Phase phase, int month) {
  if (month < 1 || month > 12) {
    throw std::invalid_argument("design_row: month must be 1..12");
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(14);
  x(0) = 1.0;
  if (phase == Phase::PostVaccine) x(1) = 1.0;
  if (phase == Phase::PreCovid) x(2) = 1.0;
  if (month >= 2) x(1 + month) = 1.0;  // February lands in column 3
  return x;
}

GlmFit fit_weighted_glm(const DesignMatrix& design, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w, GlmFamily family) {
  if (design.X.rows() != y.size() || y.size() != w.size()) {
    throw std::invalid_argument("fit_weighted_glm: size mismatch");
  }
  if (y.size() == 0) throw DataError("fit_weighted_glm: empty data");
  if ((w.array() <= 0.0).any()) throw DataError("fit_weighted_glm: weights must be positive");
  return family == GlmFamily::NegBin ? fit_negbin(design, y, w)
                                     : fit_logistic(design, y, w);
}

GlmFit fit_weighted_nb_fixed_theta(const DesignMatrix& design, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& w, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
  const Eigen::VectorXd eta = y.array().max(0.5).log();
  const IrlsResult irls = irls_nb(design.X, y, w, theta, eta, design.labels);
  GlmFit fit;
  fit.family = GlmFamily::NegBin;
  fit.coefficients = irls.beta;
  fit.covariance = fisher_covariance(design.X, irls.work_w);
  fit.labels = design.labels;
  fit.theta = theta;
  fit.loglik = nb_loglik(y, w, irls.mu, theta);
  fit.converged = irls.converged;
  fit.iterations = irls.iterations;
  return fit;
}

std::vector<RateRatioRow> rate_ratios(const GlmFit& fit) {
  std::vector<RateRatioRow> out;
  for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
    const double se = std::sqrt(std::max(0.0, fit.covariance(j, j)));
    RateRatioRow row;
    row.label = fit.labels[size_t(j)];
    row.ratio = std::exp(fit.coefficients(j));
    row.ci_low = std::exp(fit.coefficients(j) - 1.96 * se);
    row.ci_high = std::exp(fit.coefficients(j) + 1.96 * se);
    out.push_back(row);
  }
  return out;
}

std::vector<MonthlyPrediction> predict_monthly_mean(const GlmFit& fit,
                                                    const BookingTable& table) {
  struct Cell {
    CompensatedSum<> wy, wmu, w;
  };
  std::map<std::int64_t, Cell> cells;
  for (const auto& r : table.records) {
    const Eigen::VectorXd x = design_row(r.phase, r.month);
    Cell& c = cells[r.created.ym_index()];
    const double w = double(r.weight);
    c.wy.add(w * double(r.nights));
    c.wmu.add(w * std::exp(fit.coefficients.dot(x)));
    c.w.add(w);
  }
  std::vector<MonthlyPrediction> out;
  for (const auto& [ym, c] : cells) {
    MonthlyPrediction p;
    p.ym_index = ym;
    p.year = int(ym / 12);
    p.month = int(ym % 12) + 1;
    p.observed = c.wy.value() / c.w.value();
    p.predicted = c.wmu.value() / c.w.value();
    p.total_weight = std::int64_t(std::llround(c.w.value()));
    out.push_back(p);
  }
  return out;
}

}  // namespace npb
