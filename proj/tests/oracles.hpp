#pragma once

// Brute-force reference implementations the tests compare the library
// against. Everything here favors obviousness over speed and deliberately
// avoids the algorithms used by the library itself.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace oracle {

// Repeats each value `weight` times, the definition frequency weights
// are meant to reproduce.
inline std::vector<double> expand(const std::vector<double>& values,
                                  const std::vector<std::int64_t>& weights) {
  std::vector<double> out;
  for (size_t i = 0; i < values.size(); ++i) {
    for (std::int64_t r = 0; r < weights[i]; ++r) out.push_back(values[i]);
  }
  return out;
}

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / double(x.size());
}

inline double variance_population(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / double(x.size());
}

// Order statistic x_(ceil(p*N)) of the sorted expanded sample.
inline double quantile_expanded(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  const double target = p * double(x.size());
  size_t k = size_t(std::ceil(target));
  if (k < 1) k = 1;
  if (k > x.size()) k = x.size();
  return x[k - 1];
}

// log of integral Pois(k; e^{mu+sigma z}) phi(z) dz by composite Simpson on
// a fixed fine grid around a coarse-scan maximum. No Gauss-Hermite, no
// Newton mode search; independent of the library's quadrature.
inline double pln_log_pmf_simpson(long long k, double mu, double sigma) {
  const double lgk1 = std::lgamma(double(k) + 1.0);
  auto h = [&](double z) {
    const double eta = mu + sigma * z;
    return double(k) * eta - std::exp(eta) - lgk1 - 0.5 * z * z -
           0.5 * std::log(2.0 * M_PI);
  };
  double zc = 0.0, best = h(0.0);
  for (int i = 0; i <= 200000; ++i) {
    const double z = -30.0 + 60.0 * double(i) / 200000.0;
    const double v = h(z);
    if (v > best) { best = v; zc = z; }
  }
  const int n = 1 << 19;  // Simpson intervals (even)
  const double a = zc - 15.0, b = zc + 15.0;
  const double step = (b - a) / double(n);
  long double acc = 0.0L;
  for (int i = 0; i <= n; ++i) {
    const double z = a + step * double(i);
    const double c = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += (long double)(c * std::exp(h(z) - best));
  }
  return best + std::log(double(acc * (long double)(step / 3.0)));
}

// Gaussian log-density of z under the MA model
// w_t = e_t - theta e_{t-1} - Theta e_{t-12} + theta Theta e_{t-13},
// through the explicitly assembled dense covariance matrix.
inline double ma_dense_loglik(const Eigen::VectorXd& z, double theta,
                              double Theta, double sigma2) {
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(14);
  psi(0) = 1.0;
  psi(1) = -theta;
  psi(12) = -Theta;
  psi(13) = theta * Theta;

  const Eigen::Index n = z.size();
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index lag = std::abs(i - j);
      double g = 0.0;
      for (Eigen::Index m = 0; m + lag < 14; ++m) g += psi(m) * psi(m + lag);
      cov(i, j) = sigma2 * g;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("oracle covariance not positive definite");
  }
  const Eigen::VectorXd w = llt.matrixL().solve(z);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  }
  return -0.5 * (double(n) * std::log(2.0 * M_PI) + logdet + w.squaredNorm());
}

// Unweighted Poisson log-link IRLS on the normal equations, the textbook
// limit the negative-binomial fit must approach as theta grows.
inline Eigen::VectorXd poisson_irls(const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& w) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
  Eigen::VectorXd eta = X * beta;
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd mu = eta.array().exp();
    const Eigen::VectorXd wt = w.array() * mu.array();
    const Eigen::VectorXd zv = eta.array() + (y - mu).array() / mu.array();
    const Eigen::MatrixXd A = X.transpose() * wt.asDiagonal() * X;
    const Eigen::VectorXd b = X.transpose() * (wt.array() * zv.array()).matrix();
    const Eigen::VectorXd next = A.ldlt().solve(b);
    const double delta = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    eta = X * beta;
    if (delta < 1e-12) break;
  }
  return beta;
}

}  // namespace oracle
