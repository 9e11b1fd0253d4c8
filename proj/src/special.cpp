#include "npb/special.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace npb {

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double norm_logpdf(double z) {
  static const double log_sqrt_2pi = 0.5 * std::log(2.0 * M_PI);
  return -0.5 * z * z - log_sqrt_2pi;
}

double norm_ppf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("norm_ppf: p must lie in (0, 1)");
  }
  // Exploit symmetry so we always solve in the lower tail, where
  // erfc(-z/sqrt(2)) = 2p has a well-conditioned bracket.
  if (p > 0.5) return -norm_ppf(1.0 - p);
  if (p == 0.5) return 0.0;

  double lo = -40.0, hi = 0.0;  // norm_cdf(-40) underflows far below any p > 0
  double z = -std::sqrt(-2.0 * std::log(p));  // tail-order initial guess
  if (!(z > lo && z < hi)) z = -1.0;
  for (int it = 0; it < 200; ++it) {
    const double f = norm_cdf(z) - p;
    if (f > 0.0) hi = z; else lo = z;
    const double step = f / std::exp(norm_logpdf(z));
    double znew = z - step;
    if (!(znew > lo && znew < hi)) znew = 0.5 * (lo + hi);  // fall back to bisection
    if (std::abs(znew - z) < 1e-15 * (1.0 + std::abs(z))) return znew;
    z = znew;
  }
  return z;
}

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

namespace {

// Lower regularized incomplete gamma by its power series; converges fast for
// x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma by modified Lentz continued fraction;
// converges fast for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) {
    throw std::invalid_argument("gamma_p: need a > 0 and x >= 0");
  }
  if (x == 0.0) return 0.0;
  return (x < a + 1.0) ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) {
    throw std::invalid_argument("gamma_q: need a > 0 and x >= 0");
  }
  if (x == 0.0) return 1.0;
  return (x < a + 1.0) ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

double chi2_sf(double x, double k) { return gamma_q(0.5 * k, 0.5 * x); }

const GaussHermite& gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be positive");
  static std::map<int, GaussHermite> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  // Nodes by Golub-Welsch: eigenvalues of the Jacobi matrix for weight
  // e^{-x^2} (zero diagonal, off-diagonal sqrt(i/2)).
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 1));
  for (int i = 1; i < n; ++i) sub(i - 1) = std::sqrt(0.5 * i);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);

  // Weights through the Christoffel function, w_i e^{x_i^2} =
  // 1 / sum_j psi_j(x_i)^2 over the orthonormal Hermite functions psi_j.
  // At extreme nodes the raw weight sits hundreds of orders of magnitude
  // below the noise floor of any dense eigenvector, so the eigenvector
  // route is wrong there; the psi recurrence keeps every intermediate
  // representable (with occasional rescaling) and the log exact.
  GaussHermite gh;
  gh.nodes = es.eigenvalues();
  gh.log_weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = gh.nodes(i);
    double log_shift = -0.5 * x * x;  // psi_j = u_j * exp(log_shift)
    double u_prev = 0.0;
    double u = std::pow(M_PI, -0.25);
    double sumsq = u * u;
    for (int j = 1; j < n; ++j) {
      const double u_next =
          x * std::sqrt(2.0 / j) * u - std::sqrt((j - 1.0) / j) * u_prev;
      u_prev = u;
      u = u_next;
      sumsq += u * u;
      if (std::abs(u) > 1e140) {
        u *= 1e-140;
        u_prev *= 1e-140;
        sumsq *= 1e-280;
        log_shift += 140.0 * std::log(10.0);
      }
    }
    gh.log_weights(i) = -x * x - std::log(sumsq) - 2.0 * log_shift;
  }
  return cache.emplace(n, std::move(gh)).first->second;
}

}  // namespace npb
