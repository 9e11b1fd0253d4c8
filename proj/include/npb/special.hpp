#pragma once

#include <Eigen/Core>

namespace npb {

// Standard normal CDF and its inverse. norm_ppf solves erfc(-z/sqrt(2)) = 2p
// by bracketed Newton, so it inherits the accuracy of std::erfc instead of a
// rational approximation.
double norm_cdf(double z);
double norm_ppf(double p);

double norm_logpdf(double z);

// Regularized lower/upper incomplete gamma P(a,x), Q(a,x). Series expansion
// for x < a+1, Lentz continued fraction otherwise.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Upper tail of the chi-squared distribution with k degrees of freedom.
double chi2_sf(double x, double k);

// log(exp(a) + exp(b)) without overflow.
double log_add_exp(double a, double b);

struct GaussHermite {
  Eigen::VectorXd nodes;       // roots of the physicists' Hermite polynomial
  Eigen::VectorXd log_weights; // log of the corresponding quadrature weights
};

// Nodes and weights for \int f(x) e^{-x^2} dx via Golub-Welsch on the Jacobi
// matrix. Results are cached per node count; n up to a few hundred is fine.
const GaussHermite& gauss_hermite(int n);

}  // namespace npb
