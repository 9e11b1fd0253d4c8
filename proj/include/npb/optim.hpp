#pragma once

#include <Eigen/Core>

#include <functional>
#include <limits>

namespace npb {

// Minimization target with optional analytic gradient and box bounds.
// Evaluation must be deterministic in x.
struct Objective {
  std::function<double(const Eigen::VectorXd&)> f;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;  // optional
  Eigen::VectorXd lower;  // empty means unbounded
  Eigen::VectorXd upper;
};

struct OptResult {
  Eigen::VectorXd argmin;
  double value = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  int iterations = 0;
  double gradient_norm = std::numeric_limits<double>::quiet_NaN();
};

// Central differences, per-coordinate step max(1e-6, 1e-6*|x_i|). Throws if
// a probe point evaluates non-finite.
Eigen::VectorXd finite_diff_gradient(const Objective& obj, const Eigen::VectorXd& x);

// Projected L-BFGS (memory 10). Line search backtracks under the Armijo
// condition and extends past the unit step while the condition keeps holding,
// so a badly scaled initial Hessian cannot pin the step length. Stops when
// the projected-gradient infinity norm drops below 1e-8 or the relative value
// change falls below 1e-12; iteration cap 500 returns converged=false.
// Uses finite_diff_gradient when obj.grad is absent.
OptResult minimize_quasi_newton(const Objective& obj, const Eigen::VectorXd& x0);

// Nelder-Mead with coefficients (1, 2, 0.5, 0.5); converged when the simplex
// value spread is below 1e-10; cap 2000 iterations. Bounds, if present, are
// enforced by projection of trial points.
OptResult minimize_nelder_mead(const Objective& obj, const Eigen::VectorXd& x0);

// Golden-section search for a univariate minimum on [lo, hi].
double minimize_golden_section(const std::function<double(double)>& f, double lo,
                               double hi, double tol = 1e-10);

}  // namespace npb
