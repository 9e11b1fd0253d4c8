#include "npb/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>
#include <vector>

#include "npb/errors.hpp"

namespace npb {

namespace {

bool has_bounds(const Objective& obj) { return obj.lower.size() > 0; }

Eigen::VectorXd project(const Objective& obj, Eigen::VectorXd x) {
  if (has_bounds(obj)) {
    x = x.cwiseMax(obj.lower).cwiseMin(obj.upper);
  }
  return x;
}

std::string point_str(const Eigen::VectorXd& x) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) os << ", ";
    os << x(i);
  }
  os << ")";
  return os.str();
}

Eigen::VectorXd gradient_of(const Objective& obj, const Eigen::VectorXd& x) {
  return obj.grad ? obj.grad(x) : finite_diff_gradient(obj, x);
}

// Gradient with components pointing out of the feasible box zeroed.
Eigen::VectorXd projected_gradient(const Objective& obj, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& g) {
  if (!has_bounds(obj)) return g;
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x(i) <= obj.lower(i) && g(i) > 0.0) ||
        (x(i) >= obj.upper(i) && g(i) < 0.0)) {
      pg(i) = 0.0;
    }
  }
  return pg;
}

}  // namespace

Eigen::VectorXd finite_diff_gradient(const Objective& obj, const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = std::max(1e-6, 1e-6 * std::abs(x(i)));
    probe(i) = x(i) + h;
    const double fp = obj.f(probe);
    probe(i) = x(i) - h;
    const double fm = obj.f(probe);
    probe(i) = x(i);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_diff_gradient: non-finite objective near " +
                         point_str(x));
    }
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

OptResult minimize_quasi_newton(const Objective& obj, const Eigen::VectorXd& x0) {
  constexpr int memory = 10;
  constexpr int max_iter = 500;
  constexpr double pg_tol = 1e-8;
  constexpr double value_tol = 1e-12;
  constexpr double armijo = 1e-4;

  Eigen::VectorXd x = project(obj, x0);
  double fx = obj.f(x);
  if (!std::isfinite(fx)) {
    throw NumericError("minimize_quasi_newton: objective not finite at start " +
                       point_str(x));
  }
  Eigen::VectorXd g = gradient_of(obj, x);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  OptResult res;
  res.argmin = x;
  res.value = fx;

  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter;
    const Eigen::VectorXd pg = projected_gradient(obj, x, g);
    res.gradient_norm = pg.lpNorm<Eigen::Infinity>();
    if (res.gradient_norm < pg_tol) {
      res.converged = true;
      break;
    }

    // Two-loop recursion for d = -H g.
    Eigen::VectorXd q = g;
    const int m = int(s_hist.size());
    std::vector<double> alpha(static_cast<size_t>(m));
    std::vector<double> rho(static_cast<size_t>(m));
    for (int j = m - 1; j >= 0; --j) {
      rho[size_t(j)] = 1.0 / y_hist[size_t(j)].dot(s_hist[size_t(j)]);
      alpha[size_t(j)] = rho[size_t(j)] * s_hist[size_t(j)].dot(q);
      q -= alpha[size_t(j)] * y_hist[size_t(j)];
    }
    if (m > 0) {
      const auto& sl = s_hist.back();
      const auto& yl = y_hist.back();
      q *= sl.dot(yl) / yl.dot(yl);
    }
    for (int j = 0; j < m; ++j) {
      const double beta = rho[size_t(j)] * y_hist[size_t(j)].dot(q);
      q += (alpha[size_t(j)] - beta) * s_hist[size_t(j)];
    }
    Eigen::VectorXd d = -q;
    if (d.dot(g) >= 0.0) d = -g;  // not a descent direction; steepest descent

    // Backtracking line search with projection onto the box.
    double step = 1.0;
    Eigen::VectorXd x_new;
    double f_new = fx;
    bool improved = false;
    bool saw_nonfinite = false;
    int backtracks = 0;
    for (int ls = 0; ls < 60; ++ls, ++backtracks) {
      x_new = project(obj, x + step * d);
      const Eigen::VectorXd dx = x_new - x;
      if (dx.lpNorm<Eigen::Infinity>() == 0.0) break;  // projection eats the step
      f_new = obj.f(x_new);
      if (std::isfinite(f_new)) {
        if (f_new <= fx + armijo * g.dot(dx)) {
          improved = true;
          break;
        }
      } else {
        saw_nonfinite = true;
      }
      step *= 0.5;
    }
    // If the unit step passed untouched, extend while the Armijo bound still
    // holds and the value keeps falling; a stale inverse-Hessian scale would
    // otherwise shrink every move to a crawl once curvature pairs are skipped.
    if (improved && backtracks == 0) {
      for (int ex = 0; ex < 30; ++ex) {
        const Eigen::VectorXd xt = project(obj, x + 2.0 * step * d);
        if ((xt - x_new).lpNorm<Eigen::Infinity>() == 0.0) break;
        const Eigen::VectorXd dxt = xt - x;
        const double ft = obj.f(xt);
        if (!std::isfinite(ft) || ft > fx + armijo * g.dot(dxt) || ft >= f_new) {
          break;
        }
        step *= 2.0;
        x_new = xt;
        f_new = ft;
      }
    }
    if (!improved) {
      if (saw_nonfinite) {
        throw NumericError(
            "minimize_quasi_newton: objective non-finite along the search "
            "direction from " + point_str(x));
      }
      res.converged = res.gradient_norm < pg_tol;
      break;
    }

    const Eigen::VectorXd g_new = gradient_of(obj, x_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = g_new - g;
    if (s.dot(yv) > 1e-10 * s.norm() * yv.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      if (int(s_hist.size()) > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }

    const double change = std::abs(fx - f_new);
    x = x_new;
    g = g_new;
    const double f_prev = fx;
    fx = f_new;
    res.argmin = x;
    res.value = fx;
    if (change <= value_tol * (1.0 + std::abs(f_prev))) {
      res.gradient_norm =
          projected_gradient(obj, x, g).lpNorm<Eigen::Infinity>();
      res.converged = true;
      break;
    }
  }
  res.argmin = x;
  res.value = fx;
  return res;
}

OptResult minimize_nelder_mead(const Objective& obj, const Eigen::VectorXd& x0) {
  constexpr int max_iter = 2000;
  constexpr double spread_tol = 1e-10;
  constexpr double refl = 1.0, expa = 2.0, contr = 0.5, shrink = 0.5;

  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> verts;
  verts.push_back(project(obj, x0));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd v = verts[0];
    v(i) += std::max(0.05 * std::abs(v(i)), 0.05);
    verts.push_back(project(obj, v));
  }
  std::vector<double> fv(verts.size());
  for (size_t i = 0; i < verts.size(); ++i) {
    fv[i] = obj.f(verts[i]);
    if (!std::isfinite(fv[i])) {
      throw NumericError("minimize_nelder_mead: objective not finite at " +
                         point_str(verts[i]));
    }
  }

  auto order = [&] {
    std::vector<size_t> idx(verts.size());
    std::iota(idx.begin(), idx.end(), size_t(0));
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t a, size_t b) { return fv[a] < fv[b]; });
    std::vector<Eigen::VectorXd> v2;
    std::vector<double> f2;
    for (size_t i : idx) {
      v2.push_back(verts[i]);
      f2.push_back(fv[i]);
    }
    verts.swap(v2);
    fv.swap(f2);
  };
  auto eval = [&](const Eigen::VectorXd& v) {
    const double f = obj.f(v);
    return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  };

  OptResult res;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    order();
    if (fv.back() - fv.front() < spread_tol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (size_t i = 0; i + 1 < verts.size(); ++i) centroid += verts[i];
    centroid /= double(n);

    const Eigen::VectorXd& worst = verts.back();
    Eigen::VectorXd xr = project(obj, centroid + refl * (centroid - worst));
    const double fr = eval(xr);

    if (fr < fv.front()) {
      Eigen::VectorXd xe = project(obj, centroid + expa * (centroid - worst));
      const double fe = eval(xe);
      if (fe < fr) {
        verts.back() = xe;
        fv.back() = fe;
      } else {
        verts.back() = xr;
        fv.back() = fr;
      }
    } else if (fr < fv[fv.size() - 2]) {
      verts.back() = xr;
      fv.back() = fr;
    } else {
      const bool outside = fr < fv.back();
      Eigen::VectorXd xc =
          outside ? project(obj, centroid + contr * (xr - centroid))
                  : project(obj, centroid - contr * (centroid - worst));
      const double fc = eval(xc);
      if (fc < std::min(fr, fv.back())) {
        verts.back() = xc;
        fv.back() = fc;
      } else {
        for (size_t i = 1; i < verts.size(); ++i) {
          verts[i] = project(obj, verts[0] + shrink * (verts[i] - verts[0]));
          fv[i] = eval(verts[i]);
        }
      }
    }
  }
  order();
  res.argmin = verts.front();
  res.value = fv.front();
  res.iterations = iter;
  return res;
}

double minimize_golden_section(const std::function<double(double)>& f, double lo,
                               double hi, double tol) {
  if (!(lo < hi)) throw std::invalid_argument("minimize_golden_section: lo >= hi");
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace npb
