#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sthawkes {

/// Objective to minimize; may return +inf for infeasible points.
using Objective = std::function<double(std::span<const double>)>;

struct OptimResult {
  std::vector<double> x;
  double f{std::numeric_limits<double>::infinity()};
  int evaluations{0};
  int iterations{0};
  bool converged{false};
};

struct NelderMeadOptions {
  double initial_step{0.5};
  double f_tol{1e-10};
  double x_tol{1e-5};
  int max_evaluations{4000};
};

inline double finite_or_inf(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); }

inline OptimResult nelder_mead(const Objective& f, std::vector<double> x0, NelderMeadOptions opt = {}) {
  const std::size_t n = x0.size();
  OptimResult res;
  if (n == 0) {
    res.x = x0;
    res.f = finite_or_inf(f(x0));
    res.evaluations = 1;
    res.converged = true;
    return res;
  }
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    return finite_or_inf(f(x));
  };
  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += opt.initial_step;
  for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(pts[i]);
  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  while (res.evaluations < opt.max_evaluations) {
    ++res.iterations;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
    double size = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t d = 0; d < n; ++d) size = std::max(size, std::abs(pts[i][d] - pts[best][d]));
    }
    const double spread = fv[worst] - fv[best];
    if (std::isfinite(spread) && spread <= opt.f_tol * (std::abs(fv[best]) + 1.0) && size <= opt.x_tol) {
      res.converged = true;
      break;
    }
    if (size <= 1e-12) break;
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[i][d] / static_cast<double>(n);
    }
    for (std::size_t d = 0; d < n; ++d) xr[d] = centroid[d] + (centroid[d] - pts[worst][d]);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      for (std::size_t d = 0; d < n; ++d) xe[d] = centroid[d] + 2.0 * (centroid[d] - pts[worst][d]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      pts[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    for (std::size_t d = 0; d < n; ++d) {
      xc[d] = outside ? centroid[d] + 0.5 * (xr[d] - centroid[d])
                      : centroid[d] + 0.5 * (pts[worst][d] - centroid[d]);
    }
    const double fc = eval(xc);
    if (fc < std::min(fr, fv[worst])) {
      pts[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t d = 0; d < n; ++d) pts[i][d] = pts[best][d] + 0.5 * (pts[i][d] - pts[best][d]);
      fv[i] = eval(pts[i]);
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  res.x = pts[static_cast<std::size_t>(it - fv.begin())];
  res.f = *it;
  return res;
}

/// Central-difference gradient with step rel * max(|x|, 1).
inline std::vector<double> fd_gradient(const Objective& f, std::span<const double> x, double rel = 1e-4,
                                       int* evaluations = nullptr) {
  std::vector<double> g(x.size()), xp(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = rel * std::max(std::abs(x[i]), 1.0);
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
    if (evaluations) *evaluations += 2;
  }
  return g;
}

struct BfgsOptions {
  double grad_step{1e-4};
  double g_tol{1e-6};
  double f_tol{1e-10};
  int max_iterations{200};
};

/// Quasi-Newton with finite-difference gradients and backtracking line search.
inline OptimResult bfgs(const Objective& f, std::vector<double> x0, BfgsOptions opt = {}) {
  const auto n = static_cast<Eigen::Index>(x0.size());
  OptimResult res;
  res.x = x0;
  res.f = finite_or_inf(f(x0));
  res.evaluations = 1;
  if (n == 0 || !std::isfinite(res.f)) return res;
  auto grad = [&](const std::vector<double>& x) {
    const auto g = fd_gradient(f, x, opt.grad_step, &res.evaluations);
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(g.data(), n));
  };
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = grad(res.x);
  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    if (!g.allFinite()) break;
    if (g.lpNorm<Eigen::Infinity>() < opt.g_tol * std::max(1.0, std::abs(res.f))) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd dir = -Hinv * g;
    if (dir.dot(g) >= 0.0) {
      Hinv.setIdentity();
      dir = -g;
    }
    // cap the step so one iteration moves at most 2 units in any coordinate
    const double cap = dir.lpNorm<Eigen::Infinity>();
    if (cap > 2.0) dir *= 2.0 / cap;
    double step = 1.0;
    std::vector<double> xn(res.x);
    double fn = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (Eigen::Index i = 0; i < n; ++i) xn[static_cast<std::size_t>(i)] = res.x[static_cast<std::size_t>(i)] + step * dir(i);
      fn = finite_or_inf(f(xn));
      ++res.evaluations;
      if (fn <= res.f + 1e-4 * step * dir.dot(g)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double df = res.f - fn;
    Eigen::VectorXd s(n);
    for (Eigen::Index i = 0; i < n; ++i) s(i) = xn[static_cast<std::size_t>(i)] - res.x[static_cast<std::size_t>(i)];
    res.x = xn;
    res.f = fn;
    const Eigen::VectorXd gn = grad(res.x);
    const Eigen::VectorXd y = gn - g;
    g = gn;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (res.iterations == 0) Hinv *= sy / y.dot(y);
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    if (df < opt.f_tol * std::max(1.0, std::abs(res.f))) {
      res.converged = true;
      break;
    }
  }
  return res;
}

/// Central-difference Hessian; step_i = rel * |x_i|, or `floor` when x_i == 0.
inline Eigen::MatrixXd fd_hessian(const std::function<double(std::span<const double>)>& f,
                                  std::span<const double> x, double rel = 1e-3, double floor = 1e-6) {
  const std::size_t n = x.size();
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = x[i] != 0.0 ? rel * std::abs(x[i]) : floor;
  std::vector<double> xp(x.begin(), x.end());
  const double f0 = f(xp);
  Eigen::MatrixXd H(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
    xp[i] += di;
    xp[j] += dj;
    const double v = f(xp);
    xp[i] = x[i];
    xp[j] = x[j];
    return v;
  };
  for (std::size_t i = 0; i < n; ++i) {
    xp[i] = x[i] + h[i];
    const double fp = f(xp);
    xp[i] = x[i] - h[i];
    const double fm = f(xp);
    xp[i] = x[i];
    H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    for (std::size_t j = 0; j < i; ++j) {
      const double v = (at(i, h[i], j, h[j]) - at(i, h[i], j, -h[j]) - at(i, -h[i], j, h[j]) +
                        at(i, -h[i], j, -h[j])) /
                       (4.0 * h[i] * h[j]);
      H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return H;
}

}  // namespace sthawkes
