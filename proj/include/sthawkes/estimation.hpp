#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "sthawkes/constraints.hpp"
#include "sthawkes/likelihood.hpp"
#include "sthawkes/model.hpp"
#include "sthawkes/optimize.hpp"

namespace sthawkes {

struct InformationCriteria {
  double aic{0.0};
  double bic{0.0};
  double hq{0.0};
};

inline InformationCriteria information_criteria(double loglik, int k, std::size_t n) {
  if (n < 3) throw std::domain_error("information criteria: n must be >= 3");
  const double dn = static_cast<double>(n);
  return {-2.0 * loglik + 2.0 * k, -2.0 * loglik + k * std::log(dn),
          -2.0 * loglik + 2.0 * k * std::log(std::log(dn))};
}

struct Estimate {
  std::string name;
  double value{0.0};
  std::optional<double> se;
  bool counted{true};  // false for profiled background levels
  bool near_bound{false};
};

struct StartTrace {
  int start{0};
  double loglik{-std::numeric_limits<double>::infinity()};
  int evaluations{0};
  int stages{0};
};

struct FitResult {
  std::string model_name;
  std::vector<Estimate> estimates;
  double loglik{-std::numeric_limits<double>::infinity()};
  int k{0};
  std::size_t n{0};
  InformationCriteria ic;
  bool converged{false};
  bool hessian_negative_definite{false};
  bool boundary_warning{false};
  std::vector<StartTrace> trace;
  std::uint64_t catalog_hash{0};
  ModelSpec model;  // at the optimum, profiled levels resolved

  [[nodiscard]] const Estimate& operator[](const std::string& name) const {
    for (const auto& e : estimates) {
      if (e.name == name) return e;
    }
    throw std::out_of_range("fit result: no parameter '" + name + "'");
  }
};

/// All starts failed to reach a finite log-likelihood.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, std::vector<StartTrace> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  [[nodiscard]] const std::vector<StartTrace>& trace() const { return trace_; }

 private:
  std::vector<StartTrace> trace_;
};

struct FitOptions {
  int n_starts{1};
  int max_restarts{4};  // extra jittered starts while the Hessian check fails
  std::uint64_t seed{1};
  double start_jitter{0.5};  // sd of start perturbations, unconstrained scale
  double stage_tol{1e-6};
  int max_stages{6};
  int nm_max_evaluations{0};  // 0: 200 per parameter
  int bfgs_max_iterations{200};
  bool standard_errors{true};
  std::optional<std::vector<double>> initial;  // natural scale
};

/// Objective in unconstrained coordinates: minus the penalized log-likelihood,
/// +inf outside the stability region.
inline double negative_objective(const ModelTemplate& tmpl, const LikelihoodEvaluator& ev, std::span<const double> z) {
  std::vector<double> x;
  try {
    x = tmpl.transform.from_unconstrained(z);
  } catch (const std::domain_error&) {
    return std::numeric_limits<double>::infinity();
  }
  const ModelSpec m = tmpl.instantiate(x);
  if (tmpl.check_radius && spectral_radius(m.kernels.productivity()) >= 1.0) {
    return std::numeric_limits<double>::infinity();
  }
  const double v = ev.evaluate(m).objective();
  return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
}

/// Full natural vector (free parameters then profiled levels) and its template.
struct NaturalPoint {
  ModelTemplate tmpl;
  std::vector<double> x;
};

inline NaturalPoint unprofiled_point(const ModelTemplate& tmpl, std::span<const double> x,
                                     const std::vector<double>& mu0, const std::vector<std::string>& labels) {
  NaturalPoint p{unprofiled(tmpl, labels), std::vector<double>(x.begin(), x.end())};
  for (int k : tmpl.profiled_marks()) p.x.push_back(mu0.at(static_cast<std::size_t>(k)));
  return p;
}

struct StandardErrors {
  std::vector<std::optional<double>> se;
  bool negative_definite{false};
  Eigen::MatrixXd hessian;
};

/// Central-difference Hessian of the log-likelihood in natural parameters;
/// SEs from the inverse of its negative. Absent when that is not PD.
inline StandardErrors asymptotic_ses(const ModelTemplate& tmpl, const LikelihoodEvaluator& ev,
                                     std::span<const double> natural) {
  auto f = [&](std::span<const double> x) { return ev.evaluate(tmpl.instantiate(x)).loglik; };
  StandardErrors out;
  out.hessian = fd_hessian(f, natural);
  out.se.assign(natural.size(), std::nullopt);
  if (!out.hessian.allFinite()) return out;
  const Eigen::MatrixXd neg = -out.hessian;
  Eigen::LLT<Eigen::MatrixXd> llt(neg);
  if (llt.info() != Eigen::Success) return out;
  out.negative_definite = true;
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(neg.rows(), neg.cols()));
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    if (cov(i, i) >= 0.0) out.se[static_cast<std::size_t>(i)] = std::sqrt(cov(i, i));
  }
  return out;
}

inline FitResult fit(const ModelTemplate& tmpl, const LikelihoodEvaluator& ev, const FitOptions& opt = {}) {
  if (ev.n_scored() == 0) throw std::invalid_argument("fit: catalog has no events in the fitting window");
  const std::vector<double> x_init = opt.initial.value_or(tmpl.initial);
  const std::vector<double> z_init = tmpl.transform.to_unconstrained(x_init);
  auto objective = [&](std::span<const double> z) { return negative_objective(tmpl, ev, z); };

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> jitter(0.0, opt.start_jitter);
  NelderMeadOptions nm;
  nm.max_evaluations = opt.nm_max_evaluations > 0 ? opt.nm_max_evaluations : 200 * static_cast<int>(tmpl.dim() + 1);
  BfgsOptions bf;
  bf.max_iterations = opt.bfgs_max_iterations;

  FitResult res;
  res.model_name = tmpl.name;
  std::vector<std::string> labels;
  for (int k = 0; k < tmpl.base.n_marks; ++k) {
    labels.push_back(tmpl.base.n_marks == 2 ? (k == 0 ? "b" : "f") : std::to_string(k));
  }
  std::vector<double> best_z;
  double best_f = std::numeric_limits<double>::infinity();
  auto run_start = [&](int s) {
    std::vector<double> z = z_init;
    if (s > 0) {
      for (auto& v : z) v += jitter(rng);
    }
    StartTrace tr{s};
    double f = objective(z);
    ++tr.evaluations;
    for (int stage = 0; stage < opt.max_stages; ++stage) {
      const double f_before = f;
      auto a = nelder_mead(objective, z, nm);
      tr.evaluations += a.evaluations;
      if (a.f <= f) {
        z = a.x;
        f = a.f;
      }
      auto q = bfgs(objective, z, bf);
      tr.evaluations += q.evaluations;
      if (q.f <= f) {
        z = q.x;
        f = q.f;
      }
      tr.stages = stage + 1;
      if (std::isfinite(f_before) && f_before - f < opt.stage_tol) break;
    }
    tr.loglik = -f;
    res.trace.push_back(tr);
    if (f < best_f) {
      best_f = f;
      best_z = z;
    }
  };
  int starts = std::max(1, opt.n_starts);
  for (int s = 0; s < starts; ++s) run_start(s);
  if (!std::isfinite(best_f)) throw FitError("fit: no start reached a finite log-likelihood", res.trace);

  std::vector<double> x;
  std::optional<StandardErrors> se;
  NaturalPoint full;
  LikelihoodReport rep;
  for (int restart = 0;; ++restart) {
    x = tmpl.transform.from_unconstrained(best_z);
    rep = ev.evaluate(tmpl.instantiate(x));
    full = unprofiled_point(tmpl, x, rep.mu0, labels);
    if (!opt.standard_errors) break;
    se = asymptotic_ses(full.tmpl, ev, full.x);
    if (se->negative_definite || restart >= opt.max_restarts) break;
    run_start(starts++);
  }
  res.loglik = rep.loglik;
  res.k = static_cast<int>(tmpl.dim());
  res.n = ev.n_scored();
  if (res.n >= 3) {
    res.ic = information_criteria(res.loglik, res.k, res.n);
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    res.ic = {-2.0 * res.loglik + 2.0 * res.k, nan, nan};
  }
  res.catalog_hash = ev.catalog().content_hash();

  res.model = full.tmpl.instantiate(full.x);

  const auto bounds = tmpl.transform.near_bound(x);
  for (std::size_t i = 0; i < full.x.size(); ++i) {
    Estimate e{full.tmpl.params[i].name, full.x[i], std::nullopt, i < tmpl.dim(), i < tmpl.dim() && bounds[i]};
    res.boundary_warning = res.boundary_warning || e.near_bound;
    res.estimates.push_back(e);
  }
  if (se) {
    res.hessian_negative_definite = se->negative_definite;
    for (std::size_t i = 0; i < se->se.size(); ++i) res.estimates[i].se = se->se[i];
  }
  res.converged = std::isfinite(res.loglik) && (!opt.standard_errors || res.hessian_negative_definite);
  return res;
}

struct ComparisonRow {
  std::string model;
  double loglik{0.0};
  int k{0};
  InformationCriteria ic;
  bool best_aic{false};
  bool best_bic{false};
  bool best_hq{false};
};

/// Rows sorted by AIC (ascending); all fits must share catalog and n.
inline std::vector<ComparisonRow> compare_models(const std::vector<FitResult>& fits) {
  std::vector<ComparisonRow> rows;
  for (const auto& f : fits) {
    if (f.n != fits.front().n || f.catalog_hash != fits.front().catalog_hash) {
      throw std::domain_error("compare_models: fits come from different catalogs");
    }
    rows.push_back({f.model_name, f.loglik, f.k, information_criteria(f.loglik, f.k, f.n)});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.ic.aic < b.ic.aic; });
  if (rows.empty()) return rows;
  auto mark_best = [&rows](auto get, auto flag) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) best = std::min(best, get(r));
    for (auto& r : rows) {
      if (get(r) == best) r.*flag = true;
    }
  };
  mark_best([](const ComparisonRow& r) { return r.ic.aic; }, &ComparisonRow::best_aic);
  mark_best([](const ComparisonRow& r) { return r.ic.bic; }, &ComparisonRow::best_bic);
  mark_best([](const ComparisonRow& r) { return r.ic.hq; }, &ComparisonRow::best_hq);
  return rows;
}

}  // namespace sthawkes
