#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sthawkes/estimation.hpp"
#include "sthawkes/likelihood.hpp"
#include "sthawkes/model.hpp"

namespace sthawkes {

using nlohmann::json;

inline constexpr const char* kVersion = "0.3.0";

namespace detail {

// JSON has no inf/nan; they are written as null and read back as NaN.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline double number_of(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

template <typename E>
struct EnumNames;

template <>
struct EnumNames<TemporalFamily> {
  static constexpr const char* names[] = {"exponential", "half_normal"};
};
template <>
struct EnumNames<KernelVariant> {
  static constexpr const char* names[] = {"g1", "g2", "g3"};
};
template <>
struct EnumNames<Nonstationarity> {
  static constexpr const char* names[] = {"none", "alpha", "phi", "both"};
};
template <>
struct EnumNames<BackgroundVariant> {
  static constexpr const char* names[] = {"constant", "covariate_linear", "time_linear"};
};

template <typename E>
std::string enum_name(E e) {
  return EnumNames<E>::names[static_cast<int>(e)];
}

template <typename E>
E enum_from(const std::string& s) {
  int i = 0;
  for (const char* n : EnumNames<E>::names) {
    if (s == n) return static_cast<E>(i);
    ++i;
  }
  throw std::invalid_argument("unknown enum value '" + s + "'");
}

}  // namespace detail

inline json to_json(const LikelihoodReport& r) {
  json comps = json::array();
  for (const auto& c : r.components) {
    comps.push_back({{"background", detail::number(c.background)},
                     {"marginal", detail::number(c.marginal)},
                     {"cross", detail::number(c.cross)}});
  }
  json mu = json::array();
  for (double v : r.mu0) mu.push_back(detail::number(v));
  return {{"loglik", detail::number(r.loglik)},
          {"event_term", detail::number(r.event_term)},
          {"integral_term", detail::number(r.integral_term)},
          {"penalty", r.penalty},
          {"finite", r.finite},
          {"diagnostic", r.diagnostic},
          {"components", comps},
          {"mu0", mu},
          {"n_events", r.n_events},
          {"n_cells", r.n_cells},
          {"n_steps", r.n_steps},
          {"total_measure", r.total_measure}};
}

inline json to_json(const ModelSpec& m) {
  json bg = json::array();
  for (int k = 0; k < m.n_marks; ++k) {
    const auto& b = m.background[static_cast<std::size_t>(k)];
    bg.push_back({{"variant", detail::enum_name(b.variant)},
                  {"mu0", b.mu0},
                  {"mu1", b.mu1},
                  {"time_scale", b.time_scale},
                  {"profiled", m.is_profiled(k)}});
  }
  json kernels = json::array();
  for (int s = 0; s < m.n_marks; ++s) {
    for (int t = 0; t < m.n_marks; ++t) {
      const auto& k = m.kernels.at(s, t);
      if (!k) continue;
      kernels.push_back({{"source", s},
                         {"target", t},
                         {"variant", detail::enum_name(k->variant)},
                         {"nonstationary", detail::enum_name(k->nonstationary)},
                         {"temporal", detail::enum_name(k->p.temporal)},
                         {"alpha", k->p.alpha},
                         {"beta", k->p.beta},
                         {"phi", k->p.phi},
                         {"phi1", k->p.phi1},
                         {"eta", k->p.eta},
                         {"xi", k->p.xi},
                         {"gamma", k->p.gamma}});
    }
  }
  return {{"n_marks", m.n_marks}, {"background", bg}, {"kernels", kernels}};
}

/// Rebuilds a model; `covariate` is attached wherever the structure needs one.
inline ModelSpec model_from_json(const json& j, std::shared_ptr<const CovariateField> covariate = nullptr) {
  ModelSpec m(j.at("n_marks").get<int>());
  const auto& bg = j.at("background");
  if (bg.size() != static_cast<std::size_t>(m.n_marks)) throw std::invalid_argument("model json: background count");
  for (std::size_t k = 0; k < bg.size(); ++k) {
    auto& b = m.background[k];
    b.variant = detail::enum_from<BackgroundVariant>(bg[k].at("variant").get<std::string>());
    b.mu0 = bg[k].at("mu0").get<double>();
    b.mu1 = bg[k].value("mu1", 0.0);
    b.time_scale = bg[k].value("time_scale", 1.0);
    m.profiled[k] = bg[k].value("profiled", false);
    if (b.needs_covariate()) b.covariate = covariate;
  }
  for (const auto& e : j.at("kernels")) {
    TriggeringKernel k;
    k.variant = detail::enum_from<KernelVariant>(e.at("variant").get<std::string>());
    k.nonstationary = detail::enum_from<Nonstationarity>(e.value("nonstationary", std::string("none")));
    k.p.temporal = detail::enum_from<TemporalFamily>(e.value("temporal", std::string("exponential")));
    k.p.alpha = e.at("alpha").get<double>();
    k.p.beta = e.at("beta").get<double>();
    k.p.phi = e.at("phi").get<double>();
    k.p.phi1 = e.value("phi1", 0.0);
    k.p.eta = e.value("eta", 0.0);
    k.p.xi = e.value("xi", 0.0);
    k.p.gamma = e.value("gamma", 0.0);
    const int s = e.at("source").get<int>(), t = e.at("target").get<int>();
    if (s < 0 || t < 0 || s >= m.n_marks || t >= m.n_marks) throw std::invalid_argument("model json: kernel index");
    m.kernels.set(s, t, k);
    if (k.nonstationary != Nonstationarity::none) m.kernel_covariate = covariate;
  }
  return m;
}

inline json to_json(const FitResult& f) {
  json est = json::array();
  for (const auto& e : f.estimates) {
    est.push_back({{"name", e.name},
                   {"value", detail::number(e.value)},
                   {"se", e.se ? detail::number(*e.se) : json(nullptr)},
                   {"counted", e.counted},
                   {"near_bound", e.near_bound}});
  }
  json trace = json::array();
  for (const auto& t : f.trace) {
    trace.push_back({{"start", t.start},
                     {"loglik", detail::number(t.loglik)},
                     {"evaluations", t.evaluations},
                     {"stages", t.stages}});
  }
  return {{"model", f.model_name},
          {"estimates", est},
          {"loglik", detail::number(f.loglik)},
          {"k", f.k},
          {"n", f.n},
          {"aic", detail::number(f.ic.aic)},
          {"bic", detail::number(f.ic.bic)},
          {"hq", detail::number(f.ic.hq)},
          {"converged", f.converged},
          {"hessian_negative_definite", f.hessian_negative_definite},
          {"boundary_warning", f.boundary_warning},
          {"trace", trace},
          {"catalog_hash", std::to_string(f.catalog_hash)},
          {"spec", to_json(f.model)}};
}

inline FitResult fit_from_json(const json& j, std::shared_ptr<const CovariateField> covariate = nullptr) {
  FitResult f;
  f.model_name = j.at("model").get<std::string>();
  for (const auto& e : j.at("estimates")) {
    Estimate est{e.at("name").get<std::string>(), detail::number_of(e.at("value")), std::nullopt};
    if (!e.at("se").is_null()) est.se = e.at("se").get<double>();
    est.counted = e.value("counted", true);
    est.near_bound = e.value("near_bound", false);
    f.estimates.push_back(est);
  }
  f.loglik = detail::number_of(j.at("loglik"));
  f.k = j.at("k").get<int>();
  f.n = j.at("n").get<std::size_t>();
  f.ic = {detail::number_of(j.at("aic")), detail::number_of(j.at("bic")), detail::number_of(j.at("hq"))};
  f.converged = j.value("converged", false);
  f.hessian_negative_definite = j.value("hessian_negative_definite", false);
  f.boundary_warning = j.value("boundary_warning", false);
  f.catalog_hash = std::stoull(j.at("catalog_hash").get<std::string>());
  for (const auto& t : j.value("trace", json::array())) {
    f.trace.push_back({t.at("start").get<int>(), detail::number_of(t.at("loglik")), t.at("evaluations").get<int>(),
                       t.at("stages").get<int>()});
  }
  if (j.contains("spec")) f.model = model_from_json(j.at("spec"), std::move(covariate));
  return f;
}

}  // namespace sthawkes
