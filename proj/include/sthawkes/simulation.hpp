#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sthawkes/catalog.hpp"
#include "sthawkes/constraints.hpp"
#include "sthawkes/model.hpp"

namespace sthawkes {

enum class SimMethod { branching, thinning };
enum class EdgePolicy { clip, none };

struct SimConfig {
  ModelSpec model;
  SpatialWindow window;
  double T{0.0};
  std::uint64_t seed{1};
  SimMethod method{SimMethod::branching};
  EdgePolicy edge{EdgePolicy::clip};
  Projection projection;
  std::vector<std::string> mark_names;
  std::size_t max_events{2'000'000};
};

namespace detail {

inline void check_simulable(const SimConfig& cfg) {
  if (!(cfg.T >= 0.0)) throw std::invalid_argument("simulate: T must be >= 0");
  cfg.model.validate();
  for (const auto& b : cfg.model.background) {
    if (b.mu0 < 0.0 && b.variant == BackgroundVariant::constant) {
      throw std::domain_error("simulate: negative background rate");
    }
  }
  const double r = spectral_radius(cfg.model.kernels.productivity());
  if (!(r < 1.0)) {
    throw std::domain_error("simulate: unstable model (spectral radius " + std::to_string(r) + ")");
  }
}

inline Point uniform_in_bbox(const BoundingBox& bb, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {bb.x0 + u(rng) * bb.width(), bb.y0 + u(rng) * bb.height()};
}

inline double draw_lag(const KernelParams& p, std::mt19937_64& rng) {
  if (p.temporal == TemporalFamily::exponential) return std::exponential_distribution<double>(1.0 / p.beta)(rng);
  return std::abs(std::normal_distribution<double>(0.0, p.beta)(rng));
}

inline double covariate_at(const std::shared_ptr<const CovariateField>& f, const Projection& proj, Point s, double t) {
  const auto [lon, lat] = proj.inverse(s);
  return f->lookup(lon, lat, t);
}

/// Generation 0: inhomogeneous Poisson background by thinning inside the bbox.
inline std::vector<EventRecord> background_events(const SimConfig& cfg, std::mt19937_64& rng) {
  std::vector<EventRecord> out;
  const auto& bb = cfg.window.bbox();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < cfg.model.n_marks; ++k) {
    const auto& bg = cfg.model.background[static_cast<std::size_t>(k)];
    const double bound = std::max(background_upper_bound(bg, 0.0, cfg.T), 0.0);
    if (bound == 0.0 || cfg.T == 0.0) continue;
    const double mean = bound * bb.area() * cfg.T;
    const auto n = std::poisson_distribution<long long>(mean)(rng);
    for (long long i = 0; i < n; ++i) {
      const Point s = uniform_in_bbox(bb, rng);
      const double t = u(rng) * cfg.T;
      const double acc = u(rng);
      if (!cfg.window.contains(s)) continue;
      double mu = bg.mu0;
      if (bg.variant != BackgroundVariant::constant) {
        const double x = bg.needs_covariate() ? covariate_at(bg.covariate, cfg.projection, s, t) : 0.0;
        mu = eval_mu(bg, x, t);
      }
      if (acc * bound >= mu) continue;
      EventRecord e;
      e.mark = k;
      e.t = t;
      e.x = s.x;
      e.y = s.y;
      out.push_back(e);
    }
  }
  return out;
}

inline EventCatalog finish_catalog(std::vector<EventRecord> events, const SimConfig& cfg, bool enlarge) {
  SpatialWindow window = cfg.window;
  double T = cfg.T;
  if (enlarge) {
    BoundingBox bb = cfg.window.bbox();
    for (const auto& e : events) {
      bb.x0 = std::min(bb.x0, e.x);
      bb.x1 = std::max(bb.x1, e.x);
      bb.y0 = std::min(bb.y0, e.y);
      bb.y1 = std::max(bb.y1, e.y);
      T = std::max(T, e.t);
    }
    const double pad = 1e-6 * std::max(1.0, std::max(bb.width(), bb.height()));
    window = SpatialWindow::rectangle(bb.x0 - pad, bb.y0 - pad, bb.x1 + pad, bb.y1 + pad);
    T = std::nextafter(T, std::numeric_limits<double>::infinity());
  }
  for (auto& e : events) {
    const auto [lon, lat] = cfg.projection.inverse(e.location());
    e.lon = lon;
    e.lat = lat;
  }
  return EventCatalog::from_unsorted(std::move(events), cfg.model.n_marks, T, std::move(window), cfg.projection,
                                     cfg.mark_names);
}

}  // namespace detail

/// Cluster-process sampler. With EdgePolicy::clip, offspring outside
/// window x [0, T) are discarded along with their descendants; with
/// EdgePolicy::none every descendant is kept and the output window and T are
/// enlarged to contain them.
inline EventCatalog simulate_branching(const SimConfig& cfg) {
  detail::check_simulable(cfg);
  if (cfg.model.kernels.has_nonstationary()) {
    throw std::domain_error("simulate_branching: nonstationary kernels need the thinning sampler");
  }
  std::mt19937_64 rng(cfg.seed);
  std::vector<EventRecord> events = detail::background_events(cfg, rng);
  const int K = cfg.model.n_marks;
  std::normal_distribution<double> z(0.0, 1.0);
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events.size() > cfg.max_events) throw std::runtime_error("simulate_branching: event cap exceeded");
    const EventRecord parent = events[i];
    for (int k = 0; k < K; ++k) {
      const auto& ker = cfg.model.kernels.at(parent.mark, k);
      if (!ker || ker->p.alpha <= 0.0) continue;
      const auto& p = ker->p;
      const auto n = std::poisson_distribution<int>(p.alpha)(rng);
      for (int c = 0; c < n; ++c) {
        const double dt = detail::draw_lag(p, rng);
        const double sd = p.phi * std::sqrt(dispersion(dt, p.beta, ker->gamma()));
        EventRecord e;
        e.mark = k;
        e.t = parent.t + dt;
        e.x = parent.x + p.eta + sd * z(rng);
        e.y = parent.y + p.xi + sd * z(rng);
        if (cfg.edge == EdgePolicy::clip && (e.t >= cfg.T || !cfg.window.contains(e.location()))) continue;
        events.push_back(e);
      }
    }
  }
  return detail::finish_catalog(std::move(events), cfg, cfg.edge == EdgePolicy::none);
}

/// Sequential (Ogata) sampler. The dominating process is a mixture of the
/// background bound and one component per past event whose temporal rate is
/// non-increasing, so the bound is fixed between candidates; each component
/// proposes from its own spatial Gaussian (or a wider envelope when the range
/// depends on the covariate).
inline EventCatalog simulate_thinning(const SimConfig& cfg) {
  detail::check_simulable(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  const int K = cfg.model.n_marks;
  const auto& bb = cfg.window.bbox();
  const auto& field = cfg.model.kernel_covariate;
  double lp_lo = 0.0, lp_hi = 0.0;
  if (field) {
    lp_lo = field->min_value();
    lp_hi = field->max_value();
  }
  std::vector<double> mu_bound(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    mu_bound[static_cast<std::size_t>(k)] =
        std::max(background_upper_bound(cfg.model.background[static_cast<std::size_t>(k)], 0.0, cfg.T), 0.0);
  }
  const double horizon = 40.0 * std::max(cfg.model.kernels.max_beta(), 1e-300);

  struct Component {
    std::size_t parent;
    int target;
    double weight;  // alpha bound x spatial envelope factor
  };
  std::vector<EventRecord> events;
  std::vector<double> lp_event;
  std::vector<Component> comps;
  std::vector<double> rates;
  double t = 0.0;
  std::size_t oldest = 0;
  while (true) {
    if (events.size() > cfg.max_events) throw std::runtime_error("simulate_thinning: event cap exceeded");
    while (oldest < events.size() && t - events[oldest].t > horizon) ++oldest;
    comps.clear();
    rates.clear();
    double total = 0.0;
    for (int k = 0; k < K; ++k) {
      const double r = mu_bound[static_cast<std::size_t>(k)] * bb.area();
      rates.push_back(r);
      total += r;
    }
    for (std::size_t i = oldest; i < events.size(); ++i) {
      for (int k = 0; k < K; ++k) {
        const auto& ker = cfg.model.kernels.at(events[i].mark, k);
        if (!ker) continue;
        const auto& p = ker->p;
        double a = p.alpha, w = 1.0;
        if (ker->nonstationary != Nonstationarity::none) {
          const double m_lo = 0.5 * (lp_lo + lp_event[i]), m_hi = 0.5 * (lp_hi + lp_event[i]);
          if (ker->alpha_varies()) a = std::max(p.alpha * m_lo, p.alpha * m_hi);
          if (ker->phi_varies()) {
            const double s_lo = std::min(p.phi + p.phi1 * m_lo, p.phi + p.phi1 * m_hi);
            const double s_hi = std::max(p.phi + p.phi1 * m_lo, p.phi + p.phi1 * m_hi);
            w = (s_hi * s_hi) / (s_lo * s_lo);
          }
        }
        const double dt = t - events[i].t;
        const double density = dt > 0.0 ? temporal_density(dt, p.beta, p.temporal)
                                         : temporal_density(std::numeric_limits<double>::min(), p.beta, p.temporal);
        const double r = std::max(a, 0.0) * w * density;
        if (r <= 0.0) continue;
        comps.push_back({i, k, std::max(a, 0.0) * w});
        rates.push_back(r);
        total += r;
      }
    }
    if (!(total > 0.0)) break;
    if (!std::isfinite(total)) throw std::runtime_error("simulate_thinning: intensity bound overflow");
    const double t_old = t;
    t += std::exponential_distribution<double>(total)(rng);
    if (t >= cfg.T) break;
    // pick a component proportional to its bound
    double pick = u(rng) * total;
    std::size_t c = 0;
    while (c + 1 < rates.size() && pick >= rates[c]) {
      pick -= rates[c];
      ++c;
    }
    EventRecord e;
    e.t = t;
    if (c < static_cast<std::size_t>(K)) {
      const int k = static_cast<int>(c);
      const Point s = detail::uniform_in_bbox(bb, rng);
      if (!cfg.window.contains(s)) continue;
      const auto& bg = cfg.model.background[c];
      double mu = bg.mu0;
      if (bg.variant != BackgroundVariant::constant) {
        const double x = bg.needs_covariate() ? detail::covariate_at(bg.covariate, cfg.projection, s, t) : 0.0;
        mu = eval_mu(bg, x, t);
      }
      if (u(rng) * mu_bound[c] >= mu) continue;
      e.mark = k;
      e.x = s.x;
      e.y = s.y;
    } else {
      const Component& cp = comps[c - static_cast<std::size_t>(K)];
      const EventRecord& par = events[cp.parent];
      const auto& ker = *cfg.model.kernels.at(par.mark, cp.target);
      const auto& p = ker.p;
      const double dt = t - par.t, dt_old = std::max(t_old - par.t, std::numeric_limits<double>::min());
      const double ratio = temporal_density(dt, p.beta, p.temporal) / temporal_density(dt_old, p.beta, p.temporal);
      const double acc_t = u(rng);
      if (ker.nonstationary == Nonstationarity::none) {
        const double sd = p.phi * std::sqrt(dispersion(dt, p.beta, ker.gamma()));
        const Point s{par.x + p.eta + sd * z(rng), par.y + p.xi + sd * z(rng)};
        if (acc_t >= ratio || !cfg.window.contains(s)) continue;
        e.x = s.x;
        e.y = s.y;
      } else {
        const double m_lo = 0.5 * (lp_lo + lp_event[cp.parent]), m_hi = 0.5 * (lp_hi + lp_event[cp.parent]);
        const double s_hi = ker.phi_varies() ? std::max(p.phi + p.phi1 * m_lo, p.phi + p.phi1 * m_hi) : p.phi;
        const Point s{par.x + s_hi * z(rng), par.y + s_hi * z(rng)};
        if (!cfg.window.contains(s)) continue;
        const double lp_t = detail::covariate_at(field, cfg.projection, s, t);
        const double dx = s.x - par.x, dy = s.y - par.y;
        const double a_true = ker.alpha_varies() ? alpha_tilde(p, lp_t, lp_event[cp.parent]) : p.alpha;
        const double phi_true = ker.phi_varies() ? phi_tilde(p, lp_t, lp_event[cp.parent]) : p.phi;
        const double target = a_true * gaussian2(dx, dy, phi_true * phi_true);
        const double envelope = cp.weight * gaussian2(dx, dy, s_hi * s_hi);
        if (acc_t >= ratio * target / envelope) continue;
        e.x = s.x;
        e.y = s.y;
      }
      e.mark = cp.target;
    }
    events.push_back(e);
    lp_event.push_back(field ? detail::covariate_at(field, cfg.projection, e.location(), t) : 0.0);
  }
  return detail::finish_catalog(std::move(events), cfg, false);
}

inline EventCatalog simulate(const SimConfig& cfg) {
  if (cfg.method == SimMethod::thinning || cfg.model.kernels.has_nonstationary()) return simulate_thinning(cfg);
  return simulate_branching(cfg);
}

}  // namespace sthawkes
