#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "sthawkes/sthawkes.hpp"

namespace testing_support {

using namespace sthawkes;

inline TriggeringKernel g1(double alpha, double beta, double phi) {
  TriggeringKernel k;
  k.p.alpha = alpha;
  k.p.beta = beta;
  k.p.phi = phi;
  return k;
}

inline TriggeringKernel g2(double alpha, double beta, double phi, double eta, double xi) {
  TriggeringKernel k = g1(alpha, beta, phi);
  k.variant = KernelVariant::shifted;
  k.p.eta = eta;
  k.p.xi = xi;
  return k;
}

inline TriggeringKernel g3(double alpha, double beta, double phi, double eta, double xi, double gamma) {
  TriggeringKernel k = g2(alpha, beta, phi, eta, xi);
  k.variant = KernelVariant::nonseparable;
  k.p.gamma = gamma;
  return k;
}

inline ModelSpec univariate(double mu, const TriggeringKernel& k) {
  ModelSpec m(1);
  m.background[0].mu0 = mu;
  m.kernels.set(0, 0, k);
  return m;
}

/// Uniform events in [0, w] x [0, h] x [0, T), with lon/lat filled by the identity projection.
inline EventCatalog random_catalog(std::size_t n, int marks, double w, double h, double T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<EventRecord> ev;
  const Projection proj(0.0, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    EventRecord e;
    e.mark = static_cast<int>(i % static_cast<std::size_t>(marks));
    e.x = u(rng) * w;
    e.y = u(rng) * h;
    e.t = u(rng) * T;
    const auto [lon, lat] = proj.inverse(e.location());
    e.lon = lon;
    e.lat = lat;
    ev.push_back(e);
  }
  return EventCatalog::from_unsorted(std::move(ev), marks, T, SpatialWindow::rectangle(0, 0, w, h), proj);
}

inline EventCatalog simulate_on_rect(const ModelSpec& m, double w, double h, double T, std::uint64_t seed,
                                     EdgePolicy edge = EdgePolicy::clip) {
  SimConfig cfg;
  cfg.model = m;
  cfg.window = SpatialWindow::rectangle(0, 0, w, h);
  cfg.T = T;
  cfg.seed = seed;
  cfg.edge = edge;
  cfg.projection = Projection(0.0, 0.0);
  return simulate(cfg);
}

/// Mass of N(c, s^2) on [a, b].
inline double interval_mass(double a, double b, double c, double s) {
  return 0.5 * (std::erf((b - c) / (s * std::numbers::sqrt2)) - std::erf((a - c) / (s * std::numbers::sqrt2)));
}

/// Brute-force log-likelihood for constant backgrounds and stationary g1/g2
/// kernels on a rectangular window over [0, T): every pair is visited and
/// the integral uses closed forms.
inline double naive_loglik(const EventCatalog& c, const ModelSpec& m) {
  const auto& ev = c.events();
  const auto& bb = c.window().bbox();
  double ll = 0.0;
  for (std::size_t j = 0; j < ev.size(); ++j) {
    double lam = m.background[static_cast<std::size_t>(ev[j].mark)].mu0;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      const double dt = ev[j].t - ev[i].t;
      if (!(dt > 0.0)) continue;
      const auto& k = m.kernels.at(ev[i].mark, ev[j].mark);
      if (!k) continue;
      const double ex = ev[j].x - ev[i].x - k->p.eta, ey = ev[j].y - ev[i].y - k->p.xi;
      const double phi2 = k->p.phi * k->p.phi;
      lam += k->p.alpha * std::exp(-dt / k->p.beta) / k->p.beta * std::exp(-(ex * ex + ey * ey) / (2.0 * phi2)) /
             (2.0 * std::numbers::pi * phi2);
    }
    ll += std::log(lam);
  }
  for (int k = 0; k < m.n_marks; ++k) ll -= m.background[static_cast<std::size_t>(k)].mu0 * bb.area() * c.T();
  for (const auto& e : ev) {
    for (int k = 0; k < m.n_marks; ++k) {
      const auto& ker = m.kernels.at(e.mark, k);
      if (!ker) continue;
      const auto& p = ker->p;
      const double time = -std::expm1(-(c.T() - e.t) / p.beta);
      const double space = interval_mass(bb.x0, bb.x1, e.x + p.eta, p.phi) * interval_mass(bb.y0, bb.y1, e.y + p.xi, p.phi);
      ll -= p.alpha * time * space;
    }
  }
  return ll;
}

}  // namespace testing_support
