#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sthawkes/catalog.hpp"
#include "sthawkes/covariate.hpp"

namespace sthawkes {

enum class TemporalFamily { exponential, half_normal };

/// g1: separable; g2: separable with spatial shift m; g3: shifted and
/// nonseparable, spatial variance inflated by (1 + dt/beta)^gamma.
enum class KernelVariant { separable, shifted, nonseparable };

/// Which of alpha / phi depend on the covariate at both endpoints.
enum class Nonstationarity { none, alpha, phi, both };

struct KernelParams {
  double alpha{0.0};  // alpha, or alpha0 when alpha varies
  double beta{1.0};   // days
  double phi{1.0};    // km, or phi0 when phi varies
  double phi1{0.0};   // km per unit covariate
  double eta{0.0};    // shift, km east
  double xi{0.0};     // shift, km north
  double gamma{0.0};
  TemporalFamily temporal{TemporalFamily::exponential};
};

struct TriggeringKernel {
  KernelVariant variant{KernelVariant::separable};
  Nonstationarity nonstationary{Nonstationarity::none};
  KernelParams p;

  [[nodiscard]] bool alpha_varies() const {
    return nonstationary == Nonstationarity::alpha || nonstationary == Nonstationarity::both;
  }
  [[nodiscard]] bool phi_varies() const {
    return nonstationary == Nonstationarity::phi || nonstationary == Nonstationarity::both;
  }
  [[nodiscard]] bool has_shift() const { return variant != KernelVariant::separable; }
  [[nodiscard]] double gamma() const {
    return variant == KernelVariant::nonseparable ? p.gamma : 0.0;
  }
};

// ---------------------------------------------------------------- temporal

inline double temporal_density(double dt, double beta, TemporalFamily family) {
  if (dt <= 0.0) return 0.0;
  if (family == TemporalFamily::exponential) return std::exp(-dt / beta) / beta;
  return std::sqrt(2.0 / std::numbers::pi) / beta * std::exp(-dt * dt / (2.0 * beta * beta));
}

/// Temporal mass on lags [a, b], 0 <= a <= b.
inline double temporal_mass(double a, double b, double beta, TemporalFamily family) {
  a = std::max(a, 0.0);
  if (!(b > a)) return 0.0;
  if (family == TemporalFamily::exponential) {
    if (std::isinf(b)) return std::exp(-a / beta);
    return std::exp(-a / beta) * -std::expm1(-(b - a) / beta);
  }
  const double s = beta * std::numbers::sqrt2;
  if (std::isinf(b)) return std::erfc(a / s);
  return std::erfc(a / s) - std::erfc(b / s);
}

/// Spatial variance inflation of g3; 1 for separable kernels.
inline double dispersion(double dt, double beta, double gamma) {
  if (gamma == 0.0) return 1.0;
  return std::exp(gamma * std::log1p(dt / beta));
}

inline double gaussian2(double dx, double dy, double sigma2) {
  return std::exp(-(dx * dx + dy * dy) / (2.0 * sigma2)) / (2.0 * std::numbers::pi * sigma2);
}

// ------------------------------------------------------------- kernel forms

inline void require_positive_lag(double dt) {
  if (!(dt > 0.0)) throw std::domain_error("triggering kernel: temporal lag must be > 0");
}

inline double eval_g1(double dt, double dx, double dy, const KernelParams& p) {
  require_positive_lag(dt);
  return p.alpha * temporal_density(dt, p.beta, p.temporal) * gaussian2(dx, dy, p.phi * p.phi);
}

inline double eval_g2(double dt, double dx, double dy, const KernelParams& p) {
  require_positive_lag(dt);
  return p.alpha * temporal_density(dt, p.beta, p.temporal) *
         gaussian2(dx - p.eta, dy - p.xi, p.phi * p.phi);
}

inline double eval_g3(double dt, double dx, double dy, const KernelParams& p) {
  require_positive_lag(dt);
  const double c = dispersion(dt, p.beta, p.gamma);
  return p.alpha * temporal_density(dt, p.beta, p.temporal) *
         gaussian2(dx - p.eta, dy - p.xi, p.phi * p.phi * c);
}

inline double alpha_tilde(const KernelParams& p, double lp_target, double lp_source) {
  return p.alpha * 0.5 * (lp_target + lp_source);
}

inline double phi_tilde(const KernelParams& p, double lp_target, double lp_source) {
  return p.phi + p.phi1 * 0.5 * (lp_target + lp_source);
}

/// Separable kernel with alpha and/or phi replaced by their covariate-driven
/// versions; lp_* are standardized covariate values at the two endpoints.
inline double eval_g1_nonstationary(double dt, double dx, double dy, const KernelParams& p,
                                    Nonstationarity mode, double lp_target, double lp_source) {
  require_positive_lag(dt);
  const bool va = mode == Nonstationarity::alpha || mode == Nonstationarity::both;
  const bool vp = mode == Nonstationarity::phi || mode == Nonstationarity::both;
  const double a = va ? alpha_tilde(p, lp_target, lp_source) : p.alpha;
  const double phi = vp ? phi_tilde(p, lp_target, lp_source) : p.phi;
  if (!(phi > 0.0)) throw std::domain_error("nonstationary kernel: phi-tilde is not positive");
  return a * temporal_density(dt, p.beta, p.temporal) * gaussian2(dx, dy, phi * phi);
}

/// Same, looking the covariate up at target (s, t) and source (w, u) in lon/lat.
inline double eval_g1_nonstationary(double lon_s, double lat_s, double t, double lon_w,
                                    double lat_w, double u, const KernelParams& p,
                                    Nonstationarity mode, const CovariateField& field,
                                    const Projection& projection) {
  if (!(t > u)) throw std::domain_error("triggering kernel: temporal lag must be > 0");
  const double lp_s = field.lookup(lon_s, lat_s, t);
  const double lp_w = field.lookup(lon_w, lat_w, u);
  const Point s = projection.forward(lon_s, lat_s);
  const Point w = projection.forward(lon_w, lat_w);
  return eval_g1_nonstationary(t - u, s.x - w.x, s.y - w.y, p, mode, lp_s, lp_w);
}

/// Any kernel at lag (dt, dx, dy); zero for dt <= 0.
inline double evaluate(const TriggeringKernel& k, double dt, double dx, double dy,
                       double lp_target = 0.0, double lp_source = 0.0) {
  if (dt <= 0.0) return 0.0;
  if (k.nonstationary != Nonstationarity::none) {
    return eval_g1_nonstationary(dt, dx, dy, k.p, k.nonstationary, lp_target, lp_source);
  }
  switch (k.variant) {
    case KernelVariant::separable: return eval_g1(dt, dx, dy, k.p);
    case KernelVariant::shifted: return eval_g2(dt, dx, dy, k.p);
    case KernelVariant::nonseparable: return eval_g3(dt, dx, dy, k.p);
  }
  return 0.0;
}

/// Parameter checks. `lp_range` is the observed covariate range, needed for
/// the phi-tilde positivity guard of nonstationary kernels.
inline void validate_kernel(const TriggeringKernel& k,
                            std::optional<std::pair<double, double>> lp_range = std::nullopt) {
  const auto& p = k.p;
  if (!(p.beta > 0.0) || !std::isfinite(p.beta)) throw std::domain_error("kernel: beta must be > 0");
  if (!(std::abs(p.alpha) < 1.0)) throw std::domain_error("kernel: |alpha| must be < 1");
  if (k.phi_varies()) {
    if (!(p.phi1 > -p.phi)) throw std::domain_error("kernel: need phi1 > -phi0");
    if (lp_range) {
      const double lo = p.phi + p.phi1 * lp_range->first;
      const double hi = p.phi + p.phi1 * lp_range->second;
      if (!(lo > 0.0 && hi > 0.0)) {
        throw std::domain_error("kernel: phi-tilde not positive over covariate range");
      }
    }
  } else if (!(p.phi > 0.0) || !std::isfinite(p.phi)) {
    throw std::domain_error("kernel: phi must be > 0");
  }
  if (k.variant == KernelVariant::nonseparable && !(p.gamma > 0.0 && p.gamma <= 1.0)) {
    throw std::domain_error("kernel: gamma must lie in (0, 1]");
  }
  if (k.nonstationary != Nonstationarity::none && k.variant != KernelVariant::separable) {
    throw std::domain_error("kernel: nonstationary forms are defined for the separable kernel");
  }
}

/// k x k kernel array indexed (source mark, target mark); empty entries mean
/// no triggering along that edge.
class KernelMatrix {
 public:
  KernelMatrix() = default;
  explicit KernelMatrix(int n_marks)
      : n_(n_marks), entries_(static_cast<std::size_t>(n_marks * n_marks)) {}

  [[nodiscard]] int n_marks() const { return n_; }
  [[nodiscard]] const std::optional<TriggeringKernel>& at(int source, int target) const {
    return entries_[static_cast<std::size_t>(source * n_ + target)];
  }
  std::optional<TriggeringKernel>& at(int source, int target) {
    return entries_[static_cast<std::size_t>(source * n_ + target)];
  }
  void set(int source, int target, TriggeringKernel k) { at(source, target) = k; }

  /// Productivity matrix A with A[target][source] = alpha (alpha0 for
  /// nonstationary alpha, an upper bound since the covariate is <= 1).
  [[nodiscard]] std::vector<std::vector<double>> productivity() const {
    std::vector<std::vector<double>> a(static_cast<std::size_t>(n_),
                                       std::vector<double>(static_cast<std::size_t>(n_), 0.0));
    for (int s = 0; s < n_; ++s) {
      for (int t = 0; t < n_; ++t) {
        if (const auto& k = at(s, t)) a[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] = k->p.alpha;
      }
    }
    return a;
  }

  [[nodiscard]] double max_beta() const {
    double b = 0.0;
    for (const auto& e : entries_) {
      if (e) b = std::max(b, e->p.beta);
    }
    return b;
  }

  [[nodiscard]] bool any() const {
    return std::any_of(entries_.begin(), entries_.end(), [](const auto& e) { return e.has_value(); });
  }

  [[nodiscard]] bool has_nonstationary() const {
    return std::any_of(entries_.begin(), entries_.end(), [](const auto& e) {
      return e && e->nonstationary != Nonstationarity::none;
    });
  }

 private:
  int n_{0};
  std::vector<std::optional<TriggeringKernel>> entries_;
};

/// Sum of g_{mark(i), target}(s - s_i, t - t_i) over events with
/// 0 < t - t_i <= horizon. `lp` supplies covariate values for nonstationary
/// kernels as lp(lon, lat, t).
template <typename CovariateLookup>
double kernel_sum(int target_mark, Point s, double t, const EventCatalog& catalog,
                  const KernelMatrix& kernels, double horizon, CovariateLookup&& lp) {
  const auto& ev = catalog.events();
  const auto end = std::lower_bound(ev.begin(), ev.end(), t,
                                    [](const EventRecord& e, double v) { return e.t < v; });
  double lp_target = std::numeric_limits<double>::quiet_NaN();
  if (kernels.has_nonstationary()) {
    const auto [lon, lat] = catalog.projection().inverse(s);
    lp_target = lp(lon, lat, t);
  }
  double acc = 0.0;
  for (auto it = end; it != ev.begin();) {
    --it;
    const double dt = t - it->t;
    if (dt > horizon) break;
    const auto& k = kernels.at(it->mark, target_mark);
    if (!k) continue;
    double lp_source = 0.0;
    if (k->nonstationary != Nonstationarity::none) lp_source = lp(it->lon, it->lat, it->t);
    acc += evaluate(*k, dt, s.x - it->x, s.y - it->y, lp_target, lp_source);
  }
  return acc;
}

inline double kernel_sum(int target_mark, Point s, double t, const EventCatalog& catalog,
                         const KernelMatrix& kernels,
                         double horizon = std::numeric_limits<double>::infinity(),
                         const CovariateField* field = nullptr) {
  return kernel_sum(target_mark, s, t, catalog, kernels, horizon,
                    [field](double lon, double lat, double tt) {
                      if (!field) throw std::domain_error("kernel_sum: covariate field required");
                      return field->lookup(lon, lat, tt);
                    });
}

}  // namespace sthawkes
