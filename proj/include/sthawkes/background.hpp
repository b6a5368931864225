#pragma once

#include <memory>
#include <stdexcept>

#include "sthawkes/covariate.hpp"

namespace sthawkes {

enum class BackgroundVariant { constant, covariate_linear, time_linear };

/// mu(s, t) per km^2 per day: constant mu0, mu0 + mu1 X(s, t) with a
/// standardized covariate, or mu0 + mu1 t / time_scale.
struct BackgroundSpec {
  BackgroundVariant variant{BackgroundVariant::constant};
  double mu0{0.0};
  double mu1{0.0};
  double time_scale{1.0};
  std::shared_ptr<const CovariateField> covariate;

  [[nodiscard]] bool needs_covariate() const {
    return variant == BackgroundVariant::covariate_linear;
  }
};

/// mu given the covariate value already looked up at (s, t).
inline double eval_mu(const BackgroundSpec& spec, double covariate_value, double t) {
  switch (spec.variant) {
    case BackgroundVariant::constant: return spec.mu0;
    case BackgroundVariant::covariate_linear: return spec.mu0 + spec.mu1 * covariate_value;
    case BackgroundVariant::time_linear: return spec.mu0 + spec.mu1 * (t / spec.time_scale);
  }
  return spec.mu0;
}

inline double eval_mu(const BackgroundSpec& spec, double lon, double lat, double t) {
  double x = 0.0;
  if (spec.needs_covariate()) {
    if (!spec.covariate) throw std::domain_error("background: covariate required");
    x = spec.covariate->lookup(lon, lat, t);
  }
  return eval_mu(spec, x, t);
}

/// Upper bound of mu over the covariate range and [t0, t1].
inline double background_upper_bound(const BackgroundSpec& spec, double t0, double t1) {
  switch (spec.variant) {
    case BackgroundVariant::constant: return spec.mu0;
    case BackgroundVariant::covariate_linear: {
      if (!spec.covariate) throw std::domain_error("background: covariate required");
      return spec.mu0 + std::max(spec.mu1 * spec.covariate->min_value(),
                                 spec.mu1 * spec.covariate->max_value());
    }
    case BackgroundVariant::time_linear:
      return std::max(eval_mu(spec, 0.0, t0), eval_mu(spec, 0.0, t1));
  }
  return spec.mu0;
}

}  // namespace sthawkes
