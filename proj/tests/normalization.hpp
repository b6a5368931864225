#pragma once

#include <cmath>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "sthawkes/kernels.hpp"

namespace testing_support {

/// Quadrature of a kernel over (0, inf) x R^2: 60-point Gauss-Legendre in
/// each spatial axis over +-10 standard deviations about the shift (tail mass
/// ~1e-22), exp-sinh over the time half line.
inline double numeric_kernel_integral(const sthawkes::TriggeringKernel& k) {
  using boost::math::quadrature::gauss;
  const auto& p = k.p;
  auto space = [&](double dt) {
    const double sd = p.phi * std::sqrt(sthawkes::dispersion(dt, p.beta, k.gamma()));
    const double L = 10.0 * sd;
    auto row = [&](double dy) {
      auto f = [&](double dx) { return sthawkes::evaluate(k, dt, dx, dy); };
      return gauss<double, 60>::integrate(f, p.eta - L, p.eta + L);
    };
    return gauss<double, 60>::integrate(row, p.xi - L, p.xi + L);
  };
  boost::math::quadrature::exp_sinh<double> half_line;
  return half_line.integrate(space, 1e-11);
}

}  // namespace testing_support
