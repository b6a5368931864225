#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sthawkes/catalog.hpp"
#include "sthawkes/model.hpp"
#include "sthawkes/quadrature.hpp"

namespace sthawkes {

/// Model-family flags: bivariate, cross-triggering, non-decreasing (shifted
/// cross kernels), nonseparable.
struct PresetInfo {
  std::string name;
  int n_marks;
  bool bivariate;
  bool cross_triggering;
  bool non_decreasing;
  bool nonseparable;
  std::string description;
};

inline const std::vector<PresetInfo>& preset_table() {
  static const std::vector<PresetInfo> table{
      {"poisson-const", 1, false, false, false, false, "homogeneous Poisson"},
      {"m1-1", 1, false, false, false, false, "Poisson, covariate background"},
      {"m1-2", 1, false, false, false, false, "Poisson, time-linear background"},
      {"m1-3", 1, false, false, false, false, "nonstationary phi, covariate background"},
      {"m1-4", 1, false, false, false, false, "nonstationary phi, constant background"},
      {"m1-5", 1, false, false, false, false, "half-normal temporal kernel, covariate background"},
      {"m2-1", 1, false, false, false, false, "univariate g1 on merged marks"},
      {"m2-2", 2, true, false, false, false, "bivariate g1, no cross-triggering"},
      {"m2-3", 2, true, true, false, false, "bivariate g1 with common cross kernel scales"},
      {"m2-4", 2, true, true, true, false, "g1 marginals, g2 cross kernels sharing +m"},
      {"m2-5", 2, true, true, true, false, "g1 marginals, g2 cross kernels with +m / -m"},
      {"m2-6", 2, true, true, true, true, "g3 everywhere, cross shifts as m2-5"},
  };
  return table;
}

inline const PresetInfo& preset_info(const std::string& name) {
  for (const auto& p : preset_table()) {
    if (p.name == name) return p;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

/// Data-dependent defaults for building a template.
struct PresetContext {
  int n_marks{1};
  std::vector<double> poisson_mu;  // n_k / (area x duration)
  Point shift{0.0, 0.0};           // mean(mark 1) - mean(mark 0)
  double time_scale{1.0};
  std::shared_ptr<const CovariateField> covariate;
  std::vector<std::string> mark_labels{"b", "f"};
};

inline PresetContext preset_context(const EventCatalog& catalog, const QuadratureGrid& grid,
                                    std::shared_ptr<const CovariateField> covariate = nullptr) {
  PresetContext ctx;
  ctx.n_marks = catalog.n_marks();
  ctx.time_scale = catalog.T() > 0.0 ? catalog.T() : 1.0;
  ctx.covariate = std::move(covariate);
  std::vector<double> n(static_cast<std::size_t>(ctx.n_marks), 0.0), sx(n), sy(n);
  for (const auto& e : catalog.events()) {
    if (e.t < grid.t_begin() || e.t >= grid.t_end()) continue;
    const auto k = static_cast<std::size_t>(e.mark);
    n[k] += 1.0;
    sx[k] += e.x;
    sy[k] += e.y;
  }
  for (double c : n) ctx.poisson_mu.push_back(std::max(c, 1.0) / grid.total_measure());
  if (ctx.n_marks >= 2 && n[0] > 0 && n[1] > 0) ctx.shift = {sx[1] / n[1] - sx[0] / n[0], sy[1] / n[1] - sy[0] / n[0]};
  return ctx;
}

namespace detail {

struct TemplateBuilder {
  ModelTemplate t;
  std::vector<TransformBlock> blocks;

  std::size_t add(std::string name, std::vector<SlotRef> slots, TransformBlock block, double init) {
    const std::size_t idx = t.params.size();
    t.params.push_back({std::move(name), std::move(slots)});
    block.indices = {idx};
    blocks.push_back(block);
    t.initial.push_back(init);
    return idx;
  }

  void add_log(std::string name, std::vector<SlotRef> slots, double init) {
    add(std::move(name), std::move(slots), {TransformKind::log, {}}, init);
  }
  void add_unit(std::string name, std::vector<SlotRef> slots, double init) {
    add(std::move(name), std::move(slots), {TransformKind::logit, {}, 0.0, 1.0}, init);
  }
  void add_free(std::string name, std::vector<SlotRef> slots, double scale, double init) {
    add(std::move(name), std::move(slots), {TransformKind::identity, {}, 0.0, 1.0, scale}, init);
  }

  ModelTemplate finish() {
    t.transform = TransformLayer(t.params.size(), blocks);
    return t;
  }
};

inline TriggeringKernel kernel_of(KernelVariant v, TemporalFamily fam = TemporalFamily::exponential) {
  TriggeringKernel k;
  k.variant = v;
  k.p.alpha = 0.3;
  k.p.beta = 30.0;
  k.p.phi = 25.0;
  k.p.gamma = v == KernelVariant::nonseparable ? 0.5 : 0.0;
  k.p.temporal = fam;
  return k;
}

}  // namespace detail

/// Default initial values: alpha 0.3 (branching block theta 0.1, lambda_b 0.5,
/// lambda_f 0.25, b 0.05), beta 30 d, phi 25 km, gamma 0.5, shift from mark
/// means, background from the Poisson closed form.
inline ModelTemplate make_preset(const std::string& name, const PresetContext& ctx) {
  const PresetInfo& info = preset_info(name);
  if (ctx.n_marks != info.n_marks) {
    throw std::invalid_argument("preset '" + name + "' needs " + std::to_string(info.n_marks) +
                                " mark(s), catalog has " + std::to_string(ctx.n_marks));
  }
  detail::TemplateBuilder b;
  b.t.name = name;
  b.t.base = ModelSpec(info.n_marks);
  auto& base = b.t.base;
  const double mu = ctx.poisson_mu.empty() ? 1e-6 : ctx.poisson_mu[0];

  auto covariate_background = [&](BackgroundVariant v) {
    auto& bg = base.background[0];
    bg.variant = v;
    bg.time_scale = ctx.time_scale;
    if (v == BackgroundVariant::covariate_linear) {
      if (!ctx.covariate) throw std::invalid_argument("preset '" + name + "' needs a covariate field");
      bg.covariate = ctx.covariate;
    }
    b.add_free("mu0", {mu_slot(Slot::mu0, 0)}, mu, mu);
    b.add_free("mu1", {mu_slot(Slot::mu1, 0)}, mu, 0.0);
  };

  if (name == "poisson-const") {
    b.add_log("mu", {mu_slot(Slot::mu0, 0)}, mu);
    return b.finish();
  }
  if (name == "m1-1") {
    covariate_background(BackgroundVariant::covariate_linear);
    return b.finish();
  }
  if (name == "m1-2") {
    covariate_background(BackgroundVariant::time_linear);
    return b.finish();
  }
  if (name == "m1-3" || name == "m1-4") {
    if (!ctx.covariate) throw std::invalid_argument("preset '" + name + "' needs a covariate field");
    if (name == "m1-3") {
      covariate_background(BackgroundVariant::covariate_linear);
    } else {
      b.add_log("mu", {mu_slot(Slot::mu0, 0)}, mu);
    }
    auto k = detail::kernel_of(KernelVariant::separable);
    k.nonstationary = Nonstationarity::phi;
    base.kernels.set(0, 0, k);
    base.kernel_covariate = ctx.covariate;
    b.add_unit("alpha", {kernel_slot(Slot::alpha, 0, 0)}, 0.3);
    b.add_log("beta", {kernel_slot(Slot::beta, 0, 0)}, 30.0);
    const double u_lo = ctx.covariate->min_value();
    double u_hi = std::max(ctx.covariate->max_value(), 1.0);
    TransformBlock pair{TransformKind::nonstationary_range, {}};
    pair.u_lo = u_hi - u_lo > 0.0 ? u_lo : u_hi - 1.0;
    pair.u_hi = u_hi;
    const std::size_t i0 = b.t.params.size();
    b.t.params.push_back({"phi0", {kernel_slot(Slot::phi, 0, 0)}});
    b.t.params.push_back({"phi1", {kernel_slot(Slot::phi1, 0, 0)}});
    b.t.initial.push_back(25.0);
    b.t.initial.push_back(0.0);
    pair.indices = {i0, i0 + 1};
    b.blocks.push_back(pair);
    return b.finish();
  }
  if (name == "m1-5") {
    covariate_background(BackgroundVariant::covariate_linear);
    base.kernels.set(0, 0, detail::kernel_of(KernelVariant::separable, TemporalFamily::half_normal));
    b.add_unit("alpha", {kernel_slot(Slot::alpha, 0, 0)}, 0.3);
    b.add_log("beta", {kernel_slot(Slot::beta, 0, 0)}, 30.0);
    b.add_log("phi", {kernel_slot(Slot::phi, 0, 0)}, 25.0);
    return b.finish();
  }
  if (name == "m2-1") {
    base.profiled = {true};
    base.background[0].mu0 = mu;
    base.kernels.set(0, 0, detail::kernel_of(KernelVariant::separable));
    b.add_unit("alpha", {kernel_slot(Slot::alpha, 0, 0)}, 0.3);
    b.add_log("beta", {kernel_slot(Slot::beta, 0, 0)}, 30.0);
    b.add_log("phi", {kernel_slot(Slot::phi, 0, 0)}, 25.0);
    return b.finish();
  }

  // bivariate: mark 0 = b, mark 1 = f; alpha_bf is f -> b.
  base.profiled = {true, true};
  for (int k = 0; k < 2; ++k) base.background[static_cast<std::size_t>(k)].mu0 = ctx.poisson_mu.at(static_cast<std::size_t>(k));
  const bool g3 = info.nonseparable;
  const auto marginal = g3 ? KernelVariant::nonseparable : KernelVariant::separable;
  base.kernels.set(0, 0, detail::kernel_of(marginal));
  base.kernels.set(1, 1, detail::kernel_of(marginal));
  if (name == "m2-2") {
    b.add_unit("alpha_b", {kernel_slot(Slot::alpha, 0, 0)}, 0.3);
    b.add_unit("alpha_f", {kernel_slot(Slot::alpha, 1, 1)}, 0.3);
    b.add_log("beta_b", {kernel_slot(Slot::beta, 0, 0)}, 30.0);
    b.add_log("beta_f", {kernel_slot(Slot::beta, 1, 1)}, 30.0);
    b.add_log("phi_b", {kernel_slot(Slot::phi, 0, 0)}, 25.0);
    b.add_log("phi_f", {kernel_slot(Slot::phi, 1, 1)}, 25.0);
    return b.finish();
  }
  const auto cross = info.non_decreasing ? (g3 ? KernelVariant::nonseparable : KernelVariant::shifted)
                                         : KernelVariant::separable;
  base.kernels.set(1, 0, detail::kernel_of(cross));
  base.kernels.set(0, 1, detail::kernel_of(cross));

  const auto init = build_branching_matrix({0.1, 0.5, 0.25, 0.05}).alphas;
  const std::size_t a0 = b.t.params.size();
  b.t.params.push_back({"alpha_b", {kernel_slot(Slot::alpha, 0, 0)}});
  b.t.params.push_back({"alpha_bf", {kernel_slot(Slot::alpha, 1, 0)}});
  b.t.params.push_back({"alpha_f", {kernel_slot(Slot::alpha, 1, 1)}});
  b.t.params.push_back({"alpha_fb", {kernel_slot(Slot::alpha, 0, 1)}});
  b.t.initial.insert(b.t.initial.end(), {init.alpha_b, init.alpha_bf, init.alpha_f, init.alpha_fb});
  TransformBlock blk{TransformKind::branching, {a0, a0 + 1, a0 + 2, a0 + 3}, 0.0, 0.5 * std::numbers::pi};
  b.blocks.push_back(blk);

  b.add_log("beta_b", {kernel_slot(Slot::beta, 0, 0)}, 30.0);
  b.add_log("beta_f", {kernel_slot(Slot::beta, 1, 1)}, 30.0);
  b.add_log("beta_c", {kernel_slot(Slot::beta, 1, 0), kernel_slot(Slot::beta, 0, 1)}, 30.0);
  b.add_log("phi_b", {kernel_slot(Slot::phi, 0, 0)}, 25.0);
  b.add_log("phi_f", {kernel_slot(Slot::phi, 1, 1)}, 25.0);
  b.add_log("phi_c", {kernel_slot(Slot::phi, 1, 0), kernel_slot(Slot::phi, 0, 1)}, 25.0);
  if (info.non_decreasing) {
    // b -> f is displaced by +m; f -> b by -m (m2-4: +m both ways)
    const double back = name == "m2-4" ? 1.0 : -1.0;
    b.add_free("eta_c", {kernel_slot(Slot::eta, 0, 1), kernel_slot(Slot::eta, 1, 0, back)}, 25.0, ctx.shift.x);
    b.add_free("xi_c", {kernel_slot(Slot::xi, 0, 1), kernel_slot(Slot::xi, 1, 0, back)}, 25.0, ctx.shift.y);
  }
  if (g3) {
    b.add_unit("gamma_b", {kernel_slot(Slot::gamma, 0, 0), kernel_slot(Slot::gamma, 1, 0)}, 0.5);
    b.add_unit("gamma_f", {kernel_slot(Slot::gamma, 1, 1), kernel_slot(Slot::gamma, 0, 1)}, 0.5);
  }
  return b.finish();
}

/// One kernel entry of a user-defined layout.
struct CustomEntry {
  int source{0};
  int target{0};
  KernelVariant variant{KernelVariant::separable};
  TemporalFamily temporal{TemporalFamily::exponential};
};

/// Every entry gets its own alpha, beta, phi (plus eta, xi for shifted and
/// gamma for nonseparable kernels); constant backgrounds are profiled. The
/// spectral radius is checked inside the objective.
inline ModelTemplate make_custom(const std::vector<CustomEntry>& entries, const PresetContext& ctx) {
  detail::TemplateBuilder b;
  b.t.name = "custom";
  b.t.base = ModelSpec(ctx.n_marks);
  b.t.check_radius = true;
  b.t.base.profiled.assign(static_cast<std::size_t>(ctx.n_marks), true);
  for (int k = 0; k < ctx.n_marks; ++k) b.t.base.background[static_cast<std::size_t>(k)].mu0 = ctx.poisson_mu.at(static_cast<std::size_t>(k));
  const double a0 = 0.3 / std::max<double>(1.0, static_cast<double>(ctx.n_marks));
  for (const auto& e : entries) {
    if (e.source < 0 || e.target < 0 || e.source >= ctx.n_marks || e.target >= ctx.n_marks) {
      throw std::invalid_argument("custom layout: mark index out of range");
    }
    if (b.t.base.kernels.at(e.source, e.target)) throw std::invalid_argument("custom layout: duplicate kernel entry");
    b.t.base.kernels.set(e.source, e.target, detail::kernel_of(e.variant, e.temporal));
    const std::string tag = std::to_string(e.source) + std::to_string(e.target);
    b.add_unit("alpha_" + tag, {kernel_slot(Slot::alpha, e.source, e.target)}, a0);
    b.add_log("beta_" + tag, {kernel_slot(Slot::beta, e.source, e.target)}, 30.0);
    b.add_log("phi_" + tag, {kernel_slot(Slot::phi, e.source, e.target)}, 25.0);
    if (e.variant != KernelVariant::separable) {
      b.add_free("eta_" + tag, {kernel_slot(Slot::eta, e.source, e.target)}, 25.0, 0.0);
      b.add_free("xi_" + tag, {kernel_slot(Slot::xi, e.source, e.target)}, 25.0, 0.0);
    }
    if (e.variant == KernelVariant::nonseparable) {
      b.add_unit("gamma_" + tag, {kernel_slot(Slot::gamma, e.source, e.target)}, 0.5);
    }
  }
  return b.finish();
}

}  // namespace sthawkes
