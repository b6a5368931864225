#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sthawkes/background.hpp"
#include "sthawkes/constraints.hpp"
#include "sthawkes/kernels.hpp"

namespace sthawkes {

/// Background per mark plus the kernel matrix. A mark with `profiled` set has
/// its constant level resolved at evaluation time so that the expected count
/// of the mark equals its observed count.
struct ModelSpec {
  int n_marks{1};
  std::vector<BackgroundSpec> background;
  std::vector<bool> profiled;
  KernelMatrix kernels;
  std::shared_ptr<const CovariateField> kernel_covariate;

  ModelSpec() = default;
  explicit ModelSpec(int k)
      : n_marks(k),
        background(static_cast<std::size_t>(k)),
        profiled(static_cast<std::size_t>(k), false),
        kernels(k) {}

  [[nodiscard]] bool is_profiled(int k) const {
    return !profiled.empty() && profiled[static_cast<std::size_t>(k)];
  }

  /// Structural and parameter checks; throws std::domain_error.
  void validate() const {
    if (n_marks < 1) throw std::domain_error("model: n_marks must be >= 1");
    if (background.size() != static_cast<std::size_t>(n_marks) || kernels.n_marks() != n_marks) {
      throw std::domain_error("model: inconsistent mark dimensionality");
    }
    for (int k = 0; k < n_marks; ++k) {
      const auto& b = background[static_cast<std::size_t>(k)];
      if (b.needs_covariate() && !b.covariate) throw std::domain_error("model: background covariate missing");
      if (is_profiled(k) && b.variant != BackgroundVariant::constant) {
        throw std::domain_error("model: only constant backgrounds can be profiled");
      }
    }
    std::optional<std::pair<double, double>> range;
    if (kernel_covariate) range = std::make_pair(kernel_covariate->min_value(), kernel_covariate->max_value());
    for (int s = 0; s < n_marks; ++s) {
      for (int t = 0; t < n_marks; ++t) {
        if (const auto& k = kernels.at(s, t)) {
          validate_kernel(*k, range);
          if (k->nonstationary != Nonstationarity::none && !kernel_covariate) {
            throw std::domain_error("model: nonstationary kernel without covariate");
          }
        }
      }
    }
  }
};

enum class Slot { mu0, mu1, alpha, beta, phi, phi1, eta, xi, gamma };

/// Where a natural parameter lands: a background field of `mark`, or a field
/// of kernel entry (source, target), multiplied by `coef`.
struct SlotRef {
  Slot slot{Slot::alpha};
  int mark{0};
  int source{0};
  int target{0};
  double coef{1.0};
};

struct ParamDef {
  std::string name;
  std::vector<SlotRef> slots;
};

inline SlotRef mu_slot(Slot s, int mark) { return {s, mark, 0, 0, 1.0}; }
inline SlotRef kernel_slot(Slot s, int source, int target, double coef = 1.0) {
  return {s, 0, source, target, coef};
}

inline void assign_slot(ModelSpec& m, const SlotRef& r, double value) {
  const double v = r.coef * value;
  if (r.slot == Slot::mu0 || r.slot == Slot::mu1) {
    auto& b = m.background.at(static_cast<std::size_t>(r.mark));
    (r.slot == Slot::mu0 ? b.mu0 : b.mu1) = v;
    return;
  }
  auto& entry = m.kernels.at(r.source, r.target);
  if (!entry) throw std::logic_error("model template: parameter bound to an empty kernel entry");
  auto& p = entry->p;
  switch (r.slot) {
    case Slot::alpha: p.alpha = v; break;
    case Slot::beta: p.beta = v; break;
    case Slot::phi: p.phi = v; break;
    case Slot::phi1: p.phi1 = v; break;
    case Slot::eta: p.eta = v; break;
    case Slot::xi: p.xi = v; break;
    case Slot::gamma: p.gamma = v; break;
    default: break;
  }
}

inline double read_slot(const ModelSpec& m, const SlotRef& r) {
  if (r.slot == Slot::mu0 || r.slot == Slot::mu1) {
    const auto& b = m.background.at(static_cast<std::size_t>(r.mark));
    return (r.slot == Slot::mu0 ? b.mu0 : b.mu1) / r.coef;
  }
  const auto& p = m.kernels.at(r.source, r.target)->p;
  double v = 0.0;
  switch (r.slot) {
    case Slot::alpha: v = p.alpha; break;
    case Slot::beta: v = p.beta; break;
    case Slot::phi: v = p.phi; break;
    case Slot::phi1: v = p.phi1; break;
    case Slot::eta: v = p.eta; break;
    case Slot::xi: v = p.xi; break;
    case Slot::gamma: v = p.gamma; break;
    default: break;
  }
  return v / r.coef;
}

/// A model family: structure (`base`), the free natural parameters and how
/// they map into it, their transforms, and a default starting point.
struct ModelTemplate {
  std::string name;
  ModelSpec base;
  std::vector<ParamDef> params;
  TransformLayer transform;
  std::vector<double> initial;
  /// True when the productivity matrix is not already guaranteed stable by
  /// the transform (k > 2 or free off-diagonal alphas).
  bool check_radius{false};

  [[nodiscard]] std::size_t dim() const { return params.size(); }

  [[nodiscard]] std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& p : params) out.push_back(p.name);
    return out;
  }

  [[nodiscard]] ModelSpec instantiate(std::span<const double> natural) const {
    if (natural.size() != params.size()) throw std::invalid_argument("model template: dimension mismatch");
    ModelSpec m = base;
    for (std::size_t i = 0; i < params.size(); ++i) {
      for (const auto& s : params[i].slots) assign_slot(m, s, natural[i]);
    }
    return m;
  }

  /// Natural parameter vector read back from a concrete model of this family.
  [[nodiscard]] std::vector<double> extract(const ModelSpec& m) const {
    std::vector<double> x;
    for (const auto& p : params) x.push_back(read_slot(m, p.slots.front()));
    return x;
  }

  [[nodiscard]] std::vector<int> profiled_marks() const {
    std::vector<int> out;
    for (int k = 0; k < base.n_marks; ++k) {
      if (base.is_profiled(k)) out.push_back(k);
    }
    return out;
  }
};

/// The same family with every profiled background level turned into a free
/// log-scale parameter named mu_<mark>. Used for standard errors.
inline ModelTemplate unprofiled(const ModelTemplate& t, const std::vector<std::string>& mark_labels) {
  ModelTemplate out = t;
  std::vector<TransformBlock> blocks = t.transform.blocks();
  for (int k : t.profiled_marks()) {
    const std::size_t idx = out.params.size();
    const std::string label = k < static_cast<int>(mark_labels.size()) ? mark_labels[static_cast<std::size_t>(k)]
                                                                       : std::to_string(k);
    out.params.push_back({"mu_" + label, {mu_slot(Slot::mu0, k)}});
    blocks.push_back({TransformKind::log, {idx}});
    out.initial.push_back(1e-6);
    out.base.profiled[static_cast<std::size_t>(k)] = false;
  }
  out.transform = TransformLayer(out.params.size(), std::move(blocks));
  return out;
}

}  // namespace sthawkes
