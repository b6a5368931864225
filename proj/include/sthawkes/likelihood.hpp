#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sthawkes/catalog.hpp"
#include "sthawkes/model.hpp"
#include "sthawkes/quadrature.hpp"

namespace sthawkes {

/// Recursive halving sum; fixed association order for reproducibility.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double d : v) s += d;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

struct LikelihoodOptions {
  bool truncate{true};
  double horizon_factor{20.0};
  /// Pairs with squared offset beyond this many 2 sigma^2 are dropped
  /// (exp(-40) ~ 4e-18); only when truncating.
  double spatial_cut{40.0};
  /// Weight on the expected-count mass of negative background (or negative
  /// profiled level); subtracted from the objective, never from loglik.
  double penalty_weight{1e4};
};

struct ComponentTotals {
  double background{0.0};
  double marginal{0.0};
  double cross{0.0};

  [[nodiscard]] double total() const { return background + marginal + cross; }
};

struct LikelihoodReport {
  double loglik{0.0};
  double event_term{0.0};
  double integral_term{0.0};
  double penalty{0.0};
  bool finite{true};
  std::string diagnostic;
  std::vector<double> log_intensity;  // scored events, catalog order
  std::vector<ComponentTotals> components;
  std::vector<double> mu0;  // background level per mark as used (profiled ones resolved)
  std::size_t n_events{0};
  std::size_t n_cells{0};
  int n_steps{0};
  double total_measure{0.0};

  [[nodiscard]] double objective() const { return finite ? loglik - penalty : -std::numeric_limits<double>::infinity(); }
};

/// Per-bin component integrals: value[mark][bin].
struct BinnedComponents {
  std::vector<double> edges;
  std::vector<std::vector<double>> background;
  std::vector<std::vector<double>> marginal;
  std::vector<std::vector<double>> cross;
};

namespace detail {

/// Kernel entry with its constants hoisted out of the pair loop.
struct PreparedKernel {
  bool present{false};
  TriggeringKernel k;
  double inv_beta{0.0};
  double inv_2phi2{0.0};
  double coef{0.0};
  double cut{std::numeric_limits<double>::infinity()};  // max r^2 / (2 sigma^2) kept
  bool fast{false};  // stationary, separable in time, exponential

  explicit PreparedKernel(const std::optional<TriggeringKernel>& e = std::nullopt,
                          double cut_ = std::numeric_limits<double>::infinity())
      : cut(cut_) {
    if (!e) return;
    present = true;
    k = *e;
    const auto& p = k.p;
    inv_beta = 1.0 / p.beta;
    inv_2phi2 = 1.0 / (2.0 * p.phi * p.phi);
    const double tnorm = p.temporal == TemporalFamily::exponential
                             ? inv_beta
                             : std::sqrt(2.0 / std::numbers::pi) * inv_beta;
    coef = p.alpha * tnorm / (2.0 * std::numbers::pi * p.phi * p.phi);
    fast = k.nonstationary == Nonstationarity::none && k.variant != KernelVariant::nonseparable &&
           p.temporal == TemporalFamily::exponential;
  }

  [[nodiscard]] double value(double dt, double dx, double dy, double lp_t, double lp_s) const {
    if (dt <= 0.0) return 0.0;
    const auto& p = k.p;
    if (k.nonstationary != Nonstationarity::none) {
      return eval_g1_nonstationary(dt, dx, dy, p, k.nonstationary, lp_t, lp_s);
    }
    const double ex = dx - p.eta, ey = dy - p.xi;
    const double r2 = ex * ex + ey * ey;
    if (k.variant == KernelVariant::nonseparable) {
      const double c = dispersion(dt, p.beta, p.gamma);
      if (r2 * inv_2phi2 > cut * c) return 0.0;
      return p.alpha * temporal_density(dt, p.beta, p.temporal) * gaussian2(ex, ey, p.phi * p.phi * c);
    }
    if (r2 * inv_2phi2 > cut) return 0.0;
    const double tex = p.temporal == TemporalFamily::exponential ? dt * inv_beta
                                                                 : 0.5 * dt * dt * inv_beta * inv_beta;
    return coef * std::exp(-tex - r2 * inv_2phi2);
  }
};

struct Piece {
  double a{0.0};
  double b{0.0};
  int tag{0};  // temporal step or covariate slice
  int bin{0};
};

}  // namespace detail

/// Evaluates Sum log lambda(s_i, t_i) - Int lambda over the grid's window and
/// time range. Events before the grid's t_begin act as history only.
class LikelihoodEvaluator {
 public:
  LikelihoodEvaluator(EventCatalog catalog, QuadratureGrid grid,
                      std::shared_ptr<const CovariateField> covariate = nullptr,
                      LikelihoodOptions options = {})
      : catalog_(std::move(catalog)),
        grid_(std::move(grid)),
        covariate_(std::move(covariate)),
        options_(options) {
    const auto& ev = catalog_.events();
    for (const auto& e : ev) {
      if (e.t >= grid_.t_end()) break;
      t_.push_back(e.t);
      x_.push_back(e.x);
      y_.push_back(e.y);
      mark_.push_back(e.mark);
      dist_.push_back(grid_.window().distance_to_boundary(e.location()));
    }
    n_src_ = t_.size();
    first_scored_ = static_cast<std::size_t>(std::lower_bound(t_.begin(), t_.end(), grid_.t_begin()) - t_.begin());
    n_by_mark_.assign(static_cast<std::size_t>(catalog_.n_marks()), 0);
    for (std::size_t j = first_scored_; j < n_src_; ++j) ++n_by_mark_[static_cast<std::size_t>(mark_[j])];
    if (covariate_) {
      for (std::size_t i = 0; i < n_src_; ++i) ev_lp_.push_back(covariate_->lookup(ev[i].lon, ev[i].lat, ev[i].t));
      const auto& proj = catalog_.projection();
      cell_lp_.resize(covariate_->n_slices());
      for (std::size_t s = 0; s < covariate_->n_slices(); ++s) {
        for (const auto& c : grid_.cells()) {
          const auto [lon, lat] = proj.inverse(c.node);
          cell_lp_[s].push_back(covariate_->lookup_slice(lon, lat, s));
        }
      }
    }
  }

  [[nodiscard]] const EventCatalog& catalog() const { return catalog_; }
  [[nodiscard]] const QuadratureGrid& grid() const { return grid_; }
  [[nodiscard]] const LikelihoodOptions& options() const { return options_; }
  [[nodiscard]] std::size_t n_scored() const { return n_src_ - first_scored_; }
  [[nodiscard]] const std::vector<std::size_t>& scored_by_mark() const { return n_by_mark_; }

  [[nodiscard]] double horizon(const ModelSpec& m) const {
    if (!options_.truncate || !m.kernels.any()) return std::numeric_limits<double>::infinity();
    return options_.horizon_factor * m.kernels.max_beta();
  }

  [[nodiscard]] LikelihoodReport evaluate(const ModelSpec& model, bool keep_event_terms = false) const {
    check_model(model);
    const int K = model.n_marks;
    LikelihoodReport rep;
    rep.n_events = n_scored();
    rep.n_cells = grid_.n_cells();
    rep.n_steps = grid_.n_steps();
    rep.total_measure = grid_.total_measure();

    double violation = 0.0;
    std::vector<double> mu0;
    const BinnedComponents bc = integrate(model, {grid_.t_begin(), grid_.t_end()}, &violation, &mu0);
    rep.mu0 = mu0;
    rep.components.resize(static_cast<std::size_t>(K));
    std::vector<double> integral_parts;
    for (int k = 0; k < K; ++k) {
      auto& c = rep.components[static_cast<std::size_t>(k)];
      const auto ku = static_cast<std::size_t>(k);
      c.background = bc.background[ku][0];
      c.marginal = bc.marginal[ku][0];
      c.cross = bc.cross[ku][0];
      integral_parts.push_back(c.background);
      integral_parts.push_back(c.marginal);
      integral_parts.push_back(c.cross);
    }
    rep.integral_term = pairwise_sum(integral_parts);
    rep.penalty = options_.penalty_weight * violation;

    const auto kern = prepare(model);
    const double H = horizon(model);
    std::vector<double> logs;
    logs.reserve(n_scored());
    for (std::size_t j = first_scored_; j < n_src_; ++j) {
      const double lam = intensity_at_event(model, kern, mu0, j, H);
      if (!(lam > 0.0) || !std::isfinite(lam)) {
        rep.finite = false;
        rep.loglik = -std::numeric_limits<double>::infinity();
        rep.event_term = -std::numeric_limits<double>::infinity();
        rep.diagnostic = "nonpositive intensity at event " + std::to_string(j) + " (t=" +
                         std::to_string(t_[j]) + ", mark " + std::to_string(mark_[j]) + ")";
        return rep;
      }
      logs.push_back(std::log(lam));
    }
    rep.event_term = pairwise_sum(logs);
    rep.loglik = rep.event_term - rep.integral_term;
    if (keep_event_terms) rep.log_intensity = std::move(logs);
    return rep;
  }

  /// Component integrals per mark over the bins delimited by `edges`
  /// (increasing, spanning the grid's time range).
  [[nodiscard]] BinnedComponents integrate(const ModelSpec& model, std::vector<double> edges,
                                           double* violation = nullptr,
                                           std::vector<double>* mu0_out = nullptr) const {
    check_model(model);
    if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()) ||
        edges.front() > grid_.t_begin() || edges.back() < grid_.t_end()) {
      throw std::invalid_argument("integrate: bin edges must increase and span the grid");
    }
    const int K = model.n_marks;
    const auto nb = edges.size() - 1;
    BinnedComponents out;
    out.edges = edges;
    const auto zeros = std::vector<std::vector<double>>(static_cast<std::size_t>(K), std::vector<double>(nb, 0.0));
    out.background = out.marginal = out.cross = zeros;

    const auto bin_pieces = make_pieces({grid_.t_begin(), grid_.t_end()}, edges);
    std::vector<double> step_edges;
    for (int s = 0; s < grid_.n_steps(); ++s) step_edges.push_back(grid_.step_bounds(s).first);
    step_edges.push_back(grid_.t_end());
    std::vector<detail::Piece> step_pieces, slice_pieces;
    const auto kern = prepare(model);
    bool any_g3 = false, any_ns = false;
    for (const auto& pk : kern) {
      any_g3 = any_g3 || (pk.present && pk.k.variant == KernelVariant::nonseparable);
      any_ns = any_ns || (pk.present && pk.k.nonstationary != Nonstationarity::none);
    }
    if (any_g3) step_pieces = make_pieces(step_edges, edges);
    if (covariate_) slice_pieces = make_pieces(slice_edges(), edges);

    const double H = horizon(model);
    const double area = grid_.spatial_area();

    // triggering
    for (std::size_t i = 0; i < n_src_; ++i) {
      const int src = mark_[i];
      const Point si{x_[i], y_[i]};
      for (int k = 0; k < K; ++k) {
        const auto& pk = kern[static_cast<std::size_t>(src * K + k)];
        if (!pk.present) continue;
        auto& dest = (src == k ? out.marginal : out.cross)[static_cast<std::size_t>(k)];
        const auto& p = pk.k.p;
        const auto tm = [&](double a, double b) {
          const double la = std::max(a - t_[i], 0.0), lb = std::min(b - t_[i], H);
          return lb > la ? temporal_mass(la, lb, p.beta, p.temporal) : 0.0;
        };
        if (pk.k.nonstationary != Nonstationarity::none) {
          int last_slice = -1;
          double w = 0.0;
          for (const auto& pc : slice_pieces) {
            if (pc.b <= t_[i] || pc.a - t_[i] > H) continue;
            if (pc.tag != last_slice) {
              w = nonstationary_weight(pk.k, i, static_cast<std::size_t>(pc.tag));
              last_slice = pc.tag;
            }
            dest[static_cast<std::size_t>(pc.bin)] += w * tm(pc.a, pc.b);
          }
        } else if (pk.k.variant == KernelVariant::nonseparable) {
          const Point center{si.x + p.eta, si.y + p.xi};
          const double d_center = dist_[i] - std::hypot(p.eta, p.xi);
          int last_step = -1;
          double S = 1.0;
          for (const auto& pc : step_pieces) {
            if (pc.b <= t_[i] || pc.a - t_[i] > H) continue;
            if (pc.tag != last_step) {
              const auto [sa, sb] = grid_.step_bounds(pc.tag);
              const double la = std::max(sa - t_[i], 0.0), lb = std::min(sb - t_[i], H);
              const double sig_max = p.phi * std::sqrt(dispersion(lb, p.beta, p.gamma));
              if (grid_.deep_inside(d_center, sig_max)) {
                S = 1.0;
              } else {
                const double sig = p.phi * std::sqrt(dispersion(0.5 * (la + lb), p.beta, p.gamma));
                S = grid_.gaussian_mass(center, sig);
              }
              last_step = pc.tag;
            }
            dest[static_cast<std::size_t>(pc.bin)] += p.alpha * S * tm(pc.a, pc.b);
          }
        } else {
          const double S = spatial_mass(si, dist_[i], p.eta, p.xi, p.phi);
          for (const auto& pc : bin_pieces) {
            if (pc.b <= t_[i] || pc.a - t_[i] > H) continue;
            dest[static_cast<std::size_t>(pc.bin)] += p.alpha * S * tm(pc.a, pc.b);
          }
        }
      }
    }

    // background
    double viol = 0.0;
    std::vector<double> mu0(static_cast<std::size_t>(K), 0.0);
    for (int k = 0; k < K; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const auto& bg = model.background[ku];
      auto& dest = out.background[ku];
      mu0[ku] = bg.mu0;
      if (model.is_profiled(k)) {
        double trig = 0.0;
        for (std::size_t b = 0; b < nb; ++b) trig += out.marginal[ku][b] + out.cross[ku][b];
        const double level = (static_cast<double>(n_by_mark_[ku]) - trig) / grid_.total_measure();
        mu0[ku] = std::max(level, 0.0);
        if (level < 0.0) viol += -level * grid_.total_measure();
      }
      switch (bg.variant) {
        case BackgroundVariant::constant: {
          const double m = model.is_profiled(k) ? mu0[ku] : bg.mu0;
          if (m < 0.0) viol += -m * grid_.total_measure();
          for (const auto& pc : bin_pieces) dest[static_cast<std::size_t>(pc.bin)] += std::max(m, 0.0) * area * (pc.b - pc.a);
          break;
        }
        case BackgroundVariant::time_linear: {
          for (const auto& pc : bin_pieces) {
            const auto [pos, neg] = linear_parts(bg.mu0, bg.mu1 / bg.time_scale, pc.a, pc.b);
            dest[static_cast<std::size_t>(pc.bin)] += area * pos;
            viol += area * neg;
          }
          break;
        }
        case BackgroundVariant::covariate_linear: {
          const auto ns = covariate_->n_slices();
          std::vector<double> pos(ns, 0.0), neg(ns, 0.0);
          for (std::size_t s = 0; s < ns; ++s) {
            for (std::size_t c = 0; c < grid_.n_cells(); ++c) {
              const double m = bg.mu0 + bg.mu1 * cell_lp_[s][c];
              (m >= 0.0 ? pos[s] : neg[s]) += grid_.cells()[c].area * std::abs(m);
            }
          }
          for (const auto& pc : slice_pieces) {
            dest[static_cast<std::size_t>(pc.bin)] += pos[static_cast<std::size_t>(pc.tag)] * (pc.b - pc.a);
            viol += neg[static_cast<std::size_t>(pc.tag)] * (pc.b - pc.a);
          }
          break;
        }
      }
    }
    if (violation) *violation = viol;
    if (mu0_out) *mu0_out = mu0;
    return out;
  }

  /// Intensity of `mark` at an arbitrary (s, t) inside the grid's range,
  /// conditioned on every catalog event before t.
  [[nodiscard]] double intensity(const ModelSpec& model, int mark, Point s, double t) const {
    const auto kern = prepare(model);
    const double H = horizon(model);
    const auto& bg = model.background[static_cast<std::size_t>(mark)];
    double lp_t = 0.0;
    if (covariate_) {
      const auto [lon, lat] = catalog_.projection().inverse(s);
      lp_t = covariate_->lookup(lon, lat, t);
    }
    double lam = std::max(eval_mu(bg, lp_t, t), 0.0);
    const auto end = static_cast<std::size_t>(std::lower_bound(t_.begin(), t_.end(), t) - t_.begin());
    for (std::size_t i = end; i-- > 0;) {
      const double dt = t - t_[i];
      if (dt > H) break;
      const auto& pk = kern[static_cast<std::size_t>(mark_[i] * model.n_marks + mark)];
      if (!pk.present) continue;
      lam += pk.value(dt, s.x - x_[i], s.y - y_[i], lp_t, covariate_ ? ev_lp_[i] : 0.0);
    }
    return lam;
  }

 private:
  void check_model(const ModelSpec& m) const {
    if (m.n_marks != catalog_.n_marks()) throw std::invalid_argument("likelihood: model and catalog mark counts differ");
    auto same = [this](const std::shared_ptr<const CovariateField>& f) {
      return !f || f.get() == covariate_.get();
    };
    for (const auto& b : m.background) {
      if (b.needs_covariate() && !covariate_) throw std::invalid_argument("likelihood: evaluator built without covariate");
      if (b.needs_covariate() && !same(b.covariate)) {
        throw std::invalid_argument("likelihood: background covariate differs from evaluator covariate");
      }
    }
    if (m.kernels.has_nonstationary() && (!covariate_ || !same(m.kernel_covariate))) {
      throw std::invalid_argument("likelihood: kernel covariate differs from evaluator covariate");
    }
  }

  [[nodiscard]] std::vector<detail::PreparedKernel> prepare(const ModelSpec& m) const {
    const double cut = options_.truncate ? options_.spatial_cut : std::numeric_limits<double>::infinity();
    std::vector<detail::PreparedKernel> out;
    for (int s = 0; s < m.n_marks; ++s) {
      for (int t = 0; t < m.n_marks; ++t) out.emplace_back(m.kernels.at(s, t), cut);
    }
    return out;
  }

  [[nodiscard]] double intensity_at_event(const ModelSpec& model, const std::vector<detail::PreparedKernel>& kern,
                                          const std::vector<double>& mu0, std::size_t j, double H) const {
    const int k = mark_[j];
    const auto& bg = model.background[static_cast<std::size_t>(k)];
    const double lp_j = covariate_ ? ev_lp_[j] : 0.0;
    double mu = 0.0;
    if (bg.variant == BackgroundVariant::constant) {
      mu = mu0[static_cast<std::size_t>(k)];
    } else {
      mu = eval_mu(bg, lp_j, t_[j]);
    }
    thread_local std::vector<double> terms;
    terms.clear();
    terms.push_back(std::max(mu, 0.0));
    const int K = model.n_marks;
    const double tj = t_[j], xj = x_[j], yj = y_[j];
    for (std::size_t i = j; i-- > 0;) {
      const double dt = tj - t_[i];
      if (dt > H) break;
      const auto& pk = kern[static_cast<std::size_t>(mark_[i] * K + k)];
      if (!pk.present || !(dt > 0.0)) continue;
      const double dx = xj - x_[i], dy = yj - y_[i];
      double v = 0.0;
      if (pk.fast) {
        const double ex = dx - pk.k.p.eta, ey = dy - pk.k.p.xi;
        const double q = (ex * ex + ey * ey) * pk.inv_2phi2;
        if (q > pk.cut) continue;
        v = pk.coef * std::exp(-dt * pk.inv_beta - q);
      } else {
        v = pk.value(dt, dx, dy, lp_j, covariate_ ? ev_lp_[i] : 0.0);
      }
      if (v != 0.0) terms.push_back(v);
    }
    return pairwise_sum(terms);
  }

  /// Window mass of N(s + m, phi^2) on the lattice.
  [[nodiscard]] double spatial_mass(Point s, double dist, double eta, double xi, double phi) const {
    const double d_center = dist - std::hypot(eta, xi);
    if (grid_.deep_inside(d_center, phi)) return 1.0;
    return grid_.gaussian_mass({s.x + eta, s.y + xi}, phi);
  }

  /// Sum over cells of alpha-tilde x cell mass of N(s_i, phi-tilde^2) with the
  /// target covariate taken at the cell for one slice.
  [[nodiscard]] double nonstationary_weight(const TriggeringKernel& k, std::size_t i, std::size_t slice) const {
    const auto& p = k.p;
    const double lp_s = ev_lp_[i];
    const Point si{x_[i], y_[i]};
    const double reach = QuadratureGrid::kSigmaReach;
    double w = 0.0;
    const auto& cells = grid_.cells();
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double lp_t = cell_lp_[slice][c];
      const double a = k.alpha_varies() ? alpha_tilde(p, lp_t, lp_s) : p.alpha;
      const double phi = k.phi_varies() ? phi_tilde(p, lp_t, lp_s) : p.phi;
      if (!(phi > 0.0)) throw std::domain_error("nonstationary kernel: phi-tilde is not positive");
      const double d = std::hypot(cells[c].node.x - si.x, cells[c].node.y - si.y);
      if (d > reach * phi + grid_.cell_diagonal()) continue;
      w += a * grid_.cell_gaussian_mass(cells[c], si, phi);
    }
    return w;
  }

  [[nodiscard]] std::vector<double> slice_edges() const {
    std::vector<double> e{grid_.t_begin()};
    for (double s : covariate_->slice_starts()) {
      if (s > grid_.t_begin() && s < grid_.t_end()) e.push_back(s);
    }
    e.push_back(grid_.t_end());
    return e;
  }

  /// Common refinement of `major` (tags) and `bins` over the grid's range.
  [[nodiscard]] std::vector<detail::Piece> make_pieces(const std::vector<double>& major,
                                                       const std::vector<double>& bins) const {
    std::vector<double> all;
    for (double v : major) all.push_back(v);
    for (double v : bins) all.push_back(v);
    for (auto& v : all) v = std::clamp(v, grid_.t_begin(), grid_.t_end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    std::vector<detail::Piece> out;
    for (std::size_t i = 0; i + 1 < all.size(); ++i) {
      const double a = all[i], b = all[i + 1];
      const double mid = 0.5 * (a + b);
      const auto tag = std::upper_bound(major.begin(), major.end(), mid) - major.begin() - 1;
      const auto bin = std::upper_bound(bins.begin(), bins.end(), mid) - bins.begin() - 1;
      out.push_back({a, b, static_cast<int>(std::max<std::ptrdiff_t>(tag, 0)),
                     static_cast<int>(std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(bins.size()) - 2))});
    }
    return out;
  }

  /// Integrals of the positive and negative parts of c0 + c1 t over [a, b].
  static std::pair<double, double> linear_parts(double c0, double c1, double a, double b) {
    auto integral = [&](double u, double v) { return c0 * (v - u) + 0.5 * c1 * (v * v - u * u); };
    double pos = 0.0, neg = 0.0;
    auto add = [&](double u, double v) {
      if (v <= u) return;
      const double val = integral(u, v);
      (c0 + c1 * 0.5 * (u + v) >= 0.0 ? pos : neg) += std::abs(val);
    };
    if (c1 != 0.0) {
      const double r = -c0 / c1;
      if (r > a && r < b) {
        add(a, r);
        add(r, b);
        return {pos, neg};
      }
    }
    add(a, b);
    return {pos, neg};
  }

  EventCatalog catalog_;
  QuadratureGrid grid_;
  std::shared_ptr<const CovariateField> covariate_;
  LikelihoodOptions options_;
  std::vector<double> t_, x_, y_, dist_, ev_lp_;
  std::vector<int> mark_;
  std::vector<std::vector<double>> cell_lp_;
  std::vector<std::size_t> n_by_mark_;
  std::size_t n_src_{0};
  std::size_t first_scored_{0};
};

/// lambda_mark(s, t | history) = mu + sum of kernels over earlier events.
inline double conditional_intensity(int mark, Point s, double t, const EventCatalog& catalog,
                                    const ModelSpec& model,
                                    double horizon = std::numeric_limits<double>::infinity()) {
  const auto& bg = model.background.at(static_cast<std::size_t>(mark));
  const auto [lon, lat] = catalog.projection().inverse(s);
  const CovariateField* field = model.kernel_covariate.get();
  return eval_mu(bg, lon, lat, t) + kernel_sum(mark, s, t, catalog, model.kernels, horizon, field);
}

inline LikelihoodReport log_likelihood(const EventCatalog& catalog, const ModelSpec& model,
                                       const QuadratureGrid& grid, LikelihoodOptions options = {},
                                       std::shared_ptr<const CovariateField> covariate = nullptr) {
  if (!covariate) covariate = model.kernel_covariate;
  if (!covariate) {
    for (const auto& b : model.background) {
      if (b.covariate) covariate = b.covariate;
    }
  }
  return LikelihoodEvaluator(catalog, grid, covariate, options).evaluate(model, true);
}

inline std::vector<ComponentTotals> expected_counts(const LikelihoodEvaluator& ev, const ModelSpec& model) {
  return ev.evaluate(model).components;
}

struct DailySeries {
  std::vector<double> day_start;
  /// [mark][day]
  std::vector<std::vector<ComponentTotals>> values;
};

/// Expected counts per calendar day (bucket floor(t)) split by component.
inline DailySeries expected_daily_series(const LikelihoodEvaluator& ev, const ModelSpec& model) {
  const auto& g = ev.grid();
  std::vector<double> edges{g.t_begin()};
  for (double d = std::floor(g.t_begin()) + 1.0; d < g.t_end(); d += 1.0) edges.push_back(d);
  edges.push_back(g.t_end());
  // resolve profiled levels first so the background series matches the fit
  ModelSpec resolved = model;
  const auto rep = ev.evaluate(model);
  for (int k = 0; k < model.n_marks; ++k) {
    if (model.is_profiled(k)) {
      resolved.background[static_cast<std::size_t>(k)].mu0 = rep.mu0[static_cast<std::size_t>(k)];
      resolved.profiled[static_cast<std::size_t>(k)] = false;
    }
  }
  const auto bc = ev.integrate(resolved, edges);
  DailySeries out;
  out.day_start.assign(edges.begin(), edges.end() - 1);
  for (auto& d : out.day_start) d = std::floor(d);
  out.values.resize(static_cast<std::size_t>(model.n_marks));
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
      out.values[k].push_back({bc.background[k][b], bc.marginal[k][b], bc.cross[k][b]});
    }
  }
  return out;
}

/// Log-likelihood of the test window with parameters fixed. With
/// `condition_on_history` the training events stay in the conditioning
/// history; otherwise history restarts at the test epoch.
inline LikelihoodReport holdout_log_likelihood(const EventCatalog& train, const EventCatalog& test,
                                               const ModelSpec& model, const QuadratureGrid& grid_test,
                                               bool condition_on_history = true,
                                               LikelihoodOptions options = {},
                                               std::shared_ptr<const CovariateField> covariate = nullptr) {
  if (grid_test.t_begin() < train.T()) {
    throw std::domain_error("holdout: test window must start at or after the training window end");
  }
  if (test.n_marks() != train.n_marks()) throw std::domain_error("holdout: mark counts differ");
  for (const auto& e : test.events()) {
    if (e.t < grid_test.t_begin() || e.t >= grid_test.t_end()) {
      throw std::domain_error("holdout: test event outside the test window");
    }
  }
  if (grid_test.duration() == 0.0) return {};
  const EventCatalog joined = condition_on_history ? concatenate(train, test) : test;
  return log_likelihood(joined, model, grid_test, options, std::move(covariate));
}

}  // namespace sthawkes
