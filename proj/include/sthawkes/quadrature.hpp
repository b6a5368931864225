#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sthawkes/geometry.hpp"

namespace sthawkes {

/// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Mass of N(center, sigma^2) on [a, b].
inline double normal_interval_mass(double a, double b, double center, double sigma) {
  const double za = (a - center) / sigma, zb = (b - center) / sigma;
  if (za >= 0.0) return normal_cdf(-za) - normal_cdf(-zb);
  return normal_cdf(zb) - normal_cdf(za);
}

struct GridCell {
  int ix{0};
  int iy{0};
  Point node;        // centroid of the clipped cell
  double area{0.0};  // km^2 inside the window
  double frac{1.0};  // area / full lattice-cell area
};

/// Regular spatial lattice clipped to the window, crossed with regular time
/// steps on [t_begin, t_end). Weight of (cell, step) = area x step width.
class QuadratureGrid {
 public:
  /// Gaussian mass beyond this many standard deviations is dropped (< 1e-17).
  static constexpr double kSigmaReach = 8.5;

  QuadratureGrid() = default;

  QuadratureGrid(const SpatialWindow& window, double t_begin, double t_end, int n_s, int n_t)
      : window_(window), t_begin_(t_begin), t_end_(t_end), n_t_(n_t) {
    if (n_s < 1 || n_t < 1) throw std::invalid_argument("quadrature: n_s and n_t must be >= 1");
    if (!(window.area() > 0.0)) throw std::domain_error("quadrature: empty window");
    if (!(t_end >= t_begin)) throw std::invalid_argument("quadrature: t_end < t_begin");
    const BoundingBox& bb = window.bbox();
    const double h = std::sqrt(bb.area() / n_s);
    nx_ = std::max(1, static_cast<int>(std::lround(bb.width() / h)));
    ny_ = std::max(1, static_cast<int>(std::lround(bb.height() / h)));
    x0_ = bb.x0;
    y0_ = bb.y0;
    hx_ = bb.width() / nx_;
    hy_ = bb.height() / ny_;
    diag_ = std::hypot(hx_, hy_);
    index_.assign(static_cast<std::size_t>(nx_) * ny_, -1);
    const double full = hx_ * hy_;
    for (int iy = 0; iy < ny_; ++iy) {
      for (int ix = 0; ix < nx_; ++ix) {
        const double cx0 = x0_ + ix * hx_, cy0 = y0_ + iy * hy_;
        const double cx1 = ix + 1 == nx_ ? bb.x1 : cx0 + hx_;
        const double cy1 = iy + 1 == ny_ ? bb.y1 : cy0 + hy_;
        GridCell cell{ix, iy, {0.5 * (cx0 + cx1), 0.5 * (cy0 + cy1)}, full, 1.0};
        if (!window.is_rectangle()) {
          const auto piece = polygon::clip_to_rect(window.ring(), cx0, cy0, cx1, cy1);
          const double a = std::abs(polygon::signed_area(piece));
          if (a <= 1e-12 * full) continue;
          cell.area = std::min(a, full);
          cell.frac = cell.area / full;
          if (cell.frac > 1.0 - 1e-12) {
            cell.frac = 1.0;
            cell.area = full;
          } else {
            cell.node = polygon::centroid(piece);
          }
        }
        index_[static_cast<std::size_t>(iy) * nx_ + ix] = static_cast<int>(cells_.size());
        cells_.push_back(cell);
      }
    }
    if (cells_.empty()) throw std::domain_error("quadrature: window covers no cells");
    rows_.resize(static_cast<std::size_t>(ny_));
    for (int iy = 0; iy < ny_; ++iy) {
      Row& row = rows_[static_cast<std::size_t>(iy)];
      int run_start = -1;
      for (int ix = 0; ix <= nx_; ++ix) {
        const int ci = ix < nx_ ? index_[static_cast<std::size_t>(iy) * nx_ + ix] : -1;
        const bool is_full = ci >= 0 && cells_[static_cast<std::size_t>(ci)].frac == 1.0;
        if (is_full && run_start < 0) run_start = ix;
        if (!is_full && run_start >= 0) {
          row.full_runs.emplace_back(run_start, ix - 1);
          run_start = -1;
        }
        if (ci >= 0 && !is_full) row.partial.emplace_back(ix, cells_[static_cast<std::size_t>(ci)].frac);
      }
    }
    for (const auto& c : cells_) area_ += c.area;
  }

  [[nodiscard]] const SpatialWindow& window() const { return window_; }
  [[nodiscard]] const std::vector<GridCell>& cells() const { return cells_; }
  [[nodiscard]] std::size_t n_cells() const { return cells_.size(); }
  [[nodiscard]] int n_steps() const { return n_t_; }
  [[nodiscard]] int nx() const { return nx_; }
  [[nodiscard]] int ny() const { return ny_; }
  [[nodiscard]] double cell_width() const { return hx_; }
  [[nodiscard]] double cell_height() const { return hy_; }
  [[nodiscard]] double cell_diagonal() const { return diag_; }
  [[nodiscard]] double t_begin() const { return t_begin_; }
  [[nodiscard]] double t_end() const { return t_end_; }
  [[nodiscard]] double duration() const { return t_end_ - t_begin_; }
  [[nodiscard]] double step_width() const { return duration() / n_t_; }
  [[nodiscard]] double spatial_area() const { return area_; }

  [[nodiscard]] std::pair<double, double> step_bounds(int k) const {
    const double a = t_begin_ + k * step_width();
    const double b = k + 1 == n_t_ ? t_end_ : t_begin_ + (k + 1) * step_width();
    return {a, b};
  }
  [[nodiscard]] double time_node(int k) const {
    const auto [a, b] = step_bounds(k);
    return 0.5 * (a + b);
  }
  [[nodiscard]] double weight(std::size_t cell, int step) const {
    const auto [a, b] = step_bounds(step);
    return cells_[cell].area * (b - a);
  }
  [[nodiscard]] double total_measure() const { return area_ * duration(); }

  /// Lattice rectangle of a cell (before clipping).
  [[nodiscard]] BoundingBox cell_rect(const GridCell& c) const {
    const double cx0 = x0_ + c.ix * hx_, cy0 = y0_ + c.iy * hy_;
    return {cx0, cy0, c.ix + 1 == nx_ ? window_.bbox().x1 : cx0 + hx_,
            c.iy + 1 == ny_ ? window_.bbox().y1 : cy0 + hy_};
  }

  /// Mass of an isotropic Gaussian in one cell: exact over the lattice
  /// rectangle, scaled by the clipped fraction.
  [[nodiscard]] double cell_gaussian_mass(const GridCell& c, Point center, double sigma) const {
    const BoundingBox r = cell_rect(c);
    return c.frac * normal_interval_mass(r.x0, r.x1, center.x, sigma) *
           normal_interval_mass(r.y0, r.y1, center.y, sigma);
  }

  /// Sum over cells of cell_gaussian_mass, in O(nx + ny + partial cells).
  [[nodiscard]] double gaussian_mass(Point center, double sigma) const {
    const double reach = kSigmaReach * sigma;
    const int ix0 = std::max(0, static_cast<int>(std::floor((center.x - reach - x0_) / hx_)));
    const int ix1 = std::min(nx_ - 1, static_cast<int>(std::floor((center.x + reach - x0_) / hx_)));
    const int iy0 = std::max(0, static_cast<int>(std::floor((center.y - reach - y0_) / hy_)));
    const int iy1 = std::min(ny_ - 1, static_cast<int>(std::floor((center.y + reach - y0_) / hy_)));
    if (ix0 > ix1 || iy0 > iy1) return 0.0;
    thread_local std::vector<double> px, prefix, py;
    const auto wx = static_cast<std::size_t>(ix1 - ix0 + 1);
    px.resize(wx);
    prefix.resize(wx + 1);
    prefix[0] = 0.0;
    for (int ix = ix0; ix <= ix1; ++ix) {
      const double a = x0_ + ix * hx_;
      const double b = ix + 1 == nx_ ? window_.bbox().x1 : a + hx_;
      const auto i = static_cast<std::size_t>(ix - ix0);
      px[i] = normal_interval_mass(a, b, center.x, sigma);
      prefix[i + 1] = prefix[i] + px[i];
    }
    double total = 0.0;
    for (int iy = iy0; iy <= iy1; ++iy) {
      const double a = y0_ + iy * hy_;
      const double b = iy + 1 == ny_ ? window_.bbox().y1 : a + hy_;
      const double wy = normal_interval_mass(a, b, center.y, sigma);
      if (wy == 0.0) continue;
      const Row& row = rows_[static_cast<std::size_t>(iy)];
      double sx = 0.0;
      for (const auto& [r0, r1] : row.full_runs) {
        const int lo = std::max(r0, ix0), hi = std::min(r1, ix1);
        if (lo > hi) continue;
        sx += prefix[static_cast<std::size_t>(hi - ix0 + 1)] - prefix[static_cast<std::size_t>(lo - ix0)];
      }
      for (const auto& [ix, frac] : row.partial) {
        if (ix < ix0 || ix > ix1) continue;
        sx += frac * px[static_cast<std::size_t>(ix - ix0)];
      }
      total += wy * sx;
    }
    return total;
  }

  /// True when a Gaussian centred at p with the given sigma has all of its
  /// mass (to ~1e-17) inside fully covered cells, so its window mass is 1.
  [[nodiscard]] bool deep_inside(double boundary_distance, double sigma) const {
    return boundary_distance > kSigmaReach * sigma + diag_;
  }

 private:
  struct Row {
    std::vector<std::pair<int, int>> full_runs;
    std::vector<std::pair<int, double>> partial;
  };

  SpatialWindow window_;
  double t_begin_{0.0};
  double t_end_{0.0};
  int n_t_{1};
  int nx_{1};
  int ny_{1};
  double x0_{0.0};
  double y0_{0.0};
  double hx_{1.0};
  double hy_{1.0};
  double diag_{0.0};
  double area_{0.0};
  std::vector<GridCell> cells_;
  std::vector<int> index_;
  std::vector<Row> rows_;
};

inline QuadratureGrid build_quadrature(const SpatialWindow& window, double T, int n_s, int n_t) {
  return QuadratureGrid(window, 0.0, T, n_s, n_t);
}

inline QuadratureGrid build_quadrature(const SpatialWindow& window, double t_begin, double t_end,
                                       int n_s, int n_t) {
  return QuadratureGrid(window, t_begin, t_end, n_s, n_t);
}

}  // namespace sthawkes
