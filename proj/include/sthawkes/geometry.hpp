#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sthawkes {

/// Planar point in projected kilometres (or degrees, for lon/lat rings).
struct Point {
  double x{0.0};
  double y{0.0};

  friend bool operator==(const Point&, const Point&) = default;
};

/// Equirectangular projection about a reference (lon, lat) in degrees.
class Projection {
 public:
  static constexpr double kKmPerDegLon = 111.32;
  static constexpr double kKmPerDegLat = 110.57;
  static constexpr double kMaxAbsLat = 89.0;

  Projection() = default;
  Projection(double lon_ref, double lat_ref) : lon_ref_(lon_ref), lat_ref_(lat_ref) {
    check_lat(lat_ref);
    cos_ref_ = std::cos(lat_ref * std::numbers::pi / 180.0);
  }

  [[nodiscard]] Point forward(double lon, double lat) const {
    check_lat(lat);
    return {kKmPerDegLon * cos_ref_ * (lon - lon_ref_), kKmPerDegLat * (lat - lat_ref_)};
  }

  /// Returns (lon, lat).
  [[nodiscard]] std::pair<double, double> inverse(Point p) const {
    return {lon_ref_ + p.x / (kKmPerDegLon * cos_ref_), lat_ref_ + p.y / kKmPerDegLat};
  }

  [[nodiscard]] double lon_ref() const { return lon_ref_; }
  [[nodiscard]] double lat_ref() const { return lat_ref_; }

 private:
  static void check_lat(double lat) {
    if (!(std::abs(lat) < kMaxAbsLat)) {
      throw std::domain_error("projection: latitude outside (-89, 89) degrees");
    }
  }

  double lon_ref_{0.0};
  double lat_ref_{0.0};
  double cos_ref_{1.0};
};

inline Point project(double lon, double lat, double lon_ref, double lat_ref) {
  return Projection(lon_ref, lat_ref).forward(lon, lat);
}

namespace polygon {

/// Signed shoelace area (positive for counter-clockwise rings).
inline double signed_area(std::span<const Point> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = ring[i];
    const Point& b = ring[(i + 1) % n];
    acc += a.x * b.y - b.x * a.y;
  }
  return 0.5 * acc;
}

inline Point centroid(std::span<const Point> ring) {
  const double a = signed_area(ring);
  const std::size_t n = ring.size();
  if (n == 0) return {};
  if (std::abs(a) < 1e-300) {
    Point c;
    for (const auto& p : ring) {
      c.x += p.x;
      c.y += p.y;
    }
    return {c.x / static_cast<double>(n), c.y / static_cast<double>(n)};
  }
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = ring[i];
    const Point& q = ring[(i + 1) % n];
    const double cross = p.x * q.y - q.x * p.y;
    cx += (p.x + q.x) * cross;
    cy += (p.y + q.y) * cross;
  }
  return {cx / (6.0 * a), cy / (6.0 * a)};
}

/// Sutherland-Hodgman clip of an arbitrary simple ring against an axis-aligned
/// rectangle. The clipped ring may contain degenerate edges for concave input,
/// but its signed area is exact.
inline std::vector<Point> clip_to_rect(std::span<const Point> ring, double x0, double y0,
                                       double x1, double y1) {
  std::vector<Point> out(ring.begin(), ring.end());
  auto clip_edge = [&out](auto inside, auto intersect) {
    if (out.empty()) return;
    std::vector<Point> in;
    in.swap(out);
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& cur = in[i];
      const Point& prev = in[(i + n - 1) % n];
      const bool cin = inside(cur);
      const bool pin = inside(prev);
      if (cin) {
        if (!pin) out.push_back(intersect(prev, cur));
        out.push_back(cur);
      } else if (pin) {
        out.push_back(intersect(prev, cur));
      }
    }
  };
  auto lerp_x = [](const Point& a, const Point& b, double x) {
    const double t = (x - a.x) / (b.x - a.x);
    return Point{x, a.y + t * (b.y - a.y)};
  };
  auto lerp_y = [](const Point& a, const Point& b, double y) {
    const double t = (y - a.y) / (b.y - a.y);
    return Point{a.x + t * (b.x - a.x), y};
  };
  clip_edge([x0](const Point& p) { return p.x >= x0; },
            [&](const Point& a, const Point& b) { return lerp_x(a, b, x0); });
  clip_edge([x1](const Point& p) { return p.x <= x1; },
            [&](const Point& a, const Point& b) { return lerp_x(a, b, x1); });
  clip_edge([y0](const Point& p) { return p.y >= y0; },
            [&](const Point& a, const Point& b) { return lerp_y(a, b, y0); });
  clip_edge([y1](const Point& p) { return p.y <= y1; },
            [&](const Point& a, const Point& b) { return lerp_y(a, b, y1); });
  return out;
}

inline double point_segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a.x + t * dx - p.x, ey = a.y + t * dy - p.y;
  return std::sqrt(ex * ex + ey * ey);
}

}  // namespace polygon

struct BoundingBox {
  double x0{0.0}, y0{0.0}, x1{0.0}, y1{0.0};

  [[nodiscard]] double width() const { return x1 - x0; }
  [[nodiscard]] double height() const { return y1 - y0; }
  [[nodiscard]] double area() const { return width() * height(); }
};

/// Observation window in projected km. Stored as a counter-clockwise ring;
/// rectangles are rings of four vertices.
class SpatialWindow {
 public:
  SpatialWindow() = default;

  explicit SpatialWindow(std::vector<Point> ring) : ring_(std::move(ring)) {
    if (ring_.size() >= 2 && ring_.front() == ring_.back()) ring_.pop_back();
    double a = polygon::signed_area(ring_);
    if (a < 0.0) {
      std::reverse(ring_.begin(), ring_.end());
      a = -a;
    }
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw std::domain_error("spatial window: empty or degenerate polygon");
    }
    area_ = a;
    bbox_ = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& p : ring_) {
      bbox_.x0 = std::min(bbox_.x0, p.x);
      bbox_.y0 = std::min(bbox_.y0, p.y);
      bbox_.x1 = std::max(bbox_.x1, p.x);
      bbox_.y1 = std::max(bbox_.y1, p.y);
    }
    is_rect_ = ring_.size() == 4 && std::abs(area_ - bbox_.area()) <= 1e-12 * bbox_.area();
  }

  static SpatialWindow rectangle(double x0, double y0, double x1, double y1) {
    return SpatialWindow({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
  }

  [[nodiscard]] double area() const { return area_; }
  [[nodiscard]] const BoundingBox& bbox() const { return bbox_; }
  [[nodiscard]] const std::vector<Point>& ring() const { return ring_; }
  [[nodiscard]] bool is_rectangle() const { return is_rect_; }

  /// Crossing-number test; points on the lower/left edges count as inside,
  /// points on the upper/right edges do not.
  [[nodiscard]] bool contains(Point p) const {
    if (is_rect_) {
      return p.x >= bbox_.x0 && p.x < bbox_.x1 && p.y >= bbox_.y0 && p.y < bbox_.y1;
    }
    bool inside = false;
    const std::size_t n = ring_.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point& a = ring_[i];
      const Point& b = ring_[j];
      if ((a.y > p.y) != (b.y > p.y)) {
        const double xc = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
        if (p.x < xc) inside = !inside;
      }
    }
    return inside;
  }

  [[nodiscard]] double distance_to_boundary(Point p) const {
    double d = std::numeric_limits<double>::infinity();
    const std::size_t n = ring_.size();
    for (std::size_t i = 0; i < n; ++i) {
      d = std::min(d, polygon::point_segment_distance(p, ring_[i], ring_[(i + 1) % n]));
    }
    return d;
  }

  [[nodiscard]] Point centroid() const { return polygon::centroid(ring_); }

 private:
  std::vector<Point> ring_;
  double area_{0.0};
  BoundingBox bbox_{};
  bool is_rect_{false};
};

}  // namespace sthawkes
