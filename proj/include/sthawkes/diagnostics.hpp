#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "sthawkes/catalog.hpp"

namespace sthawkes {

/// counts[i_dt][i_ds]; bins are left-closed, right-open.
struct LagHistogram {
  double max_dt{0.0};
  double max_ds{0.0};
  int n_dt{1};
  int n_ds{1};
  int mark_from{0};
  int mark_to{0};
  std::vector<std::vector<long long>> counts;

  [[nodiscard]] long long total() const {
    long long s = 0;
    for (const auto& r : counts) {
      for (auto c : r) s += c;
    }
    return s;
  }

  /// Counts divided by the total (all zeros when empty).
  [[nodiscard]] std::vector<std::vector<double>> normalized() const {
    const double n = static_cast<double>(total());
    std::vector<std::vector<double>> out;
    for (const auto& r : counts) {
      out.emplace_back();
      for (auto c : r) out.back().push_back(n > 0 ? static_cast<double>(c) / n : 0.0);
    }
    return out;
  }

  [[nodiscard]] std::vector<long long> spatial_marginal() const {
    std::vector<long long> m(static_cast<std::size_t>(n_ds), 0);
    for (const auto& r : counts) {
      for (std::size_t j = 0; j < r.size(); ++j) m[j] += r[j];
    }
    return m;
  }

  /// Index of the most populated spatial-lag bin (lowest on ties).
  [[nodiscard]] int spatial_mode_bin() const {
    const auto m = spatial_marginal();
    return static_cast<int>(std::max_element(m.begin(), m.end()) - m.begin());
  }

  [[nodiscard]] double ds_bin_width() const { return max_ds / n_ds; }
  [[nodiscard]] double dt_bin_width() const { return max_dt / n_dt; }
};

/// Lags (dt, |ds|) from each earlier event of `mark_from` to each strictly
/// later event of `mark_to`, within [0, max_dt) x [0, max_ds).
inline LagHistogram pair_lag_histogram(const EventCatalog& catalog, int mark_from, int mark_to, double max_dt,
                                       double max_ds, int n_dt, int n_ds) {
  if (!(max_dt > 0.0) || !(max_ds > 0.0)) throw std::invalid_argument("pair_lag_histogram: bounds must be > 0");
  if (n_dt < 1 || n_ds < 1) throw std::invalid_argument("pair_lag_histogram: bins must be >= 1");
  LagHistogram h{max_dt, max_ds, n_dt, n_ds, mark_from, mark_to,
                 std::vector<std::vector<long long>>(static_cast<std::size_t>(n_dt),
                                                     std::vector<long long>(static_cast<std::size_t>(n_ds), 0))};
  const auto& ev = catalog.events();
  const double wt = max_dt / n_dt, ws = max_ds / n_ds;
  for (std::size_t j = 0; j < ev.size(); ++j) {
    if (ev[j].mark != mark_to) continue;
    for (std::size_t i = j; i-- > 0;) {
      const double dt = ev[j].t - ev[i].t;
      if (dt >= max_dt) break;
      if (ev[i].mark != mark_from || !(dt > 0.0)) continue;
      const double ds = std::hypot(ev[j].x - ev[i].x, ev[j].y - ev[i].y);
      if (ds >= max_ds) continue;
      const int bt = std::min(n_dt - 1, static_cast<int>(std::floor(dt / wt)));
      const int bs = std::min(n_ds - 1, static_cast<int>(std::floor(ds / ws)));
      ++h.counts[static_cast<std::size_t>(bt)][static_cast<std::size_t>(bs)];
    }
  }
  return h;
}

/// Events of `mark` per day bucket floor(t); length ceil(T).
inline std::vector<long long> daily_counts(const EventCatalog& catalog, int mark) {
  std::vector<long long> out(static_cast<std::size_t>(std::ceil(catalog.T())), 0);
  for (const auto& e : catalog.events()) {
    if (e.mark != mark) continue;
    const auto d = static_cast<std::size_t>(std::floor(e.t));
    if (d < out.size()) ++out[d];
  }
  return out;
}

struct DailyOutlier {
  std::size_t day{0};
  long long count{0};
  double reference{0.0};  // median, or mean when the median is 0
  bool flagged{false};
};

/// Flags the busiest day when it exceeds 10x the median day.
inline DailyOutlier daily_outlier(const std::vector<long long>& series, double factor = 10.0) {
  DailyOutlier o;
  if (series.empty()) return o;
  const auto it = std::max_element(series.begin(), series.end());
  o.day = static_cast<std::size_t>(it - series.begin());
  o.count = *it;
  std::vector<long long> s = series;
  std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(s.size() / 2), s.end());
  double med = static_cast<double>(s[s.size() / 2]);
  if (s.size() % 2 == 0) {
    const auto lo = *std::max_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(s.size() / 2));
    med = 0.5 * (med + static_cast<double>(lo));
  }
  if (med == 0.0) {
    double sum = 0.0;
    for (auto v : series) sum += static_cast<double>(v);
    med = sum / static_cast<double>(series.size());
  }
  o.reference = med;
  o.flagged = med > 0.0 && static_cast<double>(o.count) > factor * med;
  return o;
}

struct LagStats {
  double median{0.0};
  double mean{0.0};
};

struct LagSummary {
  LagStats lon_deg, lat_deg, x_km, y_km;
  std::size_t n_pairs{0};
};

namespace detail {

inline LagStats lag_stats(std::vector<double> v) {
  LagStats s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double d : v) sum += d;
  s.mean = sum / static_cast<double>(v.size());
  const std::size_t h = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
  s.median = v[h];
  if (v.size() % 2 == 0) s.median = 0.5 * (s.median + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h)));
  return s;
}

}  // namespace detail

/// Componentwise lags (location of a mark_b event minus location of a mark_a
/// event) over all cross pairs.
inline LagSummary lag_summary(const EventCatalog& catalog, int mark_a, int mark_b) {
  std::vector<const EventRecord*> a, b;
  for (const auto& e : catalog.events()) {
    if (e.mark == mark_a) a.push_back(&e);
    if (e.mark == mark_b) b.push_back(&e);
  }
  if (a.empty() || b.empty()) throw std::domain_error("lag_summary: mark absent from catalog");
  std::vector<double> lon, lat, x, y;
  const std::size_t n = a.size() * b.size();
  lon.reserve(n);
  lat.reserve(n);
  x.reserve(n);
  y.reserve(n);
  for (const auto* ea : a) {
    for (const auto* eb : b) {
      lon.push_back(eb->lon - ea->lon);
      lat.push_back(eb->lat - ea->lat);
      x.push_back(eb->x - ea->x);
      y.push_back(eb->y - ea->y);
    }
  }
  LagSummary s;
  s.n_pairs = n;
  s.lon_deg = detail::lag_stats(std::move(lon));
  s.lat_deg = detail::lag_stats(std::move(lat));
  s.x_km = detail::lag_stats(std::move(x));
  s.y_km = detail::lag_stats(std::move(y));
  return s;
}

}  // namespace sthawkes
