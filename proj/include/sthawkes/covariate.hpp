#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace sthawkes {

enum class StandardizationMode { none, log_max, z_score, unit_time };

/// Scaling applied to raw covariate values; kept so holdout rasters can be
/// transformed with the training constants.
struct Standardization {
  StandardizationMode mode{StandardizationMode::none};
  double max_log{1.0};
  double mean{0.0};
  double sd{1.0};
  double min{0.0};
  double max{1.0};

  [[nodiscard]] double apply(double v) const {
    switch (mode) {
      case StandardizationMode::none: return v;
      case StandardizationMode::log_max: return std::log1p(v) / max_log;
      case StandardizationMode::z_score: return (v - mean) / sd;
      case StandardizationMode::unit_time: return (v - min) / (max - min);
    }
    return v;
  }
};

struct CovariatePoint {
  double lon{0.0};
  double lat{0.0};
  int year{0};
  double value{0.0};
};

/// Regular lon/lat raster with one layer per time slice (calendar year).
/// Lookup is nearest cell; slices are piecewise constant in time.
class CovariateField {
 public:
  CovariateField() = default;

  CovariateField(std::vector<double> lons, std::vector<double> lats, std::vector<int> years,
                 std::vector<double> slice_starts, std::vector<double> values,
                 Standardization standardization = {})
      : lons_(std::move(lons)),
        lats_(std::move(lats)),
        years_(std::move(years)),
        slice_starts_(std::move(slice_starts)),
        values_(std::move(values)),
        standardization_(standardization) {
    auto strictly_increasing = [](const std::vector<double>& v) {
      for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] > v[i - 1])) return false;
      }
      return !v.empty();
    };
    if (!strictly_increasing(lons_) || !strictly_increasing(lats_)) {
      throw std::invalid_argument("covariate: grid axes must be strictly increasing");
    }
    if (years_.empty() || slice_starts_.size() != years_.size() ||
        !strictly_increasing(slice_starts_)) {
      throw std::invalid_argument("covariate: invalid time slices");
    }
    if (values_.size() != years_.size() * lats_.size() * lons_.size()) {
      throw std::invalid_argument("covariate: value count does not match grid");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw std::invalid_argument("covariate: non-finite value");
    }
  }

  /// Builds a field from (lon, lat, year, value) rows covering a full grid.
  /// `year_start` maps a calendar year to its first day in catalog time.
  static CovariateField from_points(const std::vector<CovariatePoint>& points,
                                    const std::function<double(int)>& year_start) {
    std::vector<double> lons, lats;
    std::vector<int> years;
    for (const auto& p : points) {
      lons.push_back(p.lon);
      lats.push_back(p.lat);
      years.push_back(p.year);
    }
    auto uniq = [](auto& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    uniq(lons);
    uniq(lats);
    uniq(years);
    const std::size_t nlon = lons.size(), nlat = lats.size();
    std::vector<double> values(years.size() * nlat * nlon, 0.0);
    std::vector<char> seen(values.size(), 0);
    for (const auto& p : points) {
      const auto ix = static_cast<std::size_t>(
          std::lower_bound(lons.begin(), lons.end(), p.lon) - lons.begin());
      const auto iy = static_cast<std::size_t>(
          std::lower_bound(lats.begin(), lats.end(), p.lat) - lats.begin());
      const auto is = static_cast<std::size_t>(
          std::lower_bound(years.begin(), years.end(), p.year) - years.begin());
      const std::size_t k = (is * nlat + iy) * nlon + ix;
      if (seen[k]) throw std::invalid_argument("covariate: duplicate grid cell");
      seen[k] = 1;
      values[k] = p.value;
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      throw std::invalid_argument("covariate: grid is incomplete");
    }
    std::vector<double> starts;
    for (int y : years) starts.push_back(year_start(y));
    return CovariateField(std::move(lons), std::move(lats), std::move(years), std::move(starts),
                          std::move(values));
  }

  [[nodiscard]] std::size_t n_slices() const { return years_.size(); }
  [[nodiscard]] const std::vector<int>& years() const { return years_; }
  [[nodiscard]] const std::vector<double>& slice_starts() const { return slice_starts_; }
  [[nodiscard]] const std::vector<double>& lons() const { return lons_; }
  [[nodiscard]] const std::vector<double>& lats() const { return lats_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  [[nodiscard]] const Standardization& standardization() const { return standardization_; }

  /// Slice holding time t; times before the first slice use the first layer.
  [[nodiscard]] std::size_t slice_of(double t) const {
    const auto it = std::upper_bound(slice_starts_.begin(), slice_starts_.end(), t);
    if (it == slice_starts_.begin()) return 0;
    return static_cast<std::size_t>(it - slice_starts_.begin()) - 1;
  }

  /// Nearest-cell lookup; throws std::domain_error outside the raster.
  [[nodiscard]] double lookup(double lon, double lat, double t) const {
    return at(slice_of(t), nearest(lats_, lat), nearest(lons_, lon));
  }

  [[nodiscard]] double lookup_slice(double lon, double lat, std::size_t slice) const {
    return at(slice, nearest(lats_, lat), nearest(lons_, lon));
  }

  [[nodiscard]] double at(std::size_t slice, std::size_t ilat, std::size_t ilon) const {
    return values_[(slice * lats_.size() + ilat) * lons_.size() + ilon];
  }

  [[nodiscard]] double min_value() const {
    return *std::min_element(values_.begin(), values_.end());
  }
  [[nodiscard]] double max_value() const {
    return *std::max_element(values_.begin(), values_.end());
  }

  [[nodiscard]] CovariateField with_values(std::vector<double> values,
                                           Standardization standardization) const {
    return CovariateField(lons_, lats_, years_, slice_starts_, std::move(values), standardization);
  }

 private:
  static std::size_t nearest(const std::vector<double>& axis, double v) {
    const std::size_t n = axis.size();
    if (n == 1) return 0;
    const double lo = axis.front() - 0.5 * (axis[1] - axis[0]);
    const double hi = axis.back() + 0.5 * (axis[n - 1] - axis[n - 2]);
    if (!(v >= lo && v <= hi)) throw std::domain_error("covariate: lookup outside raster");
    const auto it = std::lower_bound(axis.begin(), axis.end(), v);
    if (it == axis.begin()) return 0;
    if (it == axis.end()) return n - 1;
    const auto i = static_cast<std::size_t>(it - axis.begin());
    // ties go to the lower cell
    return (v - axis[i - 1] <= axis[i] - v) ? i - 1 : i;
  }

  std::vector<double> lons_;
  std::vector<double> lats_;
  std::vector<int> years_;
  std::vector<double> slice_starts_;
  std::vector<double> values_;
  Standardization standardization_;
};

/// Applies a stored standardization record to a raw field (holdout rasters).
inline CovariateField apply_standardization(const CovariateField& raw, const Standardization& rec) {
  std::vector<double> out;
  out.reserve(raw.values().size());
  for (double v : raw.values()) {
    if (rec.mode == StandardizationMode::log_max && v < 0.0) {
      throw std::domain_error("standardize: log_max needs nonnegative raw values");
    }
    out.push_back(rec.apply(v));
  }
  return raw.with_values(std::move(out), rec);
}

/// log_max: log(1+v) / max log(1+v) over all pixels and slices.
/// z_score: (v - mean) / sd.  unit_time: (v - min) / (max - min).
inline CovariateField standardize_covariate(const CovariateField& raw, StandardizationMode mode) {
  Standardization rec;
  rec.mode = mode;
  const auto& v = raw.values();
  switch (mode) {
    case StandardizationMode::none: break;
    case StandardizationMode::log_max: {
      double m = 0.0;
      for (double x : v) {
        if (x < 0.0) throw std::domain_error("standardize: log_max needs nonnegative raw values");
        m = std::max(m, std::log1p(x));
      }
      if (!(m > 0.0)) throw std::domain_error("standardize: all-zero covariate field");
      rec.max_log = m;
      break;
    }
    case StandardizationMode::z_score: {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double sd = std::sqrt(ss / static_cast<double>(v.size()));
      if (!(sd > 0.0)) throw std::domain_error("standardize: constant covariate field");
      rec.mean = mean;
      rec.sd = sd;
      break;
    }
    case StandardizationMode::unit_time: {
      rec.min = raw.min_value();
      rec.max = raw.max_value();
      if (!(rec.max > rec.min)) throw std::domain_error("standardize: constant covariate field");
      break;
    }
  }
  return apply_standardization(raw, rec);
}

}  // namespace sthawkes
