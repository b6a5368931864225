#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "sthawkes/geometry.hpp"

namespace sthawkes {

struct EventRecord {
  int mark{0};
  double lon{0.0};
  double lat{0.0};
  double t{0.0};  // days since catalog epoch
  std::optional<int> specificity;
  double x{0.0};  // projected km
  double y{0.0};

  [[nodiscard]] Point location() const { return {x, y}; }
};

/// Time-ordered multivariate marked point pattern on window x [0, T).
class EventCatalog {
 public:
  EventCatalog() = default;

  /// Rejects catalogs that are not sorted by time.
  EventCatalog(std::vector<EventRecord> events, int n_marks, double T, SpatialWindow window,
               Projection projection, std::vector<std::string> mark_names = {})
      : events_(std::move(events)),
        n_marks_(n_marks),
        T_(T),
        window_(std::move(window)),
        projection_(projection),
        mark_names_(std::move(mark_names)) {
    validate();
  }

  /// Stable-sorts by time before constructing.
  static EventCatalog from_unsorted(std::vector<EventRecord> events, int n_marks, double T,
                                    SpatialWindow window, Projection projection,
                                    std::vector<std::string> mark_names = {}) {
    std::stable_sort(events.begin(), events.end(),
                     [](const EventRecord& a, const EventRecord& b) { return a.t < b.t; });
    return EventCatalog(std::move(events), n_marks, T, std::move(window), projection,
                        std::move(mark_names));
  }

  [[nodiscard]] const std::vector<EventRecord>& events() const { return events_; }
  [[nodiscard]] std::size_t size() const { return events_.size(); }
  [[nodiscard]] bool empty() const { return events_.empty(); }
  [[nodiscard]] const EventRecord& operator[](std::size_t i) const { return events_[i]; }
  [[nodiscard]] int n_marks() const { return n_marks_; }
  [[nodiscard]] double T() const { return T_; }
  [[nodiscard]] const SpatialWindow& window() const { return window_; }
  [[nodiscard]] const Projection& projection() const { return projection_; }
  [[nodiscard]] const std::vector<std::string>& mark_names() const { return mark_names_; }

  [[nodiscard]] std::string mark_name(int k) const {
    if (k >= 0 && static_cast<std::size_t>(k) < mark_names_.size()) return mark_names_[k];
    return std::to_string(k);
  }

  [[nodiscard]] std::vector<std::size_t> counts_by_mark() const {
    std::vector<std::size_t> c(static_cast<std::size_t>(n_marks_), 0);
    for (const auto& e : events_) ++c[static_cast<std::size_t>(e.mark)];
    return c;
  }

  /// FNV-1a over the event content; identifies "the same catalog" across files.
  [[nodiscard]] std::uint64_t content_hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t len) {
      const auto* p = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
      }
    };
    mix(&n_marks_, sizeof n_marks_);
    mix(&T_, sizeof T_);
    for (const auto& e : events_) {
      mix(&e.mark, sizeof e.mark);
      mix(&e.t, sizeof e.t);
      mix(&e.x, sizeof e.x);
      mix(&e.y, sizeof e.y);
    }
    return h;
  }

 private:
  void validate() const {
    if (n_marks_ < 1) throw std::invalid_argument("catalog: n_marks must be >= 1");
    if (!(T_ >= 0.0)) throw std::invalid_argument("catalog: T must be >= 0");
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const auto& e = events_[i];
      if (i > 0 && e.t < events_[i - 1].t) {
        throw std::invalid_argument("catalog: events not sorted by time");
      }
      if (e.mark < 0 || e.mark >= n_marks_) {
        throw std::invalid_argument("catalog: group mark out of range");
      }
      if (!(e.t >= 0.0 && e.t < T_)) {
        throw std::invalid_argument("catalog: event time outside [0, T)");
      }
      if (e.specificity && (*e.specificity < 1 || *e.specificity > 5)) {
        throw std::invalid_argument("catalog: specificity outside 1..5");
      }
      if (!window_.contains(e.location())) {
        throw std::invalid_argument("catalog: event outside spatial window");
      }
    }
  }

  std::vector<EventRecord> events_;
  int n_marks_{1};
  double T_{0.0};
  SpatialWindow window_;
  Projection projection_;
  std::vector<std::string> mark_names_;
};

/// Perturbs lon/lat of every event whose (lon, lat, t) is shared with another
/// event by independent Normal(0, sd^2) draws. A draw that leaves the window is
/// retried; after 100 failures the event keeps its original position.
inline EventCatalog jitter_duplicates(const EventCatalog& catalog, double sd, std::uint64_t seed,
                                      std::size_t* n_jittered = nullptr) {
  if (!(sd >= 0.0)) throw std::invalid_argument("jitter_duplicates: sd must be >= 0");
  std::vector<EventRecord> events = catalog.events();
  std::map<std::tuple<double, double, double>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < events.size(); ++i) {
    groups[{events[i].lon, events[i].lat, events[i].t}].push_back(i);
  }
  std::size_t touched = 0;
  if (sd > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sd);
    const auto& proj = catalog.projection();
    for (const auto& [key, idx] : groups) {
      if (idx.size() < 2) continue;
      for (std::size_t i : idx) {
        auto& e = events[i];
        for (int attempt = 0; attempt < 100; ++attempt) {
          const double lon = e.lon + noise(rng);
          const double lat = e.lat + noise(rng);
          const Point p = proj.forward(lon, lat);
          if (catalog.window().contains(p)) {
            e.lon = lon;
            e.lat = lat;
            e.x = p.x;
            e.y = p.y;
            ++touched;
            break;
          }
        }
      }
    }
  }
  if (n_jittered) *n_jittered = touched;
  return EventCatalog(std::move(events), catalog.n_marks(), catalog.T(), catalog.window(),
                      catalog.projection(), catalog.mark_names());
}

/// Collapses all marks into a single pattern.
inline EventCatalog merge_marks(const EventCatalog& catalog) {
  std::vector<EventRecord> events = catalog.events();
  for (auto& e : events) e.mark = 0;
  return EventCatalog(std::move(events), 1, catalog.T(), catalog.window(), catalog.projection(),
                      {"merged"});
}

/// Events from `history` followed by `tail`; used to condition a later window
/// on earlier events. Both must share window and projection.
inline EventCatalog concatenate(const EventCatalog& history, const EventCatalog& tail) {
  if (history.n_marks() != tail.n_marks()) {
    throw std::domain_error("concatenate: mark count mismatch");
  }
  std::vector<EventRecord> events = history.events();
  events.insert(events.end(), tail.events().begin(), tail.events().end());
  return EventCatalog(std::move(events), history.n_marks(), std::max(history.T(), tail.T()),
                      history.window(), history.projection(), history.mark_names());
}

}  // namespace sthawkes
