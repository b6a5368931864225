#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sthawkes/catalog.hpp"
#include "sthawkes/covariate.hpp"

namespace sthawkes {

/// Malformed input data (exit code 3 in the CLI).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------------ dates

/// Days since 1970-01-01 (UTC) of "YYYY-MM-DD" or "YYYY-MM-DDTHH:MM:SS".
inline double parse_date(const std::string& s) {
  int y = 0;
  unsigned m = 0, d = 0, hh = 0, mm = 0, ss = 0;
  char tail = 0;
  const bool has_time = s.size() > 10;
  const int got = has_time ? std::sscanf(s.c_str(), "%d-%u-%uT%u:%u:%u%c", &y, &m, &d, &hh, &mm, &ss, &tail)
                           : std::sscanf(s.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail);
  if (got != (has_time ? 6 : 3) || hh > 23 || mm > 59 || ss > 59) {
    throw DataError("invalid date '" + s + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw DataError("invalid date '" + s + "'");
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<double>(days) + (hh * 3600.0 + mm * 60.0 + ss) / 86400.0;
}

/// Inverse of parse_date; the time part is written only when nonzero.
inline std::string format_date(double days_since_1970, bool always_time = false) {
  const double whole = std::floor(days_since_1970);
  auto secs = static_cast<long long>(std::llround((days_since_1970 - whole) * 86400.0));
  long long day = static_cast<long long>(whole);
  if (secs >= 86400) {
    secs -= 86400;
    ++day;
  }
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  std::string out = buf;
  if (secs != 0 || always_time) {
    std::snprintf(buf, sizeof buf, "T%02lld:%02lld:%02lld", secs / 3600, (secs / 60) % 60, secs % 60);
    out += buf;
  }
  return out;
}

/// Days from `epoch` (a date string) to January 1 of `year`.
inline double year_start(int year, double epoch_days) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::January, std::chrono::day{1}};
  return static_cast<double>(std::chrono::sys_days{ymd}.time_since_epoch().count()) - epoch_days;
}

// -------------------------------------------------------------------- csv

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? "" : f.substr(b, e - b + 1);
  }
  return out;
}

inline std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::optional<int> to_int(const std::string& s) {
  int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// ------------------------------------------------------------- event rows

struct RawEvent {
  std::string group;
  double t{0.0};  // days since the configured epoch
  double lon{0.0};
  double lat{0.0};
  std::optional<int> specificity;
  std::size_t line{0};
};

struct DroppedRow {
  std::size_t line{0};
  std::string reason;
};

/// Parses `group,date,lon,lat[,specificity]` rows; a header row is skipped.
/// Malformed rows go to `bad` instead of throwing.
inline std::vector<RawEvent> parse_event_rows(const std::vector<std::string>& lines, double epoch_days,
                                              std::vector<DroppedRow>& bad) {
  std::vector<RawEvent> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    const auto first = lines[i].find_first_not_of(" \t\r");
    if (first == std::string::npos || lines[i][first] == '#') continue;
    const auto f = split_csv_line(lines[i]);
    if (!f.empty() && f[0] == "group") continue;
    if (f.size() < 4 || f.size() > 5) {
      bad.push_back({lineno, "expected 4 or 5 fields, got " + std::to_string(f.size())});
      continue;
    }
    RawEvent e;
    e.line = lineno;
    e.group = f[0];
    if (e.group.empty()) {
      bad.push_back({lineno, "empty group"});
      continue;
    }
    try {
      e.t = parse_date(f[1]) - epoch_days;
    } catch (const DataError& err) {
      bad.push_back({lineno, err.what()});
      continue;
    }
    const auto lon = to_double(f[2]), lat = to_double(f[3]);
    if (!lon || !lat || std::abs(*lat) >= 89.0 || std::abs(*lon) > 180.0) {
      bad.push_back({lineno, "invalid lon/lat"});
      continue;
    }
    e.lon = *lon;
    e.lat = *lat;
    if (f.size() == 5 && !f[4].empty()) {
      const auto sp = to_int(f[4]);
      if (!sp || *sp < 1 || *sp > 5) {
        bad.push_back({lineno, "specificity must be an integer 1-5"});
        continue;
      }
      e.specificity = sp;
    }
    out.push_back(e);
  }
  return out;
}

/// Writes the event CSV schema; `epoch_days` converts catalog time to dates.
inline void write_events_csv(std::ostream& os, const EventCatalog& catalog, double epoch_days) {
  os << "group,date,lon,lat,specificity\n";
  char buf[64];
  for (const auto& e : catalog.events()) {
    os << catalog.mark_name(e.mark) << ',' << format_date(epoch_days + e.t) << ',';
    std::snprintf(buf, sizeof buf, "%.9f,%.9f,", e.lon, e.lat);
    os << buf;
    if (e.specificity) os << *e.specificity;
    os << '\n';
  }
}

// ----------------------------------------------------------------- window

/// Coordinate ring from a JSON array [[lon, lat], ...] or a GeoJSON Polygon
/// (first ring), as (lon, lat) points.
inline std::vector<Point> read_ring_lonlat(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open window file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError("window file '" + path + "': " + e.what());
  }
  if (j.is_object()) {
    if (j.contains("geometry")) j = j["geometry"];
    if (!j.contains("coordinates")) throw DataError("window file: no coordinates");
    j = j["coordinates"];
  }
  while (j.is_array() && !j.empty() && j[0].is_array() && !j[0].empty() && j[0][0].is_array()) j = j[0];
  std::vector<Point> ring;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() < 2 || !p[0].is_number() || !p[1].is_number()) {
      throw DataError("window file: expected [lon, lat] pairs");
    }
    ring.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  if (ring.size() > 3 && ring.front() == ring.back()) ring.pop_back();
  if (ring.size() < 3) throw DataError("window file: ring needs at least 3 points");
  return ring;
}

struct ProjectedWindow {
  SpatialWindow window;
  Projection projection;
};

/// Projects a lon/lat ring about its planar centroid.
inline ProjectedWindow project_ring(const std::vector<Point>& ring_lonlat) {
  const Point c = polygon::centroid(ring_lonlat);
  Projection proj(c.x, c.y);
  std::vector<Point> km;
  for (const auto& p : ring_lonlat) km.push_back(proj.forward(p.x, p.y));
  return {SpatialWindow(std::move(km)), proj};
}

/// Bounding box of the events inflated by `inflate` of its size per side.
inline ProjectedWindow bbox_window(const std::vector<RawEvent>& events, double inflate = 0.05) {
  if (events.empty()) throw DataError("no events to derive a window from");
  double lon0 = events[0].lon, lon1 = lon0, lat0 = events[0].lat, lat1 = lat0;
  for (const auto& e : events) {
    lon0 = std::min(lon0, e.lon);
    lon1 = std::max(lon1, e.lon);
    lat0 = std::min(lat0, e.lat);
    lat1 = std::max(lat1, e.lat);
  }
  const double px = std::max(inflate * (lon1 - lon0), 1e-3), py = std::max(inflate * (lat1 - lat0), 1e-3);
  return project_ring({{lon0 - px, lat0 - py}, {lon1 + px, lat0 - py}, {lon1 + px, lat1 + py}, {lon0 - px, lat1 + py}});
}

// -------------------------------------------------------------- covariate

/// Reads `lon,lat,year,value` rows (header optional).
inline CovariateField read_covariate_csv(const std::string& path, double epoch_days) {
  const auto lines = read_lines(path);
  std::vector<CovariatePoint> pts;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto first = lines[i].find_first_not_of(" \t\r");
    if (first == std::string::npos || lines[i][first] == '#') continue;
    const auto f = split_csv_line(lines[i]);
    if (!f.empty() && f[0] == "lon") continue;
    if (f.size() != 4) throw DataError(path + ":" + std::to_string(i + 1) + ": expected lon,lat,year,value");
    const auto lon = to_double(f[0]), lat = to_double(f[1]), val = to_double(f[3]);
    const auto year = to_int(f[2]);
    if (!lon || !lat || !val || !year) throw DataError(path + ":" + std::to_string(i + 1) + ": malformed row");
    pts.push_back({*lon, *lat, *year, *val});
  }
  if (pts.empty()) throw DataError(path + ": no covariate rows");
  try {
    return CovariateField::from_points(pts, [epoch_days](int y) { return year_start(y, epoch_days); });
  } catch (const std::invalid_argument& e) {
    throw DataError(path + ": " + e.what());
  }
}

// -------------------------------------------------------------- ingestion

struct IngestOptions {
  double epoch_days{0.0};
  std::optional<double> end_days;  // exclusive; default: last event day + 1
  std::optional<std::vector<Point>> window_ring;  // lon/lat
  std::vector<std::string> marks;  // group names in mark order; empty: infer
  std::optional<int> specificity_max;
  bool skip_bad_rows{false};
  double jitter_sd{0.01};
  std::uint64_t jitter_seed{1};
};

struct IngestReport {
  std::size_t rows{0};
  std::size_t kept{0};
  std::size_t jittered{0};
  std::vector<DroppedRow> malformed;
  std::vector<DroppedRow> filtered;  // specificity, time or window
};

struct Ingested {
  EventCatalog catalog;
  IngestReport report;
  double epoch_days{0.0};
};

/// Parse, filter by specificity, project, jitter duplicates, sort.
inline Ingested ingest_events(const std::vector<std::string>& lines, const IngestOptions& opt) {
  IngestReport rep;
  auto raw = parse_event_rows(lines, opt.epoch_days, rep.malformed);
  rep.rows = raw.size() + rep.malformed.size();
  if (!rep.malformed.empty() && !opt.skip_bad_rows) {
    std::string msg = std::to_string(rep.malformed.size()) + " malformed row(s); first at line " +
                      std::to_string(rep.malformed.front().line) + ": " + rep.malformed.front().reason;
    throw DataError(msg);
  }
  std::vector<std::string> names = opt.marks;
  if (names.empty()) {
    for (const auto& e : raw) names.push_back(e.group);
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    const bool numeric = std::all_of(names.begin(), names.end(), [](const auto& s) { return to_int(s).has_value(); });
    if (numeric) {
      std::sort(names.begin(), names.end(), [](const auto& a, const auto& b) { return *to_int(a) < *to_int(b); });
    }
  }
  if (names.empty()) names.push_back("0");
  const ProjectedWindow pw = opt.window_ring ? project_ring(*opt.window_ring) : bbox_window(raw);
  double T = 0.0;
  if (opt.end_days) {
    T = *opt.end_days - opt.epoch_days;
  } else {
    for (const auto& e : raw) T = std::max(T, std::floor(e.t) + 1.0);
  }
  std::vector<EventRecord> events;
  for (const auto& r : raw) {
    const auto it = std::find(names.begin(), names.end(), r.group);
    if (it == names.end()) {
      rep.filtered.push_back({r.line, "group '" + r.group + "' not in configured marks"});
      continue;
    }
    if (opt.specificity_max && r.specificity && *r.specificity > *opt.specificity_max) {
      rep.filtered.push_back({r.line, "specificity " + std::to_string(*r.specificity) + " above threshold"});
      continue;
    }
    if (r.t < 0.0 || r.t >= T) {
      rep.filtered.push_back({r.line, "outside time window"});
      continue;
    }
    EventRecord e;
    e.mark = static_cast<int>(it - names.begin());
    e.lon = r.lon;
    e.lat = r.lat;
    e.t = r.t;
    e.specificity = r.specificity;
    const Point p = pw.projection.forward(r.lon, r.lat);
    e.x = p.x;
    e.y = p.y;
    if (!pw.window.contains(p)) {
      rep.filtered.push_back({r.line, "outside spatial window"});
      continue;
    }
    events.push_back(e);
  }
  auto catalog = EventCatalog::from_unsorted(std::move(events), static_cast<int>(names.size()), T, pw.window,
                                             pw.projection, names);
  catalog = jitter_duplicates(catalog, opt.jitter_sd, opt.jitter_seed, &rep.jittered);
  rep.kept = catalog.size();
  return {std::move(catalog), std::move(rep), opt.epoch_days};
}

}  // namespace sthawkes
