// sthawkes: ingest, fit, simulate, eval, diagnose and compare from a TOML-style
// run configuration. Exit codes: 0 ok, 2 config, 3 data, 4 optimizer.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sthawkes/sthawkes.hpp"

namespace fs = std::filesystem;
using namespace sthawkes;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitOptimizer = 4;

const std::vector<std::string> kAllowedKeys = {
    "data.events",       "data.epoch",           "data.end",          "data.window",
    "data.covariate",    "data.covariate_mode",  "data.marks",        "data.specificity_max",
    "data.skip_bad_rows", "data.merge",          "jitter.sd",         "jitter.seed",
    "model.preset",      "model.truncation",     "model.horizon_factor", "kernel.*",
    "grid.ns",           "grid.nt",              "fit.starts",        "fit.seed",
    "fit.standard_errors", "fit.start_jitter",   "fit.max_stages",    "fit.max_restarts",
    "simulate.method",   "simulate.edge",        "simulate.T",        "simulate.seed",
    "simulate.bbox",     "simulate.model",       "simulate.marks",    "params.*",
    "eval.fit",          "eval.test_events",     "eval.test_start",   "eval.test_end",
    "eval.condition_on_history", "diagnose.max_dt", "diagnose.max_ds", "diagnose.bins",
    "diagnose.marks",    "diagnose.fit",         "compare.fits",      "output.dir",
};

struct Flags {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> grid_ns;
  std::optional<int> grid_nt;
  std::optional<int> specificity_max;
  bool skip_bad_rows{false};
  std::vector<std::string> files;
};

struct Run {
  Config cfg;
  std::string command;
  std::uint64_t seed{1};
  fs::path out;

  [[nodiscard]] std::string hash_hex() const {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(cfg.hash()));
    return buf;
  }

  [[nodiscard]] std::string csv_header() const {
    return "# sthawkes " + std::string(kVersion) + " command=" + command + " config=" + hash_hex() +
           " seed=" + std::to_string(seed) + "\n";
  }

  [[nodiscard]] json meta() const {
    return {{"version", kVersion}, {"command", command}, {"config_hash", hash_hex()}, {"seed", seed}};
  }

  [[nodiscard]] fs::path path(const std::string& name) const { return out / name; }

  void write_json(const std::string& name, json j) const {
    j["meta"] = meta();
    std::ofstream os(path(name));
    os << j.dump(2) << '\n';
    std::cout << "wrote " << path(name).string() << '\n';
  }

  void write_text(const std::string& name, const std::string& body) const {
    std::ofstream os(path(name));
    os << csv_header() << body;
    std::cout << "wrote " << path(name).string() << '\n';
  }
};

ConfigValue number_value(double v) { return {v, 0}; }
ConfigValue string_value(std::string v) { return {std::move(v), 0}; }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<std::string> mark_labels(int n) {
  if (n == 2) return {"b", "f"};
  std::vector<std::string> out;
  for (int k = 0; k < n; ++k) out.push_back(std::to_string(k));
  return out;
}

std::shared_ptr<const CovariateField> load_covariate(const Config& c, double epoch) {
  const auto path = c.get_string("data.covariate");
  if (!path) return nullptr;
  const std::string mode = c.get_string("data.covariate_mode").value_or("log_max");
  StandardizationMode m;
  if (mode == "none") {
    m = StandardizationMode::none;
  } else if (mode == "log_max") {
    m = StandardizationMode::log_max;
  } else if (mode == "z_score") {
    m = StandardizationMode::z_score;
  } else if (mode == "unit_time") {
    m = StandardizationMode::unit_time;
  } else {
    throw ConfigError("data.covariate_mode must be none, log_max, z_score or unit_time",
                      c.line_of("data.covariate_mode"));
  }
  const auto raw = read_covariate_csv(*path, epoch);
  return std::make_shared<const CovariateField>(standardize_covariate(raw, m));
}

double epoch_of(const Config& c) {
  const std::string e = c.get_string("data.epoch").value_or("1970-01-01");
  try {
    return parse_date(e);
  } catch (const DataError& err) {
    throw ConfigError(err.what(), c.line_of("data.epoch"));
  }
}

double date_key(const Config& c, const std::string& key) {
  const auto s = c.get_string(key);
  if (!s) throw ConfigError("'" + key + "' is required");
  try {
    return parse_date(*s);
  } catch (const DataError& err) {
    throw ConfigError(err.what(), c.line_of(key));
  }
}

IngestOptions ingest_options(const Config& c) {
  IngestOptions opt;
  opt.epoch_days = epoch_of(c);
  if (c.has("data.end")) opt.end_days = date_key(c, "data.end");
  if (const auto w = c.get_string("data.window")) opt.window_ring = read_ring_lonlat(*w);
  opt.marks = c.get_strings("data.marks").value_or(std::vector<std::string>{});
  if (const auto s = c.get_int("data.specificity_max")) opt.specificity_max = static_cast<int>(*s);
  opt.skip_bad_rows = c.get_bool("data.skip_bad_rows").value_or(false);
  opt.jitter_sd = c.get_number("jitter.sd").value_or(opt.jitter_sd);
  opt.jitter_seed = static_cast<std::uint64_t>(c.get_int("jitter.seed").value_or(1));
  return opt;
}

std::vector<std::string> event_lines(const Config& c) {
  const auto path = c.get_string("data.events");
  if (!path) throw ConfigError("'data.events' is required");
  return read_lines(*path);
}

LikelihoodOptions likelihood_options(const Config& c) {
  LikelihoodOptions o;
  o.truncate = c.get_bool("model.truncation").value_or(true);
  o.horizon_factor = c.get_number("model.horizon_factor").value_or(o.horizon_factor);
  return o;
}

QuadratureGrid grid_for(const Config& c, const SpatialWindow& w, double t0, double t1) {
  const auto ns = c.get_int("grid.ns").value_or(400), nt = c.get_int("grid.nt").value_or(100);
  if (ns < 1 || nt < 1) throw ConfigError("grid sizes must be >= 1", c.line_of("grid.ns"));
  return QuadratureGrid(w, t0, t1, static_cast<int>(ns), static_cast<int>(nt));
}

KernelVariant variant_of(const std::string& s, std::size_t line) {
  if (s == "g1") return KernelVariant::separable;
  if (s == "g2") return KernelVariant::shifted;
  if (s == "g3") return KernelVariant::nonseparable;
  throw ConfigError("kernel variant must be g1, g2 or g3", line);
}

int mark_index(const std::vector<std::string>& names, const std::string& s, std::size_t line) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == s) return static_cast<int>(i);
  }
  if (const auto k = to_int(s); k && *k >= 0 && static_cast<std::size_t>(*k) < std::max<std::size_t>(names.size(), 1)) {
    return *k;
  }
  throw ConfigError("unknown mark '" + s + "'", line);
}

/// [kernel.S.T] sections of a custom layout.
std::vector<CustomEntry> custom_entries(const Config& c, const std::vector<std::string>& names) {
  std::vector<CustomEntry> out;
  for (const auto& sec : c.sections()) {
    if (sec.rfind("kernel.", 0) != 0) continue;
    const std::string rest = sec.substr(7);
    const auto dot = rest.find('.');
    const std::size_t line = c.line_of(sec + ".variant");
    if (dot == std::string::npos) throw ConfigError("kernel sections are [kernel.<source>.<target>]", line);
    CustomEntry e;
    e.source = mark_index(names, rest.substr(0, dot), line);
    e.target = mark_index(names, rest.substr(dot + 1), line);
    e.variant = variant_of(c.get_string(sec + ".variant").value_or("g1"), line);
    const std::string temporal = c.get_string(sec + ".temporal").value_or("exponential");
    if (temporal == "exponential") {
      e.temporal = TemporalFamily::exponential;
    } else if (temporal == "half_normal") {
      e.temporal = TemporalFamily::half_normal;
    } else {
      throw ConfigError("kernel temporal must be exponential or half_normal", c.line_of(sec + ".temporal"));
    }
    out.push_back(e);
  }
  if (out.empty()) throw ConfigError("preset 'custom' needs at least one [kernel.S.T] section");
  return out;
}

ModelTemplate template_for(const Config& c, const PresetContext& ctx, const std::vector<std::string>& names) {
  const std::string preset = c.get_string("model.preset").value_or("");
  if (preset.empty()) throw ConfigError("'model.preset' is required");
  try {
    if (preset == "custom") return make_custom(custom_entries(c, names), ctx);
    return make_preset(preset, ctx);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), c.line_of("model.preset"));
  }
}

struct Data {
  Ingested ingested;
  std::shared_ptr<const CovariateField> covariate;
};

Data load_data(const Config& c) {
  const auto opt = ingest_options(c);
  Data d{ingest_events(event_lines(c), opt), load_covariate(c, opt.epoch_days)};
  return d;
}

/// Collapses marks when the preset is univariate and the data are not.
EventCatalog catalog_for_preset(const Config& c, const EventCatalog& cat) {
  const std::string preset = c.get_string("model.preset").value_or("");
  if (preset.empty() || preset == "custom") return cat;
  int want = 0;
  try {
    want = preset_info(preset).n_marks;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), c.line_of("model.preset"));
  }
  if (want == 1 && cat.n_marks() > 1 && c.get_bool("data.merge").value_or(true)) return merge_marks(cat);
  return cat;
}

// ------------------------------------------------------------------ commands

int cmd_ingest(const Run& run) {
  const Data d = load_data(run.cfg);
  const auto& cat = d.ingested.catalog;
  const auto& rep = d.ingested.report;
  std::ostringstream csv;
  write_events_csv(csv, cat, d.ingested.epoch_days);
  run.write_text("catalog.csv", csv.str());
  json dropped = json::array();
  for (const auto& r : rep.malformed) dropped.push_back({{"line", r.line}, {"reason", r.reason}, {"kind", "malformed"}});
  for (const auto& r : rep.filtered) dropped.push_back({{"line", r.line}, {"reason", r.reason}, {"kind", "filtered"}});
  json per_mark = json::object();
  for (int k = 0; k < cat.n_marks(); ++k) {
    per_mark[cat.mark_name(k)] = std::count_if(cat.events().begin(), cat.events().end(),
                                               [k](const EventRecord& e) { return e.mark == k; });
  }
  run.write_json("ingest_report.json", {{"rows", rep.rows},
                                        {"kept", rep.kept},
                                        {"jittered", rep.jittered},
                                        {"dropped", dropped},
                                        {"per_mark", per_mark},
                                        {"T_days", cat.T()},
                                        {"area_km2", cat.window().area()},
                                        {"catalog_hash", std::to_string(cat.content_hash())}});
  std::cout << "kept " << rep.kept << " of " << rep.rows << " rows\n";
  return 0;
}

std::string table_csv(const FitResult& f) {
  std::ostringstream os;
  os << "parameter,estimate,se\n";
  for (const auto& e : f.estimates) {
    os << e.name << ',' << fmt(e.value) << ',' << (e.se ? fmt(*e.se) : "") << '\n';
  }
  os << "# para," << f.k << ",\n";
  os << "max loglik," << fmt(f.loglik) << ",\n";
  os << "AIC," << fmt(f.ic.aic) << ",\n";
  os << "BIC," << fmt(f.ic.bic) << ",\n";
  os << "HQ," << fmt(f.ic.hq) << ",\n";
  return os.str();
}

int cmd_fit(const Run& run) {
  const Config& c = run.cfg;
  const Data d = load_data(c);
  const EventCatalog cat = catalog_for_preset(c, d.ingested.catalog);
  const QuadratureGrid grid = grid_for(c, cat.window(), 0.0, cat.T());
  PresetContext ctx = preset_context(cat, grid, d.covariate);
  ctx.mark_labels = mark_labels(cat.n_marks());
  const ModelTemplate tmpl = template_for(c, ctx, cat.mark_names());
  const LikelihoodEvaluator ev(cat, grid, d.covariate, likelihood_options(c));

  FitOptions opt;
  opt.n_starts = static_cast<int>(c.get_int("fit.starts").value_or(1));
  opt.seed = run.seed;
  opt.start_jitter = c.get_number("fit.start_jitter").value_or(opt.start_jitter);
  opt.max_stages = static_cast<int>(c.get_int("fit.max_stages").value_or(opt.max_stages));
  opt.max_restarts = static_cast<int>(c.get_int("fit.max_restarts").value_or(opt.max_restarts));
  opt.standard_errors = c.get_bool("fit.standard_errors").value_or(true);
  try {
    const FitResult res = fit(tmpl, ev, opt);
    json j = to_json(res);
    j["expected_counts"] = json::array();
    for (const auto& t : expected_counts(ev, res.model)) {
      j["expected_counts"].push_back({{"background", t.background}, {"marginal", t.marginal}, {"cross", t.cross}});
    }
    run.write_json("fit.json", j);
    run.write_text("table.csv", table_csv(res));
    std::cout << res.model_name << ": loglik " << fmt(res.loglik) << ", k " << res.k << ", AIC " << fmt(res.ic.aic)
              << (res.converged ? "" : " (not converged)") << '\n';
  } catch (const FitError& e) {
    json trace = json::array();
    for (const auto& t : e.trace()) {
      trace.push_back({{"start", t.start}, {"evaluations", t.evaluations}, {"stages", t.stages}});
    }
    run.write_json("fit_failure.json", {{"error", e.what()}, {"trace", trace}});
    std::cerr << "error: " << e.what() << '\n';
    return kExitOptimizer;
  }
  return 0;
}

int cmd_simulate(const Run& run) {
  const Config& c = run.cfg;
  const double epoch = epoch_of(c);
  const auto covariate = load_covariate(c, epoch);

  ProjectedWindow pw;
  if (const auto w = c.get_string("data.window")) {
    pw = project_ring(read_ring_lonlat(*w));
  } else if (const auto bb = c.get_numbers("simulate.bbox")) {
    if (bb->size() != 4) throw ConfigError("simulate.bbox is [lon0, lat0, lon1, lat1]", c.line_of("simulate.bbox"));
    const auto& b = *bb;
    pw = project_ring({{b[0], b[1]}, {b[2], b[1]}, {b[2], b[3]}, {b[0], b[3]}});
  } else {
    throw ConfigError("simulate needs data.window or simulate.bbox");
  }
  const auto T = c.get_number("simulate.T");
  if (!T || !(*T > 0.0)) throw ConfigError("simulate.T must be > 0", c.line_of("simulate.T"));

  ModelSpec model;
  if (const auto mpath = c.get_string("simulate.model")) {
    std::ifstream in(*mpath);
    if (!in) throw ConfigError("cannot open '" + *mpath + "'", c.line_of("simulate.model"));
    json j;
    in >> j;
    model = j.contains("spec") ? model_from_json(j.at("spec"), covariate) : model_from_json(j, covariate);
  } else {
    const std::string preset = c.get_string("model.preset").value_or("");
    int n_marks = 1;
    std::vector<std::string> names = c.get_strings("simulate.marks").value_or(std::vector<std::string>{});
    if (preset == "custom") {
      n_marks = std::max<int>(1, static_cast<int>(names.size()));
    } else if (!preset.empty()) {
      try {
        n_marks = preset_info(preset).n_marks;
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), c.line_of("model.preset"));
      }
    }
    PresetContext ctx;
    ctx.n_marks = n_marks;
    ctx.poisson_mu.assign(static_cast<std::size_t>(n_marks), 1e-4);
    ctx.time_scale = *T;
    ctx.covariate = covariate;
    ctx.mark_labels = mark_labels(n_marks);
    const ModelTemplate tmpl = unprofiled(template_for(c, ctx, names), ctx.mark_labels);
    std::vector<double> x = tmpl.initial;
    for (std::size_t i = 0; i < tmpl.params.size(); ++i) {
      if (tmpl.params[i].name.rfind("mu_", 0) == 0) x[i] = 1e-4;
    }
    const auto pnames = tmpl.names();
    for (const auto& [key, val] : c.values()) {
      if (key.rfind("params.", 0) != 0) continue;
      const std::string name = key.substr(7);
      const auto it = std::find(pnames.begin(), pnames.end(), name);
      if (it == pnames.end()) throw ConfigError("parameter '" + name + "' not in this model", val.line);
      x[static_cast<std::size_t>(it - pnames.begin())] = *c.get_number(key);
    }
    model = tmpl.instantiate(x);
  }
  try {
    model.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("simulate: ") + e.what());
  }

  SimConfig sc;
  sc.model = model;
  sc.window = pw.window;
  sc.projection = pw.projection;
  sc.T = *T;
  sc.seed = run.seed;
  sc.mark_names = c.get_strings("simulate.marks").value_or(mark_labels(model.n_marks));
  const std::string method = c.get_string("simulate.method").value_or("branching");
  if (method == "branching") {
    sc.method = SimMethod::branching;
  } else if (method == "thinning") {
    sc.method = SimMethod::thinning;
  } else {
    throw ConfigError("simulate.method must be branching or thinning", c.line_of("simulate.method"));
  }
  const std::string edge = c.get_string("simulate.edge").value_or("clip");
  if (edge == "clip") {
    sc.edge = EdgePolicy::clip;
  } else if (edge == "none") {
    sc.edge = EdgePolicy::none;
  } else {
    throw ConfigError("simulate.edge must be clip or none", c.line_of("simulate.edge"));
  }
  EventCatalog cat;
  try {
    cat = simulate(sc);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("simulate: ") + e.what());
  }
  std::ostringstream csv;
  write_events_csv(csv, cat, epoch);
  run.write_text("events.csv", csv.str());
  run.write_json("simulation.json", {{"n_events", cat.size()}, {"T_days", cat.T()}, {"model", to_json(model)}});
  std::cout << "simulated " << cat.size() << " events\n";
  return 0;
}

FitResult read_fit(const std::string& path, std::shared_ptr<const CovariateField> covariate) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open fit file '" + path + "'");
  try {
    json j;
    in >> j;
    return fit_from_json(j, std::move(covariate));
  } catch (const json::exception& e) {
    throw DataError("fit file '" + path + "': " + e.what());
  }
}

int cmd_eval(const Run& run) {
  const Config& c = run.cfg;
  const auto fit_path = c.get_string("eval.fit");
  if (!fit_path) throw ConfigError("'eval.fit' is required");
  const auto test_path = c.get_string("eval.test_events");
  if (!test_path) throw ConfigError("'eval.test_events' is required");
  IngestOptions opt = ingest_options(c);
  const double t_start = date_key(c, "eval.test_start"), t_end = date_key(c, "eval.test_end");
  if (!(t_end > t_start)) throw ConfigError("eval.test_end must be after eval.test_start", c.line_of("eval.test_end"));
  opt.end_days = t_end;
  auto lines = event_lines(c);
  const auto test_lines = read_lines(*test_path);
  lines.insert(lines.end(), test_lines.begin(), test_lines.end());
  const auto covariate = load_covariate(c, opt.epoch_days);
  const auto ing = ingest_events(lines, opt);
  const EventCatalog all = catalog_for_preset(c, ing.catalog);
  const double split = t_start - opt.epoch_days, end = t_end - opt.epoch_days;
  std::vector<EventRecord> train, test;
  for (const auto& e : all.events()) (e.t < split ? train : test).push_back(e);
  const EventCatalog tr(train, all.n_marks(), split, all.window(), all.projection(), all.mark_names());
  const EventCatalog te(test, all.n_marks(), end, all.window(), all.projection(), all.mark_names());
  const FitResult f = read_fit(*fit_path, covariate);
  if (f.model.n_marks != all.n_marks()) throw DataError("eval: fitted model and data have different mark counts");
  const QuadratureGrid grid = grid_for(c, all.window(), split, end);
  const bool history = c.get_bool("eval.condition_on_history").value_or(true);
  const auto rep = holdout_log_likelihood(tr, te, f.model, grid, history, likelihood_options(c), covariate);
  run.write_json("eval.json", {{"model", f.model_name},
                               {"holdout_loglik", detail::number(rep.loglik)},
                               {"n_test", te.size()},
                               {"n_train", tr.size()},
                               {"condition_on_history", history},
                               {"report", to_json(rep)}});
  std::cout << f.model_name << ": holdout loglik " << fmt(rep.loglik) << " on " << te.size() << " events\n";
  return 0;
}

std::string matrix_csv(const std::vector<std::vector<double>>& m) {
  std::ostringstream os;
  for (const auto& row : m) {
    for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << fmt(row[j]);
    os << '\n';
  }
  return os.str();
}

int cmd_diagnose(const Run& run) {
  const Config& c = run.cfg;
  const Data d = load_data(c);
  const auto& cat = d.ingested.catalog;
  const auto names = c.get_strings("diagnose.marks").value_or(std::vector<std::string>{});
  const std::size_t line = c.line_of("diagnose.marks");
  const int from = names.empty() ? 0 : mark_index(cat.mark_names(), names.at(0), line);
  const int to = names.size() < 2 ? from : mark_index(cat.mark_names(), names[1], line);
  const double max_dt = c.get_number("diagnose.max_dt").value_or(100.0);
  const double max_ds = c.get_number("diagnose.max_ds").value_or(100.0);
  const auto bins = c.get_numbers("diagnose.bins").value_or(std::vector<double>{20.0, 20.0});
  if (bins.size() != 2) throw ConfigError("diagnose.bins is [n_dt, n_ds]", c.line_of("diagnose.bins"));
  LagHistogram h;
  try {
    h = pair_lag_histogram(cat, from, to, max_dt, max_ds, static_cast<int>(bins[0]), static_cast<int>(bins[1]));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), c.line_of("diagnose.bins"));
  }
  const json hdr = {{"max_dt", max_dt}, {"max_ds", max_ds}, {"n_dt", h.n_dt}, {"n_ds", h.n_ds},
                    {"from", cat.mark_name(from)}, {"to", cat.mark_name(to)}, {"rows", "dt bins"},
                    {"cols", "ds bins"}};
  std::vector<std::vector<double>> counts;
  for (const auto& r : h.counts) counts.emplace_back(r.begin(), r.end());
  json raw_hdr = hdr, norm_hdr = hdr;
  raw_hdr["values"] = "counts";
  norm_hdr["values"] = "normalized";
  run.write_text("lag_hist.csv", "# " + raw_hdr.dump() + "\n" + matrix_csv(counts));
  run.write_text("lag_hist_normalized.csv", "# " + norm_hdr.dump() + "\n" + matrix_csv(h.normalized()));

  std::ostringstream daily;
  daily << "day";
  for (int k = 0; k < cat.n_marks(); ++k) daily << ',' << cat.mark_name(k);
  std::vector<std::vector<long long>> series;
  for (int k = 0; k < cat.n_marks(); ++k) series.push_back(daily_counts(cat, k));
  std::vector<std::vector<ComponentTotals>> expected;
  if (const auto fp = c.get_string("diagnose.fit")) {
    const FitResult f = read_fit(*fp, d.covariate);
    const QuadratureGrid grid = grid_for(c, cat.window(), 0.0, cat.T());
    const LikelihoodEvaluator ev(cat, grid, d.covariate, likelihood_options(c));
    expected = expected_daily_series(ev, f.model).values;
    for (int k = 0; k < cat.n_marks(); ++k) daily << ",expected_" << cat.mark_name(k);
  }
  daily << '\n';
  const std::size_t n_days = series.empty() ? 0 : series[0].size();
  for (std::size_t day = 0; day < n_days; ++day) {
    daily << day;
    for (const auto& s : series) daily << ',' << s[day];
    for (const auto& e : expected) daily << ',' << (day < e.size() ? fmt(e[day].total()) : "");
    daily << '\n';
  }
  run.write_text("daily.csv", daily.str());

  json out = {{"histogram_total", h.total()}, {"spatial_mode_bin", h.spatial_mode_bin()}};
  out["outliers"] = json::array();
  for (int k = 0; k < cat.n_marks(); ++k) {
    const auto o = daily_outlier(series[static_cast<std::size_t>(k)]);
    out["outliers"].push_back({{"mark", cat.mark_name(k)}, {"day", o.day}, {"count", o.count},
                               {"reference", o.reference}, {"flagged", o.flagged}});
  }
  if (from != to) {
    const auto s = lag_summary(cat, from, to);
    auto st = [](const LagStats& l) { return json{{"median", l.median}, {"mean", l.mean}}; };
    out["lag_summary"] = {{"n_pairs", s.n_pairs}, {"lon_deg", st(s.lon_deg)}, {"lat_deg", st(s.lat_deg)},
                          {"x_km", st(s.x_km)}, {"y_km", st(s.y_km)}};
  }
  run.write_json("diagnose.json", out);
  return 0;
}

int cmd_compare(const Run& run, const std::vector<std::string>& files) {
  std::vector<std::string> paths = files;
  if (paths.empty()) paths = run.cfg.get_strings("compare.fits").value_or(std::vector<std::string>{});
  if (paths.size() < 2) throw ConfigError("compare needs at least two fit files");
  std::vector<FitResult> fits;
  for (const auto& p : paths) fits.push_back(read_fit(p, nullptr));
  std::vector<ComparisonRow> rows;
  try {
    rows = compare_models(fits);
  } catch (const std::domain_error& e) {
    throw DataError(e.what());
  }
  std::ostringstream os;
  os << "rank,model,k,loglik,aic,bic,hq,best_aic,best_bic,best_hq\n";
  int rank = 1;
  for (const auto& r : rows) {
    os << rank++ << ',' << r.model << ',' << r.k << ',' << fmt(r.loglik) << ',' << fmt(r.ic.aic) << ','
       << fmt(r.ic.bic) << ',' << fmt(r.ic.hq) << ',' << r.best_aic << ',' << r.best_bic << ',' << r.best_hq << '\n';
  }
  run.write_text("comparison.csv", os.str());
  return 0;
}

Run prepare(const std::string& command, const Flags& f) {
  Run run;
  run.command = command;
  if (!f.config.empty()) run.cfg = Config::load(f.config);
  auto& c = run.cfg;
  c.check_keys(kAllowedKeys);
  if (!f.preset.empty()) c.set("model.preset", string_value(f.preset));
  if (f.grid_ns) c.set("grid.ns", number_value(*f.grid_ns));
  if (f.grid_nt) c.set("grid.nt", number_value(*f.grid_nt));
  if (f.specificity_max) c.set("data.specificity_max", number_value(*f.specificity_max));
  if (f.skip_bad_rows) c.set("data.skip_bad_rows", {true, 0});
  const std::string seed_key = command == "simulate" ? "simulate.seed" : "fit.seed";
  if (f.seed) c.set(seed_key, number_value(static_cast<double>(*f.seed)));
  const auto seed = c.get_int(seed_key).value_or(1);
  if (seed < 0) throw ConfigError("'" + seed_key + "' must be >= 0", c.line_of(seed_key));
  run.seed = static_cast<std::uint64_t>(seed);
  std::string out = f.out;
  if (out.empty()) out = c.get_string("output.dir").value_or(".");
  run.out = out;
  fs::create_directories(run.out);
  return run;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal multivariate Hawkes processes"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  Flags flags;
  app.add_option("--config", flags.config, "Run configuration file");
  app.add_option("--preset", flags.preset, "Model preset (poisson-const, m1-1..m1-5, m2-1..m2-6, custom)");
  app.add_option("--seed", flags.seed, "Seed for the command");
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--grid-ns", flags.grid_ns, "Approximate number of spatial cells");
  app.add_option("--grid-nt", flags.grid_nt, "Number of time steps");
  app.add_option("--specificity-max", flags.specificity_max, "Drop events with larger specificity codes");
  app.add_flag("--skip-bad-rows", flags.skip_bad_rows, "Drop malformed rows instead of aborting");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"ingest", "Parse, filter, project and jitter an event file"},
      {"fit", "Maximum likelihood fit of a preset or custom model"},
      {"simulate", "Simulate events from a parameterized model"},
      {"eval", "Holdout log-likelihood of a fitted model"},
      {"diagnose", "Pair-lag histograms, daily counts and cross-lag summaries"},
      {"compare", "Rank fits of the same catalog by information criteria"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : commands) subs[name] = app.add_subcommand(name, help);
  subs["compare"]->add_option("fits", flags.files, "fit.json files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  std::string command;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) command = name;
  }
  try {
    const Run run = prepare(command, flags);
    if (command == "ingest") return cmd_ingest(run);
    if (command == "fit") return cmd_fit(run);
    if (command == "simulate") return cmd_simulate(run);
    if (command == "eval") return cmd_eval(run);
    if (command == "diagnose") return cmd_diagnose(run);
    return cmd_compare(run, flags.files);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const FitError& e) {
    std::cerr << "optimizer failure: " << e.what() << '\n';
    return kExitOptimizer;
  } catch (const std::domain_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
