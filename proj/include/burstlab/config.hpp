#pragma once

// Run configuration: flat `key = value` text with dotted keys, optional
// `[section]` headers prefixing the keys that follow, and the read-only
// figure presets.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "burstlab/bifurcation.hpp"
#include "burstlab/error.hpp"
#include "burstlab/features.hpp"
#include "burstlab/fit.hpp"
#include "burstlab/landscape.hpp"
#include "burstlab/model.hpp"
#include "burstlab/params_io.hpp"
#include "burstlab/paths.hpp"
#include "burstlab/simulate.hpp"

namespace burstlab {

enum class ModelKind { Full7d, Reduced4d, Driven7d, Driven4d };

inline const char* to_string(ModelKind m) {
  switch (m) {
    case ModelKind::Full7d: return "full7d";
    case ModelKind::Reduced4d: return "reduced4d";
    case ModelKind::Driven7d: return "driven7d";
    default: return "driven4d";
  }
}

inline ModelKind model_kind_from_string(std::string_view s) {
  for (ModelKind m : {ModelKind::Full7d, ModelKind::Reduced4d, ModelKind::Driven7d, ModelKind::Driven4d}) {
    if (s == to_string(m)) return m;
  }
  throw UsageError("unknown model '" + std::string(s) + "' (expected full7d, reduced4d, driven7d, driven4d)");
}

inline bool is_driven(ModelKind m) { return m == ModelKind::Driven7d || m == ModelKind::Driven4d; }
inline bool uses_full_fast(ModelKind m) { return m == ModelKind::Full7d || m == ModelKind::Driven7d; }

/// Key/value pairs in file order; later assignments win.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline KeyValues parse_key_values(std::istream& is, const std::string& source = "config") {
  KeyValues kv;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv.front() == '[') {
      if (sv.back() != ']') throw UsageError(source + ":" + std::to_string(lineno) + ": unterminated section");
      section = std::string(trim(sv.substr(1, sv.size() - 2)));
      continue;
    }
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key(trim(sv.substr(0, eq)));
    if (key.empty()) throw UsageError(source + ":" + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    kv.emplace_back(key, std::string(trim(sv.substr(eq + 1))));
  }
  return kv;
}

inline KeyValues parse_key_values(const std::string& text) {
  std::istringstream is(text);
  return parse_key_values(is);
}

/// `key=value` from the command line.
inline std::pair<std::string, std::string> parse_assignment(std::string_view a) {
  const auto eq = a.find('=');
  if (eq == std::string_view::npos || trim(a.substr(0, eq)).empty()) {
    throw UsageError("expected key=value, got '" + std::string(a) + "'");
  }
  return {std::string(trim(a.substr(0, eq))), std::string(trim(a.substr(eq + 1)))};
}

inline std::vector<double> parse_list(std::string_view text, std::string_view context) {
  std::vector<double> out;
  std::string s(text);
  std::replace(s.begin(), s.end(), ';', ',');
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = trim(item);
    if (!t.empty()) out.push_back(parse_double(t, context));
  }
  return out;
}

inline std::vector<std::string> split_names(std::string_view text) {
  std::vector<std::string> out;
  std::string s(text);
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

struct OutputPaths {
  std::string trace, curves, field, contours, svg, features, stages, fit_log, best_path, dir = ".";
};

/// Default search box per path parameter.
inline std::pair<double, double> default_bounds(PathParam p) {
  switch (p) {
    case PathParam::CaC: return {0.1, 0.3};
    case PathParam::NaC: return {5.0, 6.4};
    case PathParam::D: return {0.1, 5.0};
    case PathParam::Ca0: return {-0.1, 0.1};
    default: return {0.0005, 0.01};
  }
}

struct FitSettings {
  std::string target = "fig1";  // figure preset name or feature CSV path
  std::vector<FreeParam> free{{PathParam::CaC, 0.1, 0.3},
                              {PathParam::D, 0.1, 5.0},
                              {PathParam::Ca0, -0.1, 0.1},
                              {PathParam::Eps, 0.0005, 0.01}};  // Na_c stays at the base path value
  int budget = 300;
  std::uint64_t seed = 1;
  FeatureWeights weights{};
  FeatureScales scales{};
};

struct LandscapeSettings {
  FieldKind field = FieldKind::Period;
  GridSpec grid{};
  std::vector<double> levels;  // empty selects a default per field
};

struct RunConfig {
  ModelKind model = ModelKind::Driven4d;
  ModelParams params = reduced4d_params();
  std::optional<EllipsePath> path;
  double t0 = 0.0;
  std::optional<double> t1;
  RunOptions run{};
  ContinuationOptions continuation = classification_continuation();
  LandscapeSettings landscape{};
  FitSettings fit{};
  OutputPaths output{};
};

namespace detail {

inline double& path_field(EllipsePath& p, std::string_view name) {
  if (name == "ca_c") return p.ca_c;
  if (name == "na_c") return p.na_c;
  if (name == "d") return p.d;
  if (name == "ca0") return p.ca0;
  if (name == "na0") return p.na0;
  return p.eps;
}

inline double* weight_field(FeatureWeights& w, std::string_view n) {
  if (n == "period") return &w.period;
  if (n == "first_spike_delay") return &w.first_spike_delay;
  if (n == "isi") return &w.isi;
  if (n == "amplitude") return &w.amplitude;
  if (n == "ah_gap") return &w.ah_gap;
  if (n == "hyperpolarization") return &w.hyperpolarization;
  if (n == "spike_counts") return &w.spike_counts;
  return nullptr;
}

inline double* scale_field(FeatureScales& w, std::string_view n) {
  if (n == "period") return &w.period;
  if (n == "first_spike_delay") return &w.first_spike_delay;
  if (n == "isi") return &w.isi;
  if (n == "amplitude") return &w.amplitude;
  if (n == "ah_gap") return &w.ah_gap;
  if (n == "hyperpolarization") return &w.hyperpolarization;
  if (n == "spike_counts") return &w.spike_counts;
  return nullptr;
}

inline bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

}  // namespace detail

/// Builds a configuration from key/value pairs applied in order on top of
/// defaults. `model` and `params.preset` are applied first so that
/// parameter overrides refer to the selected preset. Unknown keys are
/// collected and reported together.
inline RunConfig build_config(const KeyValues& kv) {
  RunConfig c;
  std::vector<std::string> unknown;
  std::optional<std::string> preset;
  bool na0_given = false;
  std::map<PathParam, std::pair<double, double>> bounds;
  for (const auto& [k, v] : kv) {
    if (k == "model") c.model = model_kind_from_string(v);
    if (k == "params.preset") preset = v;
  }
  c.params = uses_full_fast(c.model) ? full7d_params() : reduced4d_params();
  if (preset) {
    if (*preset == "full7d") c.params = full7d_params();
    else if (*preset == "reduced4d") c.params = reduced4d_params();
    else throw UsageError("unknown params.preset '" + *preset + "' (expected full7d, reduced4d)");
  }

  EllipsePath path;
  bool any_path = false;
  for (const auto& [k, v] : kv) {
    using detail::starts_with;
    const std::string_view key = k;
    if (key == "model" || key == "params.preset") continue;
    if (starts_with(key, "params.")) {
      const auto name = key.substr(7);
      const auto m = param_member(name);
      if (!m) {
        unknown.push_back(k);
        continue;
      }
      c.params.*(*m) = parse_double(v, key);
    } else if (key == "path.ca_c" || key == "path.na_c" || key == "path.d" || key == "path.ca0" ||
               key == "path.na0" || key == "path.eps") {
      detail::path_field(path, key.substr(5)) = parse_double(v, key);
      any_path = true;
      if (key == "path.na0") na0_given = true;
    } else if (key == "sim.t0") {
      c.t0 = parse_double(v, key);
    } else if (key == "sim.t1") {
      c.t1 = parse_double(v, key);
    } else if (key == "sim.t_span") {
      const auto span = parse_list(v, key);
      if (span.size() != 2) throw UsageError("sim.t_span: expected 't0, t1'");
      c.t0 = span[0];
      c.t1 = span[1];
    } else if (key == "sim.rel_tol") {
      c.run.ode.rel_tol = parse_double(v, key);
    } else if (key == "sim.abs_tol") {
      c.run.ode.abs_tol = parse_double(v, key);
    } else if (key == "sim.max_step") {
      c.run.ode.max_step = parse_double(v, key);
    } else if (key == "sim.settle_periods") {
      c.run.settle_periods = parse_double(v, key);
    } else if (key == "sim.analysis_periods") {
      c.run.analysis_periods = parse_double(v, key);
    } else if (key == "sim.transient") {
      c.run.transient = parse_double(v, key);
    } else if (key == "sim.duration") {
      c.run.duration = parse_double(v, key);
    } else if (key == "spikes.threshold") {
      c.run.spikes.threshold = parse_double(v, key);
    } else if (key == "spikes.refractory") {
      c.run.spikes.refractory = parse_double(v, key);
    } else if (key == "spikes.hysteresis") {
      c.run.spikes.hysteresis = parse_double(v, key);
    } else if (key == "bif.na_min") {
      c.continuation.na_min = parse_double(v, key);
    } else if (key == "bif.na_max") {
      c.continuation.na_max = parse_double(v, key);
    } else if (key == "bif.na_step") {
      c.continuation.na_step = parse_double(v, key);
    } else if (key == "bif.ca_min") {
      c.continuation.ca_min = parse_double(v, key);
    } else if (key == "bif.ca_max") {
      c.continuation.ca_max = parse_double(v, key);
    } else if (key == "landscape.field") {
      if (v == "period" || v == "PERIOD") c.landscape.field = FieldKind::Period;
      else if (v == "relambda" || v == "RE_LAMBDA") c.landscape.field = FieldKind::ReLambda;
      else throw UsageError("landscape.field: expected period or relambda");
    } else if (key == "landscape.ca_min") {
      c.landscape.grid.ca_min = parse_double(v, key);
    } else if (key == "landscape.ca_max") {
      c.landscape.grid.ca_max = parse_double(v, key);
    } else if (key == "landscape.na_min") {
      c.landscape.grid.na_min = parse_double(v, key);
    } else if (key == "landscape.na_max") {
      c.landscape.grid.na_max = parse_double(v, key);
    } else if (key == "landscape.n_ca") {
      c.landscape.grid.n_ca = int(parse_double(v, key));
    } else if (key == "landscape.n_na") {
      c.landscape.grid.n_na = int(parse_double(v, key));
    } else if (key == "landscape.levels") {
      c.landscape.levels = parse_list(v, key);
    } else if (key == "fit.target") {
      c.fit.target = v;
    } else if (key == "fit.free") {
      c.fit.free.clear();
      for (const auto& n : split_names(v)) {
        const PathParam p = path_param_from_string(n);
        c.fit.free.push_back({p, default_bounds(p).first, default_bounds(p).second});
      }
    } else if (starts_with(key, "fit.bounds.")) {
      const auto b = parse_list(v, key);
      if (b.size() != 2) throw UsageError(k + ": expected 'lo, hi'");
      bounds[path_param_from_string(key.substr(11))] = {b[0], b[1]};
    } else if (key == "fit.budget") {
      c.fit.budget = int(parse_double(v, key));
    } else if (key == "fit.seed") {
      c.fit.seed = std::uint64_t(parse_double(v, key));
    } else if (starts_with(key, "fit.weights.")) {
      double* f = detail::weight_field(c.fit.weights, key.substr(12));
      if (!f) unknown.push_back(k);
      else *f = parse_double(v, key);
    } else if (starts_with(key, "fit.scales.")) {
      double* f = detail::scale_field(c.fit.scales, key.substr(11));
      if (!f) unknown.push_back(k);
      else *f = parse_double(v, key);
    } else if (key == "output.trace") {
      c.output.trace = v;
    } else if (key == "output.curves") {
      c.output.curves = v;
    } else if (key == "output.field") {
      c.output.field = v;
    } else if (key == "output.contours") {
      c.output.contours = v;
    } else if (key == "output.svg") {
      c.output.svg = v;
    } else if (key == "output.features") {
      c.output.features = v;
    } else if (key == "output.stages") {
      c.output.stages = v;
    } else if (key == "output.fit_log") {
      c.output.fit_log = v;
    } else if (key == "output.best_path") {
      c.output.best_path = v;
    } else if (key == "output.dir") {
      c.output.dir = v;
    } else {
      unknown.push_back(k);
    }
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + u;
    throw UsageError("unknown configuration keys: " + list);
  }
  for (const auto& [p, b] : bounds) {
    auto it = std::find_if(c.fit.free.begin(), c.fit.free.end(), [&](const FreeParam& f) { return f.which == p; });
    if (it == c.fit.free.end()) throw UsageError(std::string("fit.bounds.") + to_string(p) + ": parameter is not in fit.free");
    it->lo = b.first;
    it->hi = b.second;
  }
  if (any_path) {
    if (!na0_given) path.na0 = path.na_c;
    c.path = path;
  }
  if (is_driven(c.model) && !c.path) throw UsageError("model " + std::string(to_string(c.model)) + " requires a path");
  if (c.path) validate(*c.path);
  validate(c.params);
  if (c.t1 && !(*c.t1 > c.t0)) throw UsageError("sim.t_span is empty: t1 must exceed t0");
  return c;
}

inline RunConfig load_config(std::istream& is, const KeyValues& overrides = {}, const std::string& source = "config") {
  KeyValues kv = parse_key_values(is, source);
  kv.insert(kv.end(), overrides.begin(), overrides.end());
  return build_config(kv);
}

// ---------------------------------------------------------------------------
// Figure presets

struct PresetVariant {
  std::string label;
  std::string color;
  EllipsePath path;  // unused for autonomous presets
};

struct FigurePreset {
  std::string name;
  std::string description;
  ModelKind model = ModelKind::Driven4d;
  std::vector<PresetVariant> variants;
  std::optional<FieldKind> field;  // contour overlay
  std::vector<double> levels;
  GridSpec grid{};
};

inline std::vector<std::string> figure_names() {
  return {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7"};
}

/// Returns a fresh copy of the named preset; nothing global is touched.
inline FigurePreset figure_preset(std::string_view name) {
  const std::vector<std::string> three{"#1f77b4", "#9467bd", "#d62728"};
  FigurePreset f;
  f.name = std::string(name);
  auto centered = [](double ca_c, double na_c, double d, double ca0, double eps) {
    return EllipsePath::centered(ca_c, na_c, d, ca0, eps);
  };
  if (name == "fig1") {
    f.description = "full 7D model, autonomous";
    f.model = ModelKind::Full7d;
    f.variants = {{"autonomous", "#1f77b4", {}}};
  } else if (name == "fig2") {
    f.description = "reduced 4D model, autonomous";
    f.model = ModelKind::Reduced4d;
    f.variants = {{"autonomous", "#1f77b4", {}}};
  } else if (name == "fig3") {
    f.description = "7D fast subsystem driven, Ca_c 0.7, Na_c 5.35, Ca0 0, eps 0.009";
    f.model = ModelKind::Driven7d;
    const double ds[] = {0.5, 2.0, 20.0};
    for (int k = 0; k < 3; ++k) {
      f.variants.push_back({"d=" + format_shortest(ds[k]), three[k], centered(0.7, 5.35, ds[k], 0.0, 0.009)});
    }
  } else if (name == "fig4") {
    f.description = "4D fast subsystem driven, Ca_c 0.15, Na_c 5.85, Ca0 0, eps 0.004";
    const double ds[] = {0.2, 1.0, 50.0};
    for (int k = 0; k < 3; ++k) {
      f.variants.push_back({"d=" + format_shortest(ds[k]), three[k], centered(0.15, 5.85, ds[k], 0.0, 0.004)});
    }
  } else if (name == "fig5") {
    f.description = "4D driven, Ca_c 0.15, Na_c 5.85, Ca0 0, d 0.1, varying eps";
    const double es[] = {0.002, 0.006, 0.01};
    for (int k = 0; k < 3; ++k) {
      f.variants.push_back({"eps=" + format_shortest(es[k]), three[k], centered(0.15, 5.85, 0.1, 0.0, es[k])});
    }
  } else if (name == "fig6") {
    f.description = "4D driven, two paths over the period landscape, eps 0.009";
    f.variants = {{"blue", "#1f77b4", centered(0.15, 5.2, 0.1, 0.0, 0.009)},
                  {"red", "#d62728", centered(0.1, 5.1, 1.0, -0.1, 0.009)}};
    f.field = FieldKind::Period;
    f.levels = {10.1, 12, 15, 20, 30, 40};
  } else if (name == "fig7") {
    f.description = "4D driven, Ca_c 0.19, Na_c 5.75, Ca0 0.04, eps 0.004, varying d";
    const double ds[] = {0.1, 0.2, 0.4};
    for (int k = 0; k < 3; ++k) {
      f.variants.push_back({"d=" + format_shortest(ds[k]), three[k], centered(0.19, 5.75, ds[k], 0.04, 0.004)});
    }
    f.field = FieldKind::ReLambda;
    f.levels = uniform_levels(-0.05, 0.09, 15);
  } else {
    throw UsageError("unknown figure '" + std::string(name) + "' (expected fig1 ... fig7)");
  }
  return f;
}

}  // namespace burstlab
