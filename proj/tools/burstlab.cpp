// burstlab command-line interface.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "burstlab/bifurcation.hpp"
#include "burstlab/config.hpp"
#include "burstlab/error.hpp"
#include "burstlab/features.hpp"
#include "burstlab/fit.hpp"
#include "burstlab/landscape.hpp"
#include "burstlab/simulate.hpp"
#include "burstlab/svg.hpp"
#include "burstlab/systems.hpp"

namespace {

using namespace burstlab;

enum ExitCode { kOk = 0, kUsage = 2, kNumerical = 3, kClassification = 4 };

struct CommonArgs {
  std::string config_file;
  std::vector<std::string> sets;
  std::string figure;
  std::string variant;
  std::optional<std::string> t_span;
  std::string out;
};

void add_common(CLI::App* app, CommonArgs& a) {
  app->add_option("-c,--config", a.config_file, "configuration file (key = value)");
  app->add_option("--set", a.sets, "override, key=value (repeatable)");
  app->add_option("--figure", a.figure, "start from a figure preset (fig1 ... fig7)");
  app->add_option("--variant", a.variant, "preset variant, by label or 0-based index");
  app->add_option("--t-span", a.t_span, "simulation span 't0,t1'");
  app->add_option("-o,--out", a.out, "output file (default: stdout or the configured output)");
}

KeyValues preset_key_values(const FigurePreset& f, const std::string& variant) {
  KeyValues kv{{"model", to_string(f.model)}};
  if (!is_driven(f.model)) return kv;
  std::size_t idx = 0;
  if (!variant.empty()) {
    auto it = std::find_if(f.variants.begin(), f.variants.end(),
                           [&](const PresetVariant& v) { return v.label == variant; });
    if (it != f.variants.end()) {
      idx = std::size_t(it - f.variants.begin());
    } else {
      const double k = parse_double(variant, "--variant");
      if (k < 0 || k >= double(f.variants.size()) || k != std::floor(k)) {
        throw UsageError("--variant: no variant '" + variant + "' in " + f.name);
      }
      idx = std::size_t(k);
    }
  }
  const EllipsePath& p = f.variants[idx].path;
  kv.insert(kv.end(), {{"path.ca_c", format_shortest(p.ca_c)},
                       {"path.na_c", format_shortest(p.na_c)},
                       {"path.d", format_shortest(p.d)},
                       {"path.ca0", format_shortest(p.ca0)},
                       {"path.na0", format_shortest(p.na0)},
                       {"path.eps", format_shortest(p.eps)}});
  return kv;
}

RunConfig resolve_config(const CommonArgs& a, KeyValues kv = {}) {
  if (!a.figure.empty()) {
    const auto preset = preset_key_values(figure_preset(a.figure), a.variant);
    kv.insert(kv.end(), preset.begin(), preset.end());
  }
  if (!a.config_file.empty()) {
    std::ifstream in(a.config_file);
    if (!in) throw UsageError("cannot open config file '" + a.config_file + "'");
    const auto file = parse_key_values(in, a.config_file);
    kv.insert(kv.end(), file.begin(), file.end());
  }
  for (const auto& s : a.sets) kv.push_back(parse_assignment(s));
  if (a.t_span) kv.emplace_back("sim.t_span", *a.t_span);
  return build_config(kv);
}

/// Output stream: the explicit path, else the configured one, else stdout.
class Sink {
 public:
  Sink(const std::string& explicit_path, const std::string& configured) {
    const std::string& p = explicit_path.empty() ? configured : explicit_path;
    if (!p.empty() && p != "-") {
      file_ = std::make_unique<std::ofstream>(p);
      if (!*file_) throw UsageError("cannot open output file '" + p + "'");
    }
  }
  std::ostream& operator*() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open output file '" + path + "'");
  out << content;
}

template <class F>
auto with_fast(const RunConfig& c, F&& f) {
  if (uses_full_fast(c.model)) {
    FullFast fast;
    fast.params = c.params;
    return f(fast);
  }
  ReducedFast fast;
  fast.params = c.params;
  return f(fast);
}

template <class Fast>
std::array<std::string, Fast::dim + 2> state_names() {
  if constexpr (Fast::dim == 2) {
    return {"v", "n", "ca", "na"};
  } else {
    return {"v", "n", "m", "h", "s", "ca", "na"};
  }
}

template <class Fast>
BurstTrace<Fast::dim + 2> run_configured(const RunConfig& c, const Fast& fast, const CurveSet& curves) {
  if (is_driven(c.model)) return run_driven(DrivenSystem<Fast>{fast, *c.path}, curves, c.run);
  return run_autonomous(AutonomousSystem<Fast>{fast}, curves, c.run);
}

// ---------------------------------------------------------------------------

int cmd_simulate(const CommonArgs& a) {
  const RunConfig c = resolve_config(a);
  return with_fast(c, [&](const auto& fast) {
    using Fast = std::decay_t<decltype(fast)>;
    constexpr std::size_t N = Fast::dim + 2;
    Vec<N> y0{};
    double t1 = 0.0;
    Trajectory<N> traj;
    if (is_driven(c.model)) {
      const DrivenSystem<Fast> sys{fast, *c.path};
      y0 = initial_state(sys);
      t1 = c.t1 ? *c.t1 : c.t0 + (c.run.settle_periods + c.run.analysis_periods) * c.path->period();
      traj = integrate<N>([&](double t, const Vec<N>& y) { return sys.rhs(t, y); }, y0, c.t0, t1, c.run.ode);
    } else {
      const AutonomousSystem<Fast> sys{fast};
      y0 = initial_state(sys);
      t1 = c.t1 ? *c.t1 : c.t0 + c.run.transient + c.run.duration;
      traj = integrate<N>([&](double t, const Vec<N>& y) { return sys.rhs(t, y); }, y0, c.t0, t1, c.run.ode);
    }
    Sink out(a.out, c.output.trace);
    write_trajectory_csv(*out, traj, state_names<Fast>());
    return int(kOk);
  });
}

int cmd_bifcurves(const CommonArgs& a, bool verify) {
  const RunConfig c = resolve_config(a);
  return with_fast(c, [&](const auto& fast) {
    const CurveSet cs = compute_curves(fast, c.continuation);
    Sink out(a.out, c.output.curves);
    write_curves_csv(*out, {cs.snic, cs.ah});
    std::cerr << "SNIC: " << cs.snic.size() << " points" << (cs.snic.note.empty() ? "" : " (" + cs.snic.note + ")")
              << "\nAH: " << cs.ah.size() << " points" << (cs.ah.note.empty() ? "" : " (" + cs.ah.note + ")") << '\n';
    if (verify) {
      const std::size_t n = cs.snic.size();
      for (std::size_t k : {n / 4, n / 2, 3 * n / 4}) {
        const auto chk = verify_snic(fast, cs.snic.points[k]);
        std::cerr << "verify_snic at Na " << format_shortest(cs.snic.points[k].na) << ": "
                  << (chk.is_snic ? "true" : "false") << " periods";
        for (const auto& p : chk.periods) std::cerr << ' ' << (p ? format_shortest(*p) : std::string("-"));
        std::cerr << '\n';
      }
    }
    return int(kOk);
  });
}

std::vector<double> default_levels(FieldKind k) {
  if (k == FieldKind::Period) return {10.1, 12, 15, 20, 30, 40};
  return uniform_levels(-0.05, 0.09, 15);
}

void draw_curves(SvgPlot& plot, const CurveSet& cs) {
  plot.polyline(cs.snic.points, svg_colors::kSnic, 2.0);
  plot.polyline(cs.ah.points, svg_colors::kHopf, 2.0, "6,3");
}

void draw_contours(SvgPlot& plot, const ContourSet& cs) {
  for (const auto& l : cs.lines) plot.polyline(l.points, svg_colors::kContour, 0.8);
}

int cmd_landscape(const CommonArgs& a) {
  const RunConfig c = resolve_config(a);
  return with_fast(c, [&](const auto& fast) {
    const auto& L = c.landscape;
    const ScalarField field = build_field(L.field, L.grid, fast);
    const auto levels = L.levels.empty() ? default_levels(L.field) : L.levels;
    const ContourSet contours = extract_contours(field, levels);
    Sink out(a.out, c.output.field);
    write_field_csv(*out, field);
    if (!c.output.contours.empty()) {
      std::ostringstream os;
      write_contours_csv(os, contours);
      write_file(c.output.contours, os.str());
    }
    if (!c.output.svg.empty()) {
      const CurveSet cs = compute_curves(fast, c.continuation);
      SvgPlot plot(L.grid.ca_min, L.grid.ca_max, L.grid.na_min, L.grid.na_max, "Ca (uM)", "Na (mM)");
      draw_contours(plot, contours);
      draw_curves(plot, cs);
      std::ostringstream os;
      plot.write(os);
      write_file(c.output.svg, os.str());
    }
    std::cerr << to_string(L.field) << ": " << field.defined_count() << " of " << field.values.size()
              << " nodes defined, " << contours.lines.size() << " contour lines\n";
    return int(kOk);
  });
}

int cmd_features(const CommonArgs& a) {
  const RunConfig c = resolve_config(a);
  return with_fast(c, [&](const auto& fast) {
    const CurveSet cs = compute_curves(fast, c.continuation);
    const auto tr = run_configured(c, fast, cs);
    const Segmentation seg = segment_stages(tr);
    const FeatureVector f = burst_features(tr, seg);
    Sink out(a.out, c.output.features);
    write_features_header(*out);
    write_features_row(*out, f);
    if (!c.output.stages.empty()) {
      std::ostringstream os;
      write_stages_csv(os, seg);
      write_file(c.output.stages, os.str());
    }
    return int(kOk);
  });
}

FeatureVector fit_target(const RunConfig& c) {
  const std::string& t = c.fit.target;
  if (t == "fig1" || t == "fig2") {
    RunConfig tc = c;
    tc.model = t == "fig1" ? ModelKind::Full7d : ModelKind::Reduced4d;
    tc.params = t == "fig1" ? full7d_params() : reduced4d_params();
    return with_fast(tc, [&](const auto& fast) {
      const CurveSet cs = compute_curves(fast, tc.continuation);
      return burst_features(run_autonomous(AutonomousSystem<std::decay_t<decltype(fast)>>{fast}, cs, tc.run));
    });
  }
  std::ifstream in(t);
  if (!in) throw UsageError("fit.target: '" + t + "' is neither fig1, fig2 nor a readable features CSV");
  return read_features_csv(in);
}

int cmd_fit(const CommonArgs& a) {
  // base path: the middle fig4 variant unless the configuration names another
  RunConfig c = resolve_config(a, preset_key_values(figure_preset("fig4"), "1"));
  if (!is_driven(c.model)) c.model = ModelKind::Driven4d;
  FitProblem prob;
  prob.target = fit_target(c);
  prob.free = c.fit.free;
  prob.base = *c.path;
  prob.weights = c.fit.weights;
  prob.scales = c.fit.scales;
  prob.budget = c.fit.budget;
  prob.seed = c.fit.seed;
  prob.run = c.run;
  return with_fast(c, [&](const auto& fast) {
    const CurveSet cs = compute_curves(fast, c.continuation);
    const FitResult r = fit_path(prob, fast, cs);
    {
      Sink out(a.out, c.output.fit_log);
      write_fit_log_csv(*out, prob, r);
    }
    std::ostringstream best;
    best << "# best feature distance " << format_shortest(r.best_distance) << '\n';
    write_path_config(best, r.best);
    if (!c.output.best_path.empty()) write_file(c.output.best_path, best.str());
    (a.out.empty() && c.output.fit_log.empty() ? std::cerr : std::cout) << best.str();
    return int(kOk);
  });
}

// ---------------------------------------------------------------------------
// figure

struct VariantRun {
  PresetVariant variant;
  bool db = false;
  std::string observed;
  std::optional<FeatureVector> features;
  std::vector<SlowPoint> slow;
  std::vector<double> t, v;
  std::vector<Crossing> crossings;
};

template <class Fast>
VariantRun run_variant(const FigurePreset& f, const PresetVariant& var, const Fast& fast, const CurveSet& cs,
                       const RunOptions& ro) {
  VariantRun r{var, false, {}, {}, {}, {}, {}, {}};
  const auto tr = is_driven(f.model) ? run_driven(DrivenSystem<Fast>{fast, var.path}, cs, ro)
                                     : run_autonomous(AutonomousSystem<Fast>{fast}, cs, ro);
  r.db = is_db(tr, &r.observed);
  double t_from = tr.analysis_from, t_to = tr.trajectory.steps().back().t1();
  if (r.db) {
    const Segmentation seg = segment_stages(tr);
    r.features = burst_features(tr, seg);
    t_from = seg.cycle_begin;
    t_to = seg.cycle_end;
  }
  for (const auto& c : tr.crossings) {
    if (c.t >= t_from && c.t < t_to) r.crossings.push_back(c);
  }
  std::vector<double> ca, na;
  sample_component(tr.trajectory, 0, 4, r.t, r.v, t_from, t_to);
  std::vector<double> tt;
  sample_component(tr.trajectory, Fast::dim, 1, tt, ca, t_from, t_to);
  tt.clear();
  sample_component(tr.trajectory, Fast::dim + 1, 1, tt, na, t_from, t_to);
  for (std::size_t k = 0; k < ca.size() && k < na.size(); ++k) r.slow.push_back({ca[k], na[k]});
  return r;
}

int cmd_figure(const std::string& name, const std::string& dir, int grid_n) {
  const FigurePreset f = figure_preset(name);
  RunConfig c;
  c.model = f.model;
  c.params = uses_full_fast(f.model) ? full7d_params() : reduced4d_params();
  std::filesystem::create_directories(dir);
  const std::string base = (std::filesystem::path(dir) / f.name).string();
  return with_fast(c, [&](const auto& fast) {
    const CurveSet cs = compute_curves(fast, c.continuation);
    std::vector<VariantRun> runs;
    for (const auto& var : f.variants) runs.push_back(run_variant(f, var, fast, cs, c.run));

    // plot window: every curve-relevant path, padded
    double ca0 = 1e300, ca1 = -1e300, na0 = 1e300, na1 = -1e300;
    for (const auto& r : runs) {
      for (const auto& p : r.slow) {
        ca0 = std::min(ca0, p.ca);
        ca1 = std::max(ca1, p.ca);
        na0 = std::min(na0, p.na);
        na1 = std::max(na1, p.na);
      }
    }
    if (!(ca1 > ca0)) ca0 = -0.1, ca1 = 0.4;
    if (!(na1 > na0)) na0 = 4.8, na1 = 6.4;
    const double pc = 0.1 * (ca1 - ca0), pn = 0.1 * (na1 - na0);
    SvgPlot plot(ca0 - pc, ca1 + pc, na0 - pn, na1 + pn, "Ca (uM)", "Na (mM)");
    if (f.field) {
      GridSpec g = f.grid;
      g.n_ca = g.n_na = grid_n;
      const ScalarField field = build_field(*f.field, g, fast);
      const ContourSet contours = extract_contours(field, f.levels);
      draw_contours(plot, contours);
      std::ostringstream os;
      write_contours_csv(os, contours);
      write_file(base + "_contours.csv", os.str());
    }
    draw_curves(plot, cs);
    for (const auto& r : runs) {
      plot.polyline(r.slow, r.variant.color, 1.5);
      for (const auto& x : r.crossings) {
        plot.marker(x.at.ca, x.at.na, x.kind == CurveKind::Snic ? svg_colors::kSnic : svg_colors::kHopf, 4.0);
      }
    }
    std::ostringstream os;
    plot.write(os);
    write_file(base + ".svg", os.str());

    std::ostringstream fcsv;
    fcsv << "variant,db,";
    write_features_header(fcsv);
    int status = kOk;
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const auto& r = runs[k];
      fcsv << r.variant.label << ',' << (r.db ? 1 : 0) << ',';
      if (r.features) write_features_row(fcsv, *r.features);
      else fcsv << std::string(kFeatureColumns.size() - 1, ',') << '\n';
      std::cout << f.name << ' ' << r.variant.label << ": DB " << (r.db ? "true" : "false") << " ("
                << r.observed << ")";
      if (r.features) {
        std::cout << ", period " << format_shortest(r.features->period) << " ms, stage (ii) spikes "
                  << r.features->stage_ii_spikes << ", stage (v) spikes " << r.features->stage_v_spikes;
      }
      std::cout << '\n';
      if (!r.db) status = kClassification;

      if (!r.t.empty()) {
        double vmin = *std::min_element(r.v.begin(), r.v.end()), vmax = *std::max_element(r.v.begin(), r.v.end());
        SvgPlot trace(r.t.front(), r.t.back(), vmin - 5, vmax + 5, "t (ms)", "v (mV)");
        trace.polyline(r.t, r.v, r.variant.color, 1.0);
        std::ostringstream ts;
        trace.write(ts);
        write_file(base + "_trace" + std::to_string(k) + ".svg", ts.str());
      }
    }
    write_file(base + "_features.csv", fcsv.str());
    return status;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"burstlab: fast-slow bursting models, bifurcation landscapes and burst features"};
  app.require_subcommand(1);

  CommonArgs sim_a, bif_a, land_a, feat_a, fit_a;
  auto* sim = app.add_subcommand("simulate", "integrate a configured model and write the trace CSV");
  add_common(sim, sim_a);
  auto* bif = app.add_subcommand("bifcurves", "trace the SNIC and AH curves of the fast subsystem");
  add_common(bif, bif_a);
  bool verify = false;
  bif->add_flag("--verify-snic", verify, "check period divergence at three fold points");
  auto* land = app.add_subcommand("landscape", "period or Re(lambda) field with contours");
  add_common(land, land_a);
  auto* feat = app.add_subcommand("features", "burst feature vector of one DB cycle");
  add_common(feat, feat_a);
  auto* fit = app.add_subcommand("fit", "fit imposed-path parameters to a target feature vector");
  add_common(fit, fit_a);
  auto* fig = app.add_subcommand("figure", "run a figure preset end to end");
  std::string fig_name, fig_dir = ".";
  int grid_n = 121;
  fig->add_option("name", fig_name, "fig1 ... fig7")->required();
  fig->add_option("-d,--dir", fig_dir, "output directory");
  fig->add_option("--grid", grid_n, "landscape nodes per axis")->check(CLI::Range(2, 1000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) return cmd_simulate(sim_a);
    if (*bif) return cmd_bifcurves(bif_a, verify);
    if (*land) return cmd_landscape(land_a);
    if (*feat) return cmd_features(feat_a);
    if (*fit) return cmd_fit(fit_a);
    if (*fig) return cmd_figure(fig_name, fig_dir, grid_n);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidParameter& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ClassificationError& e) {
    std::cerr << "classification failure: " << e.what() << '\n';
    return kClassification;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}
