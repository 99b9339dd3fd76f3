#pragma once

// Spike detection, SNIC/AH crossing bookkeeping, stage segmentation of one
// burst cycle and the derived feature vector.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "burstlab/bifurcation.hpp"
#include "burstlab/error.hpp"
#include "burstlab/geometry.hpp"
#include "burstlab/ode.hpp"
#include "burstlab/params_io.hpp"

namespace burstlab {

// ---------------------------------------------------------------------------
// Spikes

struct SpikeOptions {
  double threshold = -20.0;   // mV
  double refractory = 2.0;    // ms
  double hysteresis = 5.0;    // mV below threshold needed to re-arm; 0 = plain crossings
};

struct Spike {
  double t = 0.0;     // ms, time of the peak
  double peak = 0.0;  // mV
  double onset = 0.0; // ms, upward threshold crossing
};

/// Spikes of a sampled voltage. A spike opens at an upward threshold
/// crossing and closes once v falls below threshold - hysteresis; its peak
/// is the largest sample in between. A crossing within `refractory` of the
/// previous onset extends that spike. A spike still open at the end counts
/// only if its maximum is not the last sample.
inline std::vector<Spike> detect_spikes(std::span<const double> t, std::span<const double> v,
                                        const SpikeOptions& opt = {},
                                        std::vector<std::size_t>* peak_index = nullptr) {
  if (t.size() != v.size()) throw InvalidParameter("detect_spikes: size mismatch");
  if (!(opt.hysteresis >= 0.0) || !(opt.refractory >= 0.0)) {
    throw InvalidParameter("detect_spikes: hysteresis and refractory must be >= 0");
  }
  std::vector<Spike> out;
  std::vector<std::size_t> idx;
  const double rearm = opt.threshold - opt.hysteresis;
  bool armed = !v.empty() && v[0] < opt.threshold;
  bool open = false;
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (armed && v[k - 1] < opt.threshold && v[k] >= opt.threshold) {
      const double w = (opt.threshold - v[k - 1]) / (v[k] - v[k - 1]);
      const double onset = t[k - 1] + w * (t[k] - t[k - 1]);
      armed = false;
      open = true;
      if (!out.empty() && onset - out.back().onset < opt.refractory) {
        best = idx.back();
      } else {
        best = k;
        out.push_back({t[k], v[k], onset});
        idx.push_back(k);
      }
    }
    if (open) {
      if (v[k] > v[best]) best = k;
      const bool closes = opt.hysteresis > 0.0 ? v[k] < rearm : v[k] < opt.threshold;
      if (closes) {
        out.back().t = t[best];
        out.back().peak = v[best];
        idx.back() = best;
        open = false;
      }
    }
    if (!armed && !open && v[k] < (opt.hysteresis > 0.0 ? rearm : opt.threshold)) armed = true;
  }
  if (open) {
    if (best + 1 == v.size()) {
      out.pop_back();
      idx.pop_back();
    } else {
      out.back().t = t[best];
      out.back().peak = v[best];
      idx.back() = best;
    }
  }
  if (peak_index) *peak_index = std::move(idx);
  return out;
}

/// Samples component i of a trajectory at `sub` points per step
/// (including the step start) plus the final point.
template <std::size_t N>
void sample_component(const Trajectory<N>& traj, std::size_t i, int sub, std::vector<double>& ts,
                      std::vector<double>& ys, double t0 = -std::numeric_limits<double>::infinity(),
                      double t1 = std::numeric_limits<double>::infinity()) {
  ts.clear();
  ys.clear();
  for (const auto& s : traj.steps()) {
    if (s.t1() < t0 || s.t0 > t1) continue;
    for (int j = 0; j < sub; ++j) {
      const double t = s.t0 + s.h * double(j) / double(sub);
      if (t < t0 || t > t1) continue;
      ts.push_back(t);
      ys.push_back(s.component(t, i));
    }
  }
  if (!traj.empty() && traj.t_end() <= t1) {
    ts.push_back(traj.t_end());
    ys.push_back(traj.steps().back().end()[i]);
  }
}

/// Spikes of component 0 of a dense trajectory; peaks are refined on the
/// continuous extension.
template <std::size_t N>
std::vector<Spike> detect_spikes(const Trajectory<N>& traj, const SpikeOptions& opt = {}) {
  std::vector<double> ts, vs;
  sample_component(traj, 0, 8, ts, vs);
  std::vector<std::size_t> idx;
  auto spikes = detect_spikes(ts, vs, opt, &idx);
  for (std::size_t k = 0; k < spikes.size(); ++k) {
    const std::size_t j = idx[k];
    if (j == 0 || j + 1 >= ts.size()) continue;
    auto neg = [&](double t) { return -traj.component(t, 0); };
    const auto r = boost::math::tools::brent_find_minima(neg, ts[j - 1], ts[j + 1], 40);
    if (-r.second >= spikes[k].peak) {
      spikes[k].t = r.first;
      spikes[k].peak = -r.second;
    }
  }
  return spikes;
}

// ---------------------------------------------------------------------------
// Crossings and stages

struct Crossing {
  CurveKind kind = CurveKind::Snic;
  double t = 0.0;
  int direction = 0;  // +1 toward larger Ca
  SlowPoint at;
};

inline std::string crossing_label(const Crossing& c) {
  return std::string(to_string(c.kind)) + (c.direction > 0 ? "+" : "-");
}

inline std::string sequence_label(const std::vector<Crossing>& cs) {
  if (cs.empty()) return "(no crossings)";
  std::string s;
  for (const auto& c : cs) {
    if (!s.empty()) s += ' ';
    s += crossing_label(c);
  }
  return s;
}

/// A simulated run with its curve crossings and spikes.
template <std::size_t N>
struct BurstTrace {
  Trajectory<N> trajectory;
  std::vector<Crossing> crossings;
  std::vector<Spike> spikes;
  std::optional<double> imposed_period;  // ms, driven runs only
  double analysis_from = 0.0;            // ms, cycles are sought from here on
};

enum class Stage { I = 0, II, III, IV, V, VI };

inline constexpr std::array<const char*, 6> kStageNames{"i", "ii", "iii", "iv", "v", "vi"};

struct StageInterval {
  double begin = 0.0;
  double end = 0.0;
  double duration() const { return end - begin; }
};

/// One DB cycle. Stages (ii)-(v) and (i) partition [cycle_begin, cycle_end);
/// (vi) is the leading part of (i) that still contains spikes.
struct Segmentation {
  double cycle_begin = 0.0, cycle_end = 0.0;
  double t_snic1 = 0.0, t_ah1 = 0.0, t_ah2 = 0.0, t_snic2 = 0.0;
  std::array<StageInterval, 6> stages{};

  const StageInterval& operator[](Stage s) const { return stages[std::size_t(s)]; }
  double period() const { return cycle_end - cycle_begin; }
};

/// Crossings SNIC+, AH+, AH-, SNIC- in one cycle starting at the first
/// SNIC+ at or after t_from. The cycle ends after `period` when given,
/// otherwise at the next SNIC+. Throws ClassificationError with the
/// observed sequence otherwise.
inline std::array<Crossing, 4> find_db_cycle(const std::vector<Crossing>& cs, double t_from,
                                             std::optional<double> period, double* cycle_end) {
  auto first = std::find_if(cs.begin(), cs.end(), [&](const Crossing& c) {
    return c.t >= t_from && c.kind == CurveKind::Snic && c.direction > 0;
  });
  if (first == cs.end()) {
    std::vector<Crossing> seen;
    for (const auto& c : cs) {
      if (c.t >= t_from) seen.push_back(c);
    }
    throw ClassificationError("not DB: no SNIC+ crossing after settling; observed " +
                              sequence_label(seen));
  }
  double end = 0.0;
  std::vector<Crossing> win;
  if (period) {
    end = first->t + *period;
    const double guard = 1e-6 * *period;
    for (auto it = first; it != cs.end() && it->t < end - guard; ++it) win.push_back(*it);
  } else {
    auto next = std::find_if(first + 1, cs.end(), [](const Crossing& c) {
      return c.kind == CurveKind::Snic && c.direction > 0;
    });
    if (next == cs.end()) {
      throw ClassificationError("not DB: cycle does not close within the simulation; observed " +
                                sequence_label(std::vector<Crossing>(first, cs.end())));
    }
    end = next->t;
    win.assign(first, next);
  }
  const bool db = win.size() == 4 && win[1].kind == CurveKind::Hopf && win[1].direction > 0 &&
                  win[2].kind == CurveKind::Hopf && win[2].direction < 0 &&
                  win[3].kind == CurveKind::Snic && win[3].direction < 0;
  if (!db) throw ClassificationError("not DB: observed " + sequence_label(win));
  if (cycle_end) *cycle_end = end;
  return {win[0], win[1], win[2], win[3]};
}

/// True iff the trace contains a DB cycle after its settling time.
template <std::size_t N>
bool is_db(const BurstTrace<N>& tr, std::string* observed = nullptr) {
  try {
    double end = 0.0;
    find_db_cycle(tr.crossings, tr.analysis_from, tr.imposed_period, &end);
    if (observed) *observed = "SNIC+ AH+ AH- SNIC-";
    return true;
  } catch (const ClassificationError& e) {
    if (observed) *observed = e.what();
    return false;
  }
}

template <std::size_t N>
Segmentation segment_stages(const BurstTrace<N>& tr) {
  double end = 0.0;
  const auto c = find_db_cycle(tr.crossings, tr.analysis_from, tr.imposed_period, &end);
  Segmentation s;
  s.cycle_begin = c[0].t;
  s.cycle_end = end;
  s.t_snic1 = c[0].t;
  s.t_ah1 = c[1].t;
  s.t_ah2 = c[2].t;
  s.t_snic2 = c[3].t;

  double split = s.t_ah1;
  double last_after = s.t_snic2;
  for (const auto& sp : tr.spikes) {
    if (sp.t >= s.t_ah1 && sp.t < s.t_ah2) split = sp.t;
    if (sp.t >= s.t_snic2 && sp.t < s.cycle_end) last_after = sp.t;
  }
  s.stages[std::size_t(Stage::II)] = {s.t_snic1, s.t_ah1};
  s.stages[std::size_t(Stage::III)] = {s.t_ah1, split};
  s.stages[std::size_t(Stage::IV)] = {split, s.t_ah2};
  s.stages[std::size_t(Stage::V)] = {s.t_ah2, s.t_snic2};
  s.stages[std::size_t(Stage::I)] = {s.t_snic2, s.cycle_end};
  s.stages[std::size_t(Stage::VI)] = {s.t_snic2, last_after};
  return s;
}

inline void write_stages_csv(std::ostream& os, const Segmentation& s) {
  os << "stage,begin,end\n";
  for (std::size_t k = 0; k < 6; ++k) {
    os << kStageNames[k] << ',' << format_shortest(s.stages[k].begin) << ','
       << format_shortest(s.stages[k].end) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Features

struct FeatureVector {
  double period = 0.0;              // ms
  double first_spike_delay = 0.0;   // ms after SNIC+; NaN when no spike follows
  std::vector<double> isi;          // ms, stage (ii)
  double amp_min = 0.0;             // mV, lowest spike peak in stage (ii); NaN if none
  double amp_max = 0.0;             // mV, highest spike peak in stage (ii); NaN if none
  double ah_gap = 0.0;              // ms between the two AH crossings
  int stage_ii_spikes = 0;
  int stage_v_spikes = 0;
  double deepest_hyperpolarization = 0.0;  // mV, minimum v over the cycle
  std::array<double, 6> stage_durations{}; // ms, stages i..vi
};

/// Smallest peak-to-trough swing between consecutive local extrema of v
/// in [t0, t1]; for a trajectory converging to a focus this measures how
/// far the oscillation has been damped.
template <std::size_t N>
double min_oscillation_amplitude(const Trajectory<N>& traj, double t0, double t1) {
  std::vector<double> ts, vs;
  sample_component(traj, 0, 8, ts, vs, t0, t1);
  std::vector<double> ext;
  for (std::size_t k = 1; k + 1 < vs.size(); ++k) {
    const double a = vs[k] - vs[k - 1], b = vs[k + 1] - vs[k];
    if ((a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0)) ext.push_back(vs[k]);
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < ext.size(); ++k) best = std::min(best, std::abs(ext[k] - ext[k - 1]));
  return best;
}

template <std::size_t N>
FeatureVector burst_features(const BurstTrace<N>& tr, const Segmentation& s) {
  FeatureVector f;
  f.period = tr.imposed_period ? *tr.imposed_period : s.period();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  f.first_spike_delay = nan;
  f.amp_min = nan;
  f.amp_max = nan;
  std::vector<double> peaks_ii;
  for (const auto& sp : tr.spikes) {
    if (sp.t < s.cycle_begin || sp.t >= s.cycle_end) continue;
    if (std::isnan(f.first_spike_delay) && sp.t < s.t_snic2) f.first_spike_delay = sp.t - s.t_snic1;
    if (sp.t < s.t_ah1) {
      peaks_ii.push_back(sp.t);
      f.amp_min = std::isnan(f.amp_min) ? sp.peak : std::min(f.amp_min, sp.peak);
      f.amp_max = std::isnan(f.amp_max) ? sp.peak : std::max(f.amp_max, sp.peak);
    }
    if (sp.t >= s.t_ah2 && sp.t < s.t_snic2) ++f.stage_v_spikes;
  }
  f.stage_ii_spikes = int(peaks_ii.size());
  for (std::size_t k = 1; k < peaks_ii.size(); ++k) f.isi.push_back(peaks_ii[k] - peaks_ii[k - 1]);
  f.ah_gap = s.t_ah2 - s.t_ah1;
  std::vector<double> ts, vs;
  sample_component(tr.trajectory, 0, 8, ts, vs, s.cycle_begin, s.cycle_end);
  f.deepest_hyperpolarization = vs.empty() ? nan : *std::min_element(vs.begin(), vs.end());
  for (std::size_t k = 0; k < 6; ++k) f.stage_durations[k] = s.stages[k].duration();
  return f;
}

template <std::size_t N>
FeatureVector burst_features(const BurstTrace<N>& tr) {
  return burst_features(tr, segment_stages(tr));
}

/// Column order of the flat CSV row.
inline constexpr std::array<const char*, 19> kFeatureColumns{
    "period",   "first_spike_delay", "stage_ii_spikes", "isi_count", "isi_min",
    "isi_max",  "isi_mean",          "isi",             "amp_min",   "amp_max",
    "ah_gap",   "stage_v_spikes",    "deepest_hyperpolarization",    "dur_i",
    "dur_ii",   "dur_iii",           "dur_iv",          "dur_v",     "dur_vi"};

inline void write_features_header(std::ostream& os) {
  for (std::size_t k = 0; k < kFeatureColumns.size(); ++k) os << (k ? "," : "") << kFeatureColumns[k];
  os << '\n';
}

inline void write_features_row(std::ostream& os, const FeatureVector& f) {
  auto num = [](double x) { return std::isnan(x) ? std::string() : format_shortest(x); };
  double lo = std::numeric_limits<double>::quiet_NaN(), hi = lo, mean = lo;
  if (!f.isi.empty()) {
    lo = *std::min_element(f.isi.begin(), f.isi.end());
    hi = *std::max_element(f.isi.begin(), f.isi.end());
    mean = 0.0;
    for (double x : f.isi) mean += x;
    mean /= double(f.isi.size());
  }
  std::string list;
  for (double x : f.isi) list += (list.empty() ? "" : ";") + format_shortest(x);
  os << num(f.period) << ',' << num(f.first_spike_delay) << ',' << f.stage_ii_spikes << ','
     << f.isi.size() << ',' << num(lo) << ',' << num(hi) << ',' << num(mean) << ',' << list << ','
     << num(f.amp_min) << ',' << num(f.amp_max) << ',' << num(f.ah_gap) << ',' << f.stage_v_spikes
     << ',' << num(f.deepest_hyperpolarization);
  for (double d : f.stage_durations) os << ',' << num(d);
  os << '\n';
}

/// Reads the first data row written by write_features_header/row.
inline FeatureVector read_features_csv(std::istream& is) {
  std::string header, row;
  if (!std::getline(is, header) || !std::getline(is, row)) {
    throw UsageError("features CSV: expected a header and one row");
  }
  auto split = [](const std::string& line) {
    std::vector<std::string> out(1);
    for (char c : line) {
      if (c == ',') out.emplace_back();
      else if (c != '\r') out.back() += c;
    }
    return out;
  };
  const auto names = split(header), cells = split(row);
  if (names.size() != kFeatureColumns.size() || cells.size() != names.size()) {
    throw UsageError("features CSV: expected " + std::to_string(kFeatureColumns.size()) + " columns");
  }
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] != kFeatureColumns[k]) throw UsageError("features CSV: unexpected column '" + names[k] + "'");
  }
  auto num = [&](std::size_t k) {
    return cells[k].empty() ? std::numeric_limits<double>::quiet_NaN() : parse_double(cells[k], names[k]);
  };
  FeatureVector f;
  f.period = num(0);
  f.first_spike_delay = num(1);
  f.stage_ii_spikes = int(num(2));
  std::string item;
  for (char c : cells[7] + ";") {
    if (c != ';') {
      item += c;
    } else if (!item.empty()) {
      f.isi.push_back(parse_double(item, "isi"));
      item.clear();
    }
  }
  f.amp_min = num(8);
  f.amp_max = num(9);
  f.ah_gap = num(10);
  f.stage_v_spikes = int(num(11));
  f.deepest_hyperpolarization = num(12);
  for (std::size_t k = 0; k < 6; ++k) f.stage_durations[k] = num(13 + k);
  return f;
}

// ---------------------------------------------------------------------------
// Distance

/// Per-component weights; each component is divided by its scale before
/// weighting.
struct FeatureWeights {
  double period = 1.0;
  double first_spike_delay = 1.0;
  double isi = 1.0;
  double amplitude = 1.0;
  double ah_gap = 1.0;
  double hyperpolarization = 1.0;
  double spike_counts = 0.0;
};

struct FeatureScales {
  double period = 1000.0;           // ms
  double first_spike_delay = 10.0;  // ms
  double isi = 10.0;                // ms
  double amplitude = 10.0;          // mV
  double ah_gap = 100.0;            // ms
  double hyperpolarization = 10.0;  // mV
  double spike_counts = 1.0;
};

/// Linear interpolation of a sequence on the normalized index [0, 1],
/// evaluated at m equally spaced points.
inline std::vector<double> resample_sequence(const std::vector<double>& x, std::size_t m) {
  std::vector<double> out(m);
  if (x.empty() || m == 0) return {};
  if (x.size() == 1 || m == 1) {
    std::fill(out.begin(), out.end(), x.front());
    if (m == 1 && x.size() > 1) out[0] = x.front();
    return out;
  }
  for (std::size_t j = 0; j < m; ++j) {
    const double u = double(j) / double(m - 1) * double(x.size() - 1);
    const auto k = std::min<std::size_t>(std::size_t(u), x.size() - 2);
    const double w = u - double(k);
    out[j] = (1.0 - w) * x[k] + w * x[k + 1];
  }
  return out;
}

namespace detail {

/// Squared normalized difference; a component missing on exactly one side
/// costs 1.
inline double scaled_sq(double a, double b, double scale) {
  const bool na = std::isnan(a), nb = std::isnan(b);
  if (na && nb) return 0.0;
  if (na || nb) return 1.0;
  const double d = (a - b) / scale;
  return d * d;
}

}  // namespace detail

/// Weighted Euclidean distance over scaled components. ISI sequences are
/// resampled to the longer length and compared by mean squared difference.
inline double feature_distance(const FeatureVector& a, const FeatureVector& b,
                               const FeatureWeights& w = {}, const FeatureScales& sc = {}) {
  for (double x : {w.period, w.first_spike_delay, w.isi, w.amplitude, w.ah_gap,
                   w.hyperpolarization, w.spike_counts}) {
    if (!(x >= 0.0)) throw InvalidParameter("feature_distance: weights must be >= 0");
  }
  using detail::scaled_sq;
  double s = 0.0;
  s += w.period * scaled_sq(a.period, b.period, sc.period);
  s += w.first_spike_delay * scaled_sq(a.first_spike_delay, b.first_spike_delay, sc.first_spike_delay);
  double isi = 0.0;
  if (a.isi.empty() != b.isi.empty()) {
    isi = 1.0;
  } else if (!a.isi.empty()) {
    const std::size_t m = std::max(a.isi.size(), b.isi.size());
    const auto ra = resample_sequence(a.isi, m), rb = resample_sequence(b.isi, m);
    for (std::size_t k = 0; k < m; ++k) isi += scaled_sq(ra[k], rb[k], sc.isi);
    isi /= double(m);
  }
  s += w.isi * isi;
  s += w.amplitude * (scaled_sq(a.amp_min, b.amp_min, sc.amplitude) +
                      scaled_sq(a.amp_max, b.amp_max, sc.amplitude));
  s += w.ah_gap * scaled_sq(a.ah_gap, b.ah_gap, sc.ah_gap);
  s += w.hyperpolarization *
       scaled_sq(a.deepest_hyperpolarization, b.deepest_hyperpolarization, sc.hyperpolarization);
  s += w.spike_counts * (scaled_sq(a.stage_ii_spikes, b.stage_ii_spikes, sc.spike_counts) +
                         scaled_sq(a.stage_v_spikes, b.stage_v_spikes, sc.spike_counts));
  return std::sqrt(s);
}

}  // namespace burstlab
