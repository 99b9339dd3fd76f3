#pragma once

// Equilibria of a fast subsystem and its fold (SNIC) and Andronov-Hopf
// curves in the (Ca, Na) plane.
//
// Every equilibrium has its gates at their voltage-slaved values, so the
// equilibria are the zeros in v of slaved_voltage_rate. The finder brackets
// those zeros on a fine voltage grid and polishes each in full dimension.
// For the same reason det J is a nonzero multiple of d/dv of the slaved
// rate at an equilibrium, which gives the fold curve as a two-unknown
// problem in (v, Ca) per Na.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "burstlab/error.hpp"
#include "burstlab/fast_system.hpp"
#include "burstlab/linalg.hpp"
#include "burstlab/orbit.hpp"
#include "burstlab/params_io.hpp"

namespace burstlab {

struct EquilibriumOptions {
  double v_min = -250.0;  // mV
  double v_max = 60.0;    // mV
  double v_step = 0.25;   // mV
  double merge_tol = 1e-6;
  double residual_tol = 1e-10;
};

template <class Fast>
struct Equilibrium {
  typename Fast::State state{};
  SlowPoint slow;
  std::vector<std::complex<double>> eigenvalues;
  bool stable = false;
  int branch = 0;  // 0 = lowest voltage
  double residual = 0.0;

  double v() const { return state[0]; }
};

/// Eigenvalues of the fast Jacobian at a state.
template <class Fast>
std::vector<std::complex<double>> eigen(const Fast& fast, const typename Fast::State& x,
                                        SlowPoint slow) {
  return eigenvalues<Fast::dim>(fast.jacobian(x, slow));
}

/// Complex pair with the largest real part (upper member), if any.
inline std::optional<std::complex<double>> leading_complex_pair(
    const std::vector<std::complex<double>>& ev, double imag_tol = 1e-9) {
  for (const auto& l : ev) {
    if (l.imag() > imag_tol) return l;
  }
  return std::nullopt;
}

namespace detail {

inline double root_in(const std::function<double(double)>& g, double a, double b, double ga,
                      double gb, double xtol) {
  if (ga == 0.0) return a;
  if (gb == 0.0) return b;
  std::uintmax_t iters = 200;
  auto tol = [xtol](double lo, double hi) { return std::abs(hi - lo) <= xtol; };
  const auto r = boost::math::tools::toms748_solve(g, a, b, ga, gb, tol, iters);
  return 0.5 * (r.first + r.second);
}

/// Newton on the full fast system from x; nullopt unless the residual
/// drops below tol.
template <class Fast>
std::optional<typename Fast::State> polish(const Fast& fast, typename Fast::State x,
                                           SlowPoint slow, double tol, int max_iter = 20) {
  constexpr int N = int(Fast::dim);
  for (int it = 0; it <= max_iter; ++it) {
    const auto f = fast.rhs(x, slow);
    if (!all_finite(f)) return std::nullopt;
    if (norm_inf(f) < 1e-3 * tol) return x;
    if (it == max_iter) break;
    const auto J = to_eigen(fast.jacobian(x, slow));
    Eigen::Matrix<double, N, 1> b;
    for (int i = 0; i < N; ++i) b(i) = -f[std::size_t(i)];
    const Eigen::Matrix<double, N, 1> dx = solve_dense<N>(J, b);
    typename Fast::State next = x;
    for (int i = 0; i < N; ++i) next[std::size_t(i)] += dx(i);
    if (!all_finite(next)) return std::nullopt;
    const double step = norm_inf(axpy(next, -1.0, x));
    x = next;
    if (step < 1e-15 * (1.0 + norm_inf(x))) break;
  }
  if (norm_inf(fast.rhs(x, slow)) < tol) return x;
  return std::nullopt;
}

template <class Fast>
Equilibrium<Fast> make_equilibrium(const Fast& fast, const typename Fast::State& x,
                                   SlowPoint slow) {
  Equilibrium<Fast> e;
  e.state = x;
  e.slow = slow;
  e.eigenvalues = eigen(fast, x, slow);
  e.stable = std::all_of(e.eigenvalues.begin(), e.eigenvalues.end(),
                         [](const auto& l) { return l.real() < 0.0; });
  e.residual = norm_inf(fast.rhs(x, slow));
  return e;
}

/// Zero of the slaved voltage rate in [a, b] given a sign change.
template <class Fast>
double slaved_root(const Fast& fast, SlowPoint slow, double a, double b, double ga, double gb) {
  return root_in([&](double v) { return slaved_voltage_rate(fast, v, slow); }, a, b, ga, gb,
                 1e-13);
}

}  // namespace detail

/// All equilibria at a slow point, sorted by increasing v. An empty result
/// comes with a diagnostic when one is requested.
template <class Fast>
std::vector<Equilibrium<Fast>> find_equilibria(const Fast& fast, SlowPoint slow,
                                               const EquilibriumOptions& opt = {},
                                               std::string* diagnostic = nullptr) {
  std::vector<Equilibrium<Fast>> out;
  int failed = 0;
  const int n = int(std::ceil((opt.v_max - opt.v_min) / opt.v_step));
  double va = opt.v_min;
  double ga = slaved_voltage_rate(fast, va, slow);
  for (int i = 1; i <= n; ++i) {
    const double vb = std::min(opt.v_max, opt.v_min + i * opt.v_step);
    const double gb = slaved_voltage_rate(fast, vb, slow);
    if ((ga <= 0.0) != (gb <= 0.0) || ga == 0.0) {
      const double v = detail::slaved_root(fast, slow, va, vb, ga, gb);
      const auto x = detail::polish(fast, fast.slaved(v), slow, opt.residual_tol);
      if (!x) {
        ++failed;
      } else {
        const bool dup = std::any_of(out.begin(), out.end(), [&](const auto& e) {
          return norm_inf(axpy(e.state, -1.0, *x)) < opt.merge_tol;
        });
        if (!dup) out.push_back(detail::make_equilibrium(fast, *x, slow));
      }
    }
    va = vb;
    ga = gb;
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.v() < b.v(); });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].branch = int(i);
  if (diagnostic) {
    diagnostic->clear();
    if (out.empty()) {
      *diagnostic = failed ? "Newton polish failed on every bracketed root"
                           : "no sign change of the voltage rate in the scanned range";
    }
  }
  return out;
}

/// Number of equilibria at a slow point, from sign changes alone.
template <class Fast>
int count_equilibria(const Fast& fast, SlowPoint slow, const EquilibriumOptions& opt = {}) {
  int count = 0;
  const int n = int(std::ceil((opt.v_max - opt.v_min) / opt.v_step));
  double ga = slaved_voltage_rate(fast, opt.v_min, slow);
  for (int i = 1; i <= n; ++i) {
    const double gb = slaved_voltage_rate(fast, std::min(opt.v_max, opt.v_min + i * opt.v_step), slow);
    if ((ga <= 0.0) != (gb <= 0.0)) ++count;
    ga = gb;
  }
  return count;
}

/// The equilibrium with the largest v.
template <class Fast>
std::optional<Equilibrium<Fast>> depolarized_equilibrium(const Fast& fast, SlowPoint slow,
                                                         const EquilibriumOptions& opt = {}) {
  const int n = int(std::ceil((opt.v_max - opt.v_min) / opt.v_step));
  double vb = opt.v_max;
  double gb = slaved_voltage_rate(fast, vb, slow);
  for (int i = n - 1; i >= 0; --i) {
    const double va = opt.v_min + i * opt.v_step;
    const double ga = slaved_voltage_rate(fast, va, slow);
    if ((ga <= 0.0) != (gb <= 0.0) || gb == 0.0) {
      const double v = detail::slaved_root(fast, slow, va, vb, ga, gb);
      if (const auto x = detail::polish(fast, fast.slaved(v), slow, opt.residual_tol)) {
        auto e = detail::make_equilibrium(fast, *x, slow);
        e.branch = -1;
        return e;
      }
    }
    vb = va;
    gb = ga;
  }
  return std::nullopt;
}

/// Re of the leading complex pair at the depolarized equilibrium.
template <class Fast>
std::optional<double> depolarized_pair_real(const Fast& fast, SlowPoint slow,
                                            const EquilibriumOptions& opt = {}) {
  const auto e = depolarized_equilibrium(fast, slow, opt);
  if (!e) return std::nullopt;
  const auto l = leading_complex_pair(e->eigenvalues);
  if (!l) return std::nullopt;
  return l->real();
}

// ---------------------------------------------------------------------------
// Curves

enum class CurveKind { Snic, Hopf };

inline const char* to_string(CurveKind k) { return k == CurveKind::Snic ? "SNIC" : "AH"; }

inline CurveKind curve_kind_from_string(std::string_view s) {
  if (s == "SNIC") return CurveKind::Snic;
  if (s == "AH") return CurveKind::Hopf;
  throw UsageError("unknown curve kind '" + std::string(s) + "'");
}

struct BifCurve {
  CurveKind kind = CurveKind::Snic;
  std::vector<SlowPoint> points;   // ordered by increasing Na
  std::vector<double> residuals;   // |det J| (fold) or |Re lambda| (Hopf)
  std::vector<double> voltages;    // equilibrium v per point, mV; may be empty after import
  bool open_begin = false;         // curve does not reach the lower Na bound
  bool open_end = false;           // curve does not reach the upper Na bound
  std::string note;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

struct ContinuationOptions {
  double na_min = 4.8;
  double na_max = 6.4;
  double na_step = 0.01;
  double ca_min = -0.2;        // uM, search window
  double ca_max = 1.6;
  double ca_scan_step = 0.005; // uM, coarse scan used to (re)acquire the curve
  double max_gap = 0.02;       // chord bound between consecutive points
  int max_refine_depth = 10;
  double max_jump = 0.05;      // accepted |Ca - predicted Ca|
  EquilibriumOptions equilibria{};
};

/// Curve value at one Na, with the Ca-guess in and out.
struct CurveSample {
  SlowPoint p;
  double v = 0.0;
  double residual = 0.0;
};

namespace detail {

/// Natural continuation in Na with linear prediction and chord refinement.
inline BifCurve trace_by_na(
    CurveKind kind, const ContinuationOptions& opt,
    const std::function<std::optional<CurveSample>(double, const std::optional<CurveSample>&)>&
        solve_at) {
  if (!(opt.na_step > 0.0) || !(opt.na_max > opt.na_min)) {
    throw InvalidParameter("curve tracing: need na_max > na_min and na_step > 0");
  }
  BifCurve curve;
  curve.kind = kind;
  std::vector<CurveSample> samples;
  const int n = int(std::llround((opt.na_max - opt.na_min) / opt.na_step));
  bool started = false;
  bool lost = false;

  auto predict = [&](double na) -> std::optional<CurveSample> {
    if (samples.empty()) return std::nullopt;
    CurveSample g = samples.back();
    if (samples.size() >= 2) {
      const auto& a = samples[samples.size() - 2];
      const auto& b = samples.back();
      const double t = (na - b.p.na) / (b.p.na - a.p.na);
      g.p.ca = b.p.ca + t * (b.p.ca - a.p.ca);
      g.v = b.v + t * (b.v - a.v);
    }
    g.p.na = na;
    return g;
  };

  std::function<void(const CurveSample&, const CurveSample&, int, std::vector<CurveSample>&)>
      refine = [&](const CurveSample& a, const CurveSample& b, int depth,
                   std::vector<CurveSample>& out) {
        const double chord = std::hypot(b.p.ca - a.p.ca, b.p.na - a.p.na);
        if (chord <= opt.max_gap || depth >= opt.max_refine_depth) return;
        CurveSample g;
        g.p = {0.5 * (a.p.ca + b.p.ca), 0.5 * (a.p.na + b.p.na)};
        g.v = 0.5 * (a.v + b.v);
        const auto m = solve_at(g.p.na, g);
        if (!m) return;
        refine(a, *m, depth + 1, out);
        out.push_back(*m);
        refine(*m, b, depth + 1, out);
      };

  for (int i = 0; i <= n; ++i) {
    const double na = (i == n) ? opt.na_max : opt.na_min + i * opt.na_step;
    std::optional<CurveSample> s;
    if (auto g = predict(na)) {
      s = solve_at(na, g);
      if (s && std::abs(s->p.ca - g->p.ca) > opt.max_jump + std::abs(g->p.ca - samples.back().p.ca)) {
        s.reset();
      }
    }
    if (!s) s = solve_at(na, std::nullopt);
    if (!s) {
      if (started) lost = true;
      if (i == 0) curve.open_begin = true;
      if (started) {
        // a curve that vanishes ends the sweep; a second branch is not sought
        curve.note = "curve lost at Na = " + format_shortest(na);
        break;
      }
      continue;
    }
    if (!samples.empty()) {
      std::vector<CurveSample> mid;
      refine(samples.back(), *s, 0, mid);
      samples.insert(samples.end(), mid.begin(), mid.end());
    }
    samples.push_back(*s);
    started = true;
  }
  curve.open_end = lost || samples.empty() || samples.back().p.na < opt.na_max;
  if (!samples.empty() && samples.front().p.na > opt.na_min) curve.open_begin = true;
  for (const auto& s : samples) {
    curve.points.push_back(s.p);
    curve.voltages.push_back(s.v);
    curve.residuals.push_back(s.residual);
  }
  if (samples.empty()) curve.note = "no curve point found in the window";
  return curve;
}

/// d/dv of the slaved voltage rate by central difference.
template <class Fast>
double slaved_rate_dv(const Fast& fast, double v, SlowPoint slow) {
  constexpr double h = 1e-4;
  return (slaved_voltage_rate(fast, v + h, slow) - slaved_voltage_rate(fast, v - h, slow)) /
         (2.0 * h);
}

/// Newton on (F, dF/dv) = 0 in (v, Ca) at fixed Na.
template <class Fast>
std::optional<std::pair<double, double>> fold_newton(const Fast& fast, double v, double ca,
                                                     double na) {
  auto G = [&](double vv, double cc) {
    const SlowPoint s{cc, na};
    return std::pair{slaved_voltage_rate(fast, vv, s), slaved_rate_dv(fast, vv, s)};
  };
  for (int it = 0; it < 40; ++it) {
    const auto [f, fv] = G(v, ca);
    if (!std::isfinite(f) || !std::isfinite(fv)) return std::nullopt;
    const double hv = 1e-3;
    const double hc = 1e-7 * std::max(1.0, std::abs(ca));
    const auto gp = G(v + hv, ca), gm = G(v - hv, ca);
    const auto cp = G(v, ca + hc), cm = G(v, ca - hc);
    const double a11 = (gp.first - gm.first) / (2 * hv), a12 = (cp.first - cm.first) / (2 * hc);
    const double a21 = (gp.second - gm.second) / (2 * hv), a22 = (cp.second - cm.second) / (2 * hc);
    const double det = a11 * a22 - a12 * a21;
    if (det == 0.0 || !std::isfinite(det)) return std::nullopt;
    double dv = (-f * a22 + fv * a12) / det;
    double dc = (-fv * a11 + f * a21) / det;
    const double damp = std::min({1.0, 5.0 / std::max(std::abs(dv), 1e-300),
                                  0.05 / std::max(std::abs(dc), 1e-300)});
    dv *= damp;
    dc *= damp;
    v += dv;
    ca += dc;
    if (std::abs(dv) < 1e-12 * (1.0 + std::abs(v)) && std::abs(dc) < 1e-14 * (1.0 + std::abs(ca))) {
      break;
    }
  }
  const auto [f, fv] = G(v, ca);
  if (std::abs(f) < 1e-11 && std::abs(fv) < 1e-8) return std::pair{v, ca};
  return std::nullopt;
}

}  // namespace detail

/// Fold curve of equilibria (the SNIC candidate), one point per Na where a
/// 3 -> 1 transition in the equilibrium count exists inside the Ca window.
template <class Fast>
BifCurve trace_fold_curve(const Fast& fast, const ContinuationOptions& opt = {}) {
  auto accept = [&](double v, double ca, double na) -> std::optional<CurveSample> {
    if (ca < opt.ca_min || ca > opt.ca_max) return std::nullopt;
    const SlowPoint s{ca, na};
    const auto x = detail::polish(fast, fast.slaved(v), s, opt.equilibria.residual_tol);
    if (!x) return std::nullopt;
    const double detJ = determinant<Fast::dim>(fast.jacobian(*x, s));
    return CurveSample{s, (*x)[0], std::abs(detJ)};
  };

  auto solve_at = [&](double na, const std::optional<CurveSample>& guess) -> std::optional<CurveSample> {
    if (guess) {
      if (const auto r = detail::fold_newton(fast, guess->v, guess->p.ca, na)) {
        return accept(r->first, r->second, na);
      }
      return std::nullopt;
    }
    // acquire: scan for the largest-Ca transition from >= 3 equilibria to 1
    const int m = int(std::ceil((opt.ca_max - opt.ca_min) / opt.ca_scan_step));
    int prev = count_equilibria(fast, {opt.ca_min, na}, opt.equilibria);
    std::optional<double> lo;
    for (int k = 1; k <= m; ++k) {
      const double ca = std::min(opt.ca_max, opt.ca_min + k * opt.ca_scan_step);
      const int c = count_equilibria(fast, {ca, na}, opt.equilibria);
      if (prev >= 3 && c < 3) lo = ca - opt.ca_scan_step;
      prev = c;
    }
    if (!lo) return std::nullopt;
    double a = *lo, b = *lo + opt.ca_scan_step;
    while (b - a > 1e-6) {
      const double mid = 0.5 * (a + b);
      (count_equilibria(fast, {mid, na}, opt.equilibria) >= 3 ? a : b) = mid;
    }
    const auto eqs = find_equilibria(fast, {a, na}, opt.equilibria);
    if (eqs.size() < 2) return std::nullopt;
    // the merging pair is the closest-in-v adjacent pair
    std::size_t best = 0;
    for (std::size_t i = 1; i + 1 < eqs.size(); ++i) {
      if (eqs[i + 1].v() - eqs[i].v() < eqs[best + 1].v() - eqs[best].v()) best = i;
    }
    const double v0 = 0.5 * (eqs[best].v() + eqs[best + 1].v());
    if (const auto r = detail::fold_newton(fast, v0, 0.5 * (a + b), na)) {
      return accept(r->first, r->second, na);
    }
    return std::nullopt;
  };
  return detail::trace_by_na(CurveKind::Snic, opt, solve_at);
}

/// Hopf curve: zero of Re of the leading complex pair on the depolarized
/// branch, crossing from positive (left) to negative (right) as Ca grows.
template <class Fast>
BifCurve trace_hopf_curve(const Fast& fast, const ContinuationOptions& opt = {}) {
  auto h = [&](double ca, double na) { return depolarized_pair_real(fast, {ca, na}, opt.equilibria); };

  auto finish = [&](double a, double b, double ha, double hb, double na) -> std::optional<CurveSample> {
    const std::function<double(double)> g = [&](double ca) {
      const auto r = h(ca, na);
      return r ? *r : std::numeric_limits<double>::quiet_NaN();
    };
    const double ca = detail::root_in(g, a, b, ha, hb, 1e-12);
    const SlowPoint s{ca, na};
    const auto e = depolarized_equilibrium(fast, s, opt.equilibria);
    if (!e) return std::nullopt;
    const auto l = leading_complex_pair(e->eigenvalues);
    if (!l) return std::nullopt;
    return CurveSample{s, e->v(), std::abs(l->real())};
  };

  auto solve_at = [&](double na, const std::optional<CurveSample>& guess) -> std::optional<CurveSample> {
    if (guess) {
      const double c0 = guess->p.ca;
      for (double w = 0.002; w <= 0.1; w *= 2.0) {
        const double a = std::max(opt.ca_min, c0 - w), b = std::min(opt.ca_max, c0 + w);
        const auto ha = h(a, na), hb = h(b, na);
        if (!ha || !hb) continue;
        if (*ha > 0.0 && *hb < 0.0) return finish(a, b, *ha, *hb, na);
        if (*ha <= 0.0 && *hb <= 0.0 && a == opt.ca_min) break;
      }
      return std::nullopt;
    }
    const int m = int(std::ceil((opt.ca_max - opt.ca_min) / opt.ca_scan_step));
    double a = opt.ca_min;
    auto ha = h(a, na);
    for (int k = 1; k <= m; ++k) {
      const double b = std::min(opt.ca_max, opt.ca_min + k * opt.ca_scan_step);
      const auto hb = h(b, na);
      if (ha && hb && *ha > 0.0 && *hb <= 0.0) return finish(a, b, *ha, *hb, na);
      a = b;
      ha = hb;
    }
    return std::nullopt;
  };
  return detail::trace_by_na(CurveKind::Hopf, opt, solve_at);
}

// ---------------------------------------------------------------------------
// SNIC verification

struct SnicCheck {
  bool is_snic = false;
  std::vector<double> offsets;                 // uM, added to the fold Ca
  std::vector<std::optional<double>> periods;  // ms, same order as offsets
  std::string diagnostic;
};

/// Period options used near a fold: long windows so that periods of a few
/// hundred ms still give five gaps.
inline PeriodOptions snic_period_options() {
  PeriodOptions o;
  o.transient = 1000.0;
  o.measure = 4000.0;
  return o;
}

/// Periods at Ca_fold + {8, 4, 2, 1, 0.5}e-3. True iff all are defined, strictly
/// increasing toward the fold, and the last exceeds 100 ms.
template <class Fast>
SnicCheck verify_snic(const Fast& fast, SlowPoint fold_point,
                      const PeriodOptions& popt = snic_period_options()) {
  SnicCheck r;
  r.offsets = {8e-3, 4e-3, 2e-3, 1e-3, 5e-4};
  for (double off : r.offsets) {
    const auto pr = orbit_period(fast, {fold_point.ca + off, fold_point.na}, popt);
    r.periods.push_back(pr.period);
    if (!pr.period && r.diagnostic.empty()) {
      r.diagnostic = "no periodic orbit at offset " + format_shortest(off) + ": " + pr.diagnostic;
    }
  }
  if (!r.diagnostic.empty()) return r;
  bool increasing = true;
  for (std::size_t i = 1; i < r.periods.size(); ++i) {
    if (!(*r.periods[i] > *r.periods[i - 1])) increasing = false;
  }
  r.is_snic = increasing && *r.periods.back() > 100.0;
  if (!increasing) r.diagnostic = "periods do not grow toward the fold";
  else if (!r.is_snic) r.diagnostic = "periods stay below 100 ms";
  return r;
}

// ---------------------------------------------------------------------------
// CSV

inline void write_curves_csv(std::ostream& os, const std::vector<BifCurve>& curves) {
  os << "kind,ca,na,residual\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      os << to_string(c.kind) << ',' << format_shortest(c.points[i].ca) << ','
         << format_shortest(c.points[i].na) << ','
         << format_shortest(i < c.residuals.size() ? c.residuals[i] : 0.0) << '\n';
    }
  }
}

/// Reads curves written by write_curves_csv; consecutive rows of one kind
/// form one curve.
inline std::vector<BifCurve> read_curves_csv(std::istream& is) {
  std::vector<BifCurve> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto sv = trim(line);
    if (sv.empty()) continue;
    if (lineno == 1 && sv.substr(0, 4) == "kind") continue;
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
      const auto comma = sv.find(',', start);
      cols.push_back(trim(sv.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols.size() != 4) {
      throw UsageError("curve CSV line " + std::to_string(lineno) + ": expected 4 columns");
    }
    const CurveKind kind = curve_kind_from_string(cols[0]);
    if (out.empty() || out.back().kind != kind) {
      out.emplace_back();
      out.back().kind = kind;
    }
    out.back().points.push_back({parse_double(cols[1], "ca"), parse_double(cols[2], "na")});
    out.back().residuals.push_back(parse_double(cols[3], "residual"));
  }
  return out;
}

/// First curve of the given kind, or throws.
inline const BifCurve& curve_of_kind(const std::vector<BifCurve>& curves, CurveKind kind) {
  for (const auto& c : curves) {
    if (c.kind == kind) return c;
  }
  throw UsageError(std::string("no ") + to_string(kind) + " curve available");
}

}  // namespace burstlab
