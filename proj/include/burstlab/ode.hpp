#pragma once

// Dormand-Prince 5(4) integrator with the 4th-order continuous extension,
// trajectory recording and sign-change event location on the dense output.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "burstlab/error.hpp"
#include "burstlab/params_io.hpp"
#include "burstlab/vec.hpp"

namespace burstlab {

struct OdeOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-8;
  double max_step = 1.0;      // ms
  double initial_step = 0.0;  // 0 selects automatically
  std::uint64_t max_steps = 100'000'000;
};

/// One accepted step together with its interpolation coefficients.
template <std::size_t N>
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  std::array<Vec<N>, 5> r{};

  double t1() const { return t0 + h; }
  const Vec<N>& start() const { return r[0]; }

  Vec<N> end() const {
    Vec<N> y{};
    for (std::size_t i = 0; i < N; ++i) y[i] = r[0][i] + r[1][i];
    return y;
  }

  double component(double t, std::size_t i) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    return r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
  }

  Vec<N> operator()(double t) const {
    Vec<N> y{};
    for (std::size_t i = 0; i < N; ++i) y[i] = component(t, i);
    return y;
  }
};

/// Dense solution: the concatenation of accepted steps.
template <std::size_t N>
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(double rel_tol, double abs_tol) : rel_tol_(rel_tol), abs_tol_(abs_tol) {}

  void push(const DenseStep<N>& step) { steps_.push_back(step); }

  bool empty() const { return steps_.empty(); }
  double t_begin() const { return steps_.front().t0; }
  double t_end() const { return steps_.back().t1(); }
  std::span<const DenseStep<N>> steps() const { return steps_; }
  double rel_tol() const { return rel_tol_; }
  double abs_tol() const { return abs_tol_; }
  /// Order of the continuous extension.
  static constexpr int interpolation_order() { return 4; }

  /// Number of stored samples (step boundaries).
  std::size_t size() const { return steps_.empty() ? 0 : steps_.size() + 1; }
  double time(std::size_t k) const { return k < steps_.size() ? steps_[k].t0 : t_end(); }
  Vec<N> state(std::size_t k) const { return k < steps_.size() ? steps_[k].r[0] : steps_.back().end(); }

  const DenseStep<N>& step_at(double t) const {
    auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                               [](double x, const DenseStep<N>& s) { return x < s.t0; });
    if (it != steps_.begin()) --it;
    return *it;
  }

  Vec<N> operator()(double t) const { return step_at(t)(t); }
  double component(double t, std::size_t i) const { return step_at(t).component(t, i); }

  /// Uniform resampling of one component on [t0, t1] with spacing dt.
  void sample(std::size_t i, double t0, double t1, double dt, std::vector<double>& ts,
              std::vector<double>& ys) const {
    ts.clear();
    ys.clear();
    t0 = std::max(t0, t_begin());
    t1 = std::min(t1, t_end());
    if (!(t1 > t0)) return;
    const auto n = static_cast<std::size_t>(std::floor((t1 - t0) / dt)) + 1;
    ts.reserve(n);
    ys.reserve(n);
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double t = t0 + dt * static_cast<double>(j);
      while (k + 1 < steps_.size() && steps_[k + 1].t0 <= t) ++k;
      while (k > 0 && steps_[k].t0 > t) --k;
      ts.push_back(t);
      ys.push_back(steps_[k].component(t, i));
    }
  }

 private:
  std::vector<DenseStep<N>> steps_;
  double rel_tol_ = 0.0;
  double abs_tol_ = 0.0;
};

/// Writes step-boundary samples: header row then `t,<names...>`.
template <std::size_t N>
void write_trajectory_csv(std::ostream& os, const Trajectory<N>& traj,
                          const std::array<std::string, N>& names) {
  os << "t";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << format_shortest(traj.time(k));
    const Vec<N> y = traj.state(k);
    for (double yi : y) os << ',' << format_shortest(yi);
    os << '\n';
  }
}

struct IntegrationStats {
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  std::uint64_t rhs_evaluations = 0;
  double t_final = 0.0;
  bool stopped_by_observer = false;
};

namespace detail {

inline void check_span_and_tolerances(double t0, double t1, const OdeOptions& opt) {
  if (!(t1 > t0) || !std::isfinite(t0) || !std::isfinite(t1)) {
    throw InvalidParameter("integrate: t_span must satisfy t0 < t1");
  }
  auto tol_ok = [](double tol) { return tol > 0.0 && tol <= 1e-2; };
  if (!tol_ok(opt.rel_tol) || !tol_ok(opt.abs_tol)) {
    throw InvalidParameter("integrate: tolerances must lie in (0, 1e-2]");
  }
  if (!(opt.max_step > 0.0)) throw InvalidParameter("integrate: max_step must be > 0");
}

// Dormand-Prince tableau.
inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
inline constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                        a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

}  // namespace detail

/// Integrates y' = rhs(t, y) from t0 to t1, calling `observer(step)` after
/// every accepted step. The observer returns false to stop early.
template <std::size_t N, class Rhs, class Observer>
IntegrationStats integrate_dense(Rhs&& rhs, Vec<N> y, double t0, double t1, const OdeOptions& opt,
                                 Observer&& observer) {
  using namespace detail;
  check_span_and_tolerances(t0, t1, opt);
  if (!all_finite(y)) throw InvalidParameter("integrate: initial state is not finite");

  IntegrationStats stats;
  auto f = [&](double t, const Vec<N>& x) {
    ++stats.rhs_evaluations;
    return rhs(t, x);
  };

  auto scale = [&](const Vec<N>& a, const Vec<N>& b, std::size_t i) {
    return opt.abs_tol + opt.rel_tol * std::max(std::abs(a[i]), std::abs(b[i]));
  };

  Vec<N> k1 = f(t0, y);
  const double span = t1 - t0;
  double h = opt.initial_step;
  if (!(h > 0.0)) {
    // Hairer's starting step heuristic.
    double dnf = 0.0, dny = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sk = opt.abs_tol + opt.rel_tol * std::abs(y[i]);
      dnf += (k1[i] / sk) * (k1[i] / sk);
      dny += (y[i] / sk) * (y[i] / sk);
    }
    h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
    h = std::min(h, opt.max_step);
    const Vec<N> y1 = axpy(y, h, k1);
    const Vec<N> f1 = f(t0 + h, y1);
    double der2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sk = opt.abs_tol + opt.rel_tol * std::abs(y[i]);
      der2 += ((f1[i] - k1[i]) / sk) * ((f1[i] - k1[i]) / sk);
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
    h = std::min({100.0 * h, h1, opt.max_step});
  }
  h = std::min(h, span);

  double t = t0;
  double facold = 1e-4;
  bool last_rejected = false;
  const double min_step = 16.0 * std::numeric_limits<double>::epsilon();

  while (t < t1) {
    if (stats.accepted + stats.rejected >= opt.max_steps) {
      throw NumericalError("integrate: step budget exhausted at t = " + std::to_string(t), t);
    }
    if (h < min_step * std::max(1.0, std::abs(t))) {
      throw NumericalError("integrate: step size underflow at t = " + std::to_string(t), t);
    }
    bool final_step = false;
    if (t + h >= t1) {
      h = t1 - t;
      final_step = true;
    }

    Vec<N> yt{};
    for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * a21 * k1[i];
    const Vec<N> k2 = f(t + c2 * h, yt);
    for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    const Vec<N> k3 = f(t + c3 * h, yt);
    for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    const Vec<N> k4 = f(t + c4 * h, yt);
    for (std::size_t i = 0; i < N; ++i)
      yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    const Vec<N> k5 = f(t + c5 * h, yt);
    for (std::size_t i = 0; i < N; ++i)
      yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const Vec<N> k6 = f(t + h, yt);
    Vec<N> ynew{};
    for (std::size_t i = 0; i < N; ++i)
      ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    const Vec<N> k7 = f(t + h, ynew);

    double err = 0.0;
    bool finite = all_finite(ynew);
    if (finite) {
      for (std::size_t i = 0; i < N; ++i) {
        const double ei =
            h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double q = ei / scale(y, ynew, i);
        err += q * q;
      }
      err = std::sqrt(err / static_cast<double>(N));
      finite = std::isfinite(err);
    }

    if (!finite) {
      ++stats.rejected;
      h *= 0.1;
      last_rejected = true;
      continue;
    }

    // PI step-size control (Hairer's beta = 0.04).
    const double fac11 = std::pow(err, 0.2 - 0.04 * 0.75);
    double fac = fac11 / std::pow(facold, 0.04);
    fac = std::max(0.1, std::min(5.0, fac / 0.9));
    double hnew = h / fac;

    if (err <= 1.0) {
      facold = std::max(err, 1e-4);
      DenseStep<N> step;
      step.t0 = t;
      step.h = h;
      for (std::size_t i = 0; i < N; ++i) {
        const double ydiff = ynew[i] - y[i];
        const double bspl = h * k1[i] - ydiff;
        step.r[0][i] = y[i];
        step.r[1][i] = ydiff;
        step.r[2][i] = bspl;
        step.r[3][i] = ydiff - h * k7[i] - bspl;
        step.r[4][i] =
            h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      ++stats.accepted;
      t = final_step ? t1 : t + h;
      y = ynew;
      k1 = k7;
      if (!observer(static_cast<const DenseStep<N>&>(step))) {
        stats.stopped_by_observer = true;
        break;
      }
      if (last_rejected) hnew = std::min(hnew, h);
      last_rejected = false;
      h = std::min(hnew, opt.max_step);
    } else {
      ++stats.rejected;
      h = h / std::min(5.0, fac11 / 0.9);
      last_rejected = true;
    }
  }
  stats.t_final = t;
  return stats;
}

/// Integrates and records the full dense trajectory.
template <std::size_t N, class Rhs>
Trajectory<N> integrate(Rhs&& rhs, const Vec<N>& y0, double t0, double t1,
                        const OdeOptions& opt = {}) {
  Trajectory<N> traj(opt.rel_tol, opt.abs_tol);
  integrate_dense<N>(rhs, y0, t0, t1, opt, [&](const DenseStep<N>& s) {
    traj.push(s);
    return true;
  });
  return traj;
}

template <std::size_t N>
struct EventRecord {
  std::size_t id = 0;
  double t = 0.0;
  Vec<N> state{};
  int direction = 0;  // +1 rising, -1 falling
};

template <std::size_t N>
using EventFunction = std::function<double(double, const Vec<N>&)>;

/// Root of g(t) on [a, b] given opposite-signed end values.
template <class G>
double bracketed_root(G&& g, double a, double b, double ga, double gb, double xtol) {
  if (ga == 0.0) return a;
  if (gb == 0.0) return b;
  std::uintmax_t max_iter = 200;
  auto tol = [xtol](double lo, double hi) { return std::abs(hi - lo) <= xtol; };
  const auto r = boost::math::tools::toms748_solve(g, a, b, ga, gb, tol, max_iter);
  return 0.5 * (r.first + r.second);
}

/// Locates sign changes of scalar event functions along the dense output,
/// step by step.
template <std::size_t N>
class EventLocator {
 public:
  EventLocator(std::vector<EventFunction<N>> fns, double time_tol)
      : fns_(std::move(fns)), time_tol_(time_tol), last_(fns_.size(), 0.0) {}

  /// Processes one accepted step; appends located events to `out` in time order.
  void process(const DenseStep<N>& step, std::vector<EventRecord<N>>& out) {
    const std::size_t before = out.size();
    if (!primed_) {
      for (std::size_t j = 0; j < fns_.size(); ++j) last_[j] = fns_[j](step.t0, step.start());
      primed_ = true;
    }
    const double tb = step.t1();
    const Vec<N> yb = step.end();
    for (std::size_t j = 0; j < fns_.size(); ++j) {
      const double ga = last_[j];
      const double gb = fns_[j](tb, yb);
      last_[j] = gb;
      // a zero at the step start was reported with the previous step
      if (ga == 0.0) continue;
      if (gb != 0.0 && (ga < 0.0) == (gb < 0.0)) continue;
      auto g = [&](double t) { return fns_[j](t, step(t)); };
      const double te = bracketed_root(g, step.t0, tb, ga, gb, time_tol_);
      out.push_back(EventRecord<N>{j, te, step(te), gb > ga ? +1 : -1});
    }
    std::sort(out.begin() + static_cast<std::ptrdiff_t>(before), out.end(),
              [](const EventRecord<N>& a, const EventRecord<N>& b) { return a.t < b.t; });
  }

 private:
  std::vector<EventFunction<N>> fns_;
  double time_tol_;
  std::vector<double> last_;
  bool primed_ = false;
};

template <std::size_t N>
struct EventSolution {
  Trajectory<N> trajectory;
  std::vector<EventRecord<N>> events;
};

/// Integrates while locating every sign change of each event function.
/// Event times are resolved to 1e-9 of the span length or better.
template <std::size_t N, class Rhs>
EventSolution<N> detect_events(Rhs&& rhs, const Vec<N>& y0, double t0, double t1,
                               const OdeOptions& opt, std::vector<EventFunction<N>> event_fns) {
  EventSolution<N> sol{Trajectory<N>(opt.rel_tol, opt.abs_tol), {}};
  EventLocator<N> locator(std::move(event_fns), std::max(1e-12, 1e-9 * (t1 - t0)));
  integrate_dense<N>(rhs, y0, t0, t1, opt, [&](const DenseStep<N>& s) {
    sol.trajectory.push(s);
    locator.process(s, sol.events);
    return true;
  });
  return sol;
}

}  // namespace burstlab
