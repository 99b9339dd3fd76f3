#pragma once

// Period of the attracting periodic orbit of a fast subsystem by direct
// simulation and averaging of upward voltage crossings.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "burstlab/fast_system.hpp"
#include "burstlab/ode.hpp"

namespace burstlab {

struct PeriodOptions {
  double seed_v = -20.0;       // mV, gates slaved to this voltage
  double transient = 500.0;    // ms
  double measure = 400.0;      // ms
  double level = -20.0;        // mV, reference crossing level
  int gaps = 5;                // number of trailing gaps averaged
  double spread_tol = 1e-3;    // (max - min)/mean over those gaps
  double amplitude_tol = 1e-2; // relative drift of the swing over those gaps
  OdeOptions ode{1e-8, 1e-8, 1.0, 0.0, 100'000'000};
};

struct PeriodResult {
  std::optional<double> period;  // ms
  int crossings = 0;
  double spread = 0.0;
  double amplitude = 0.0;        // mV, peak-to-trough swing of the last cycle
  double amplitude_drift = 0.0;  // relative change of the swing over the averaged cycles
  std::string diagnostic;
};

namespace detail {

template <class Fast>
PeriodResult measure_period_once(const Fast& fast, SlowPoint slow, const PeriodOptions& opt,
                                 double transient) {
  constexpr std::size_t N = Fast::dim;
  auto rhs = [&](double, const Vec<N>& x) { return fast.rhs(x, slow); };

  std::vector<double> times;
  std::vector<double> swings;  // swing of the cycle ending at times[k], k >= 1
  double vmin = std::numeric_limits<double>::infinity();
  double vmax = -vmin;
  std::vector<EventRecord<N>> events;
  EventLocator<N> locator({[&](double, const Vec<N>& x) { return x[0] - opt.level; }}, 1e-10);
  const std::size_t wanted = static_cast<std::size_t>(opt.gaps) + 1;

  integrate_dense<N>(rhs, fast.slaved(opt.seed_v), 0.0, transient + opt.measure, opt.ode,
                     [&](const DenseStep<N>& step) {
                       events.clear();
                       locator.process(step, events);
                       std::size_t e = 0;
                       constexpr int kSub = 4;
                       for (int j = 1; j <= kSub; ++j) {
                         const double t = step.t0 + step.h * j / kSub;
                         // close cycles at crossings that precede this sample
                         for (; e < events.size() && events[e].t <= t; ++e) {
                           if (events[e].direction <= 0 || events[e].t < transient) continue;
                           if (!times.empty()) swings.push_back(vmax - vmin);
                           times.push_back(events[e].t);
                           vmin = vmax = opt.level;
                         }
                         const double v = step.component(t, 0);
                         vmin = std::min(vmin, v);
                         vmax = std::max(vmax, v);
                       }
                       return times.size() < wanted;
                     });

  PeriodResult res;
  res.crossings = static_cast<int>(times.size());
  if (times.size() < 3) {
    res.diagnostic = "fewer than 3 upward crossings of the reference level";
    return res;
  }
  std::vector<double> gaps;
  for (std::size_t i = 1; i < times.size(); ++i) gaps.push_back(times[i] - times[i - 1]);
  if (gaps.size() > static_cast<std::size_t>(opt.gaps)) {
    gaps.erase(gaps.begin(), gaps.end() - opt.gaps);
  }
  const double mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) / double(gaps.size());
  const auto [lo, hi] = std::minmax_element(gaps.begin(), gaps.end());
  res.spread = (*hi - *lo) / mean;
  const std::size_t m = gaps.size();
  res.amplitude = swings.back();
  res.amplitude_drift = std::abs(swings.back() - swings[swings.size() - m]) / swings.back();
  if (res.spread >= opt.spread_tol) {
    res.diagnostic = "crossing gaps not converged (spread " + std::to_string(res.spread) + ")";
  } else if (res.amplitude_drift >= opt.amplitude_tol) {
    res.diagnostic = "oscillation amplitude still drifting (" + std::to_string(res.amplitude_drift) + ")";
  } else {
    res.period = mean;
  }
  return res;
}

}  // namespace detail

/// Period (ms) of the attractor reached from the standard seed, or empty
/// when it is a steady state or the gaps fail to settle after one retry
/// with a doubled transient.
template <class Fast>
PeriodResult orbit_period(const Fast& fast, SlowPoint slow, const PeriodOptions& opt = {}) {
  PeriodResult r = detail::measure_period_once(fast, slow, opt, opt.transient);
  if (!r.period && r.crossings >= 3) {
    r = detail::measure_period_once(fast, slow, opt, 2.0 * opt.transient);
    if (!r.period) r.diagnostic += " after retry with doubled transient";
  }
  return r;
}

}  // namespace burstlab
