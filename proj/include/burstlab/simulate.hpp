#pragma once

// Simulation of driven and autonomous systems with SNIC/AH crossing
// detection and spike extraction.

#include <cstddef>
#include <vector>

#include "burstlab/bifurcation.hpp"
#include "burstlab/features.hpp"
#include "burstlab/geometry.hpp"
#include "burstlab/ode.hpp"
#include "burstlab/systems.hpp"

namespace burstlab {

/// The two curves used for crossing detection.
struct CurveSet {
  BifCurve snic;
  BifCurve ah;
};

/// Sweep range wide enough for every preset path, also in Na.
inline ContinuationOptions classification_continuation() {
  ContinuationOptions o;
  o.na_min = 4.0;
  o.na_max = 7.5;
  o.ca_min = -0.3;
  o.ca_max = 1.6;
  return o;
}

template <class Fast>
CurveSet compute_curves(const Fast& fast, const ContinuationOptions& opt = classification_continuation()) {
  CurveSet c{trace_fold_curve(fast, opt), trace_hopf_curve(fast, opt)};
  if (c.snic.size() < 2 || c.ah.size() < 2) {
    throw NumericalError("bifurcation curves could not be traced in the window");
  }
  return c;
}

struct RunOptions {
  OdeOptions ode{};
  SpikeOptions spikes{};
  double settle_periods = 1.0;    // driven: path periods discarded before analysis
  double analysis_periods = 2.0;  // driven: path periods simulated after settling
  double transient = 12000.0;     // ms, autonomous
  double duration = 24000.0;      // ms, autonomous, after the transient
};

namespace detail {

template <class System>
BurstTrace<System::dim> run_with_crossings(const System& sys, const typename System::State& y0,
                                           double t1, const CurveSet& curves,
                                           const RunOptions& opt) {
  constexpr std::size_t N = System::dim;
  const SignedDistance dsnic(curves.snic.points);
  const SignedDistance dah(curves.ah.points);
  std::vector<EventFunction<N>> fns{
      [&](double, const Vec<N>& y) { return dsnic(System::slow_of(y)); },
      [&](double, const Vec<N>& y) { return dah(System::slow_of(y)); }};
  auto rhs = [&](double t, const Vec<N>& y) { return sys.rhs(t, y); };
  auto sol = detect_events<N>(rhs, y0, 0.0, t1, opt.ode, std::move(fns));
  BurstTrace<N> tr;
  tr.trajectory = std::move(sol.trajectory);
  for (const auto& e : sol.events) {
    tr.crossings.push_back(Crossing{e.id == 0 ? CurveKind::Snic : CurveKind::Hopf, e.t, e.direction,
                                    System::slow_of(e.state)});
  }
  tr.spikes = detect_spikes(tr.trajectory, opt.spikes);
  return tr;
}

}  // namespace detail

/// Driven run over settle + analysis path periods, starting at rest at the
/// path's initial point.
template <class Fast>
BurstTrace<Fast::dim + 2> run_driven(const DrivenSystem<Fast>& sys, const CurveSet& curves,
                                     const RunOptions& opt = {}) {
  validate(sys.path);
  const double T = sys.path.period();
  auto tr = detail::run_with_crossings(sys, initial_state(sys),
                                       (opt.settle_periods + opt.analysis_periods) * T, curves, opt);
  tr.imposed_period = T;
  tr.analysis_from = opt.settle_periods * T;
  return tr;
}

/// Autonomous run; cycles are analysed after the transient.
template <class Fast>
BurstTrace<Fast::dim + 2> run_autonomous(const AutonomousSystem<Fast>& sys, const CurveSet& curves,
                                         const RunOptions& opt = {}) {
  auto tr = detail::run_with_crossings(sys, initial_state(sys), opt.transient + opt.duration,
                                       curves, opt);
  tr.analysis_from = opt.transient;
  return tr;
}

}  // namespace burstlab
