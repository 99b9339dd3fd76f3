#pragma once

// Full systems assembled from a fast subsystem and slow dynamics: either the
// model's own (Ca, Na) equations or an imposed elliptic path. State layout is
// the fast state followed by (Ca, Na).

#include <cstddef>
#include <string_view>

#include "burstlab/bifurcation.hpp"
#include "burstlab/fast_system.hpp"
#include "burstlab/paths.hpp"

namespace burstlab {

namespace detail {

inline SlowPoint model_slow_rhs(const ReducedFast& f, const Vec<2>& x, SlowPoint slow) {
  return rhs_slow7(embed_reduced({x[0], x[1]}, f.params), slow, f.params);
}

inline SlowPoint model_slow_rhs(const FullFast& f, const Vec<5>& x, SlowPoint slow) {
  return rhs_slow7({x[0], x[1], x[2], x[3], x[4]}, slow, f.params);
}

}  // namespace detail

/// Fast subsystem coupled to the model's slow equations.
template <class Fast>
struct AutonomousSystem {
  static constexpr std::size_t fast_dim = Fast::dim;
  static constexpr std::size_t dim = Fast::dim + 2;
  using State = Vec<dim>;

  Fast fast{};

  static SlowPoint slow_of(const State& y) { return {y[dim - 2], y[dim - 1]}; }

  State rhs(double /*t*/, const State& y) const {
    typename Fast::State x{};
    for (std::size_t i = 0; i < fast_dim; ++i) x[i] = y[i];
    const SlowPoint s = slow_of(y);
    const auto fx = fast.rhs(x, s);
    const SlowPoint ds = detail::model_slow_rhs(fast, x, s);
    State d{};
    for (std::size_t i = 0; i < fast_dim; ++i) d[i] = fx[i];
    d[dim - 2] = ds.ca;
    d[dim - 1] = ds.na;
    return d;
  }
};

/// Fast subsystem driven by an imposed ellipse.
template <class Fast>
struct DrivenSystem {
  static constexpr std::size_t fast_dim = Fast::dim;
  static constexpr std::size_t dim = Fast::dim + 2;
  using State = Vec<dim>;

  Fast fast{};
  EllipsePath path{};

  static SlowPoint slow_of(const State& y) { return {y[dim - 2], y[dim - 1]}; }

  State rhs(double /*t*/, const State& y) const {
    typename Fast::State x{};
    for (std::size_t i = 0; i < fast_dim; ++i) x[i] = y[i];
    const SlowPoint s = slow_of(y);
    const auto fx = fast.rhs(x, s);
    const SlowPoint ds = ellipse_rhs(s, path);
    State d{};
    for (std::size_t i = 0; i < fast_dim; ++i) d[i] = fx[i];
    d[dim - 2] = ds.ca;
    d[dim - 1] = ds.na;
    return d;
  }
};

/// Initial state at a slow point: the lowest stable equilibrium if there is
/// one, otherwise gates slaved to `fallback_v`.
template <class Fast>
Vec<Fast::dim + 2> rest_state(const Fast& fast, SlowPoint slow, double fallback_v = -60.0) {
  typename Fast::State x = fast.slaved(fallback_v);
  const auto eqs = find_equilibria(fast, slow);
  if (!eqs.empty() && eqs.front().stable) x = eqs.front().state;
  Vec<Fast::dim + 2> y{};
  for (std::size_t i = 0; i < Fast::dim; ++i) y[i] = x[i];
  y[Fast::dim] = slow.ca;
  y[Fast::dim + 1] = slow.na;
  return y;
}

template <class Fast>
Vec<Fast::dim + 2> initial_state(const DrivenSystem<Fast>& sys) {
  return rest_state(sys.fast, {sys.path.ca0, sys.path.na0});
}

/// Standard start for autonomous runs: base calcium, baseline-plus-half sodium.
template <class Fast>
Vec<Fast::dim + 2> initial_state(const AutonomousSystem<Fast>& sys) {
  const ModelParams& p = sys.fast.params;
  return rest_state(sys.fast, {p.Ca_b, p.Na_b + 0.5});
}

}  // namespace burstlab
