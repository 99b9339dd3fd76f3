#pragma once

// Fast subsystems with (Ca, Na) frozen as parameters. Both adaptors expose
// the same surface so equilibrium, bifurcation and landscape code is written
// once as templates.

#include <array>
#include <cstddef>
#include <string_view>

#include "burstlab/model.hpp"
#include "burstlab/vec.hpp"

namespace burstlab {

template <std::size_t N>
using Mat = std::array<std::array<double, N>, N>;

/// Two-dimensional reduced fast subsystem, state (v, n).
struct ReducedFast {
  static constexpr std::size_t dim = 2;
  static constexpr std::string_view name = "reduced";
  using State = Vec<2>;

  ModelParams params = reduced4d_params();

  State rhs(const State& x, SlowPoint slow) const {
    const ReducedFastState d = rhs_fast4({x[0], x[1]}, slow, params);
    return {d.v, d.n};
  }

  Mat<2> jacobian(const State& x, SlowPoint slow) const {
    const Jacobian2 J = jacobian_fast4({x[0], x[1]}, slow, params);
    return {{{J.vv, J.vn}, {J.nv, J.nn}}};
  }

  /// Gate variables at their voltage-slaved fixed points.
  State slaved(double v) const { return {v, detail::logistic(v, params.theta_n, params.sigma_n)}; }
};

/// Five-dimensional fast subsystem of the full model, state (v, n, m, h, s).
struct FullFast {
  static constexpr std::size_t dim = 5;
  static constexpr std::string_view name = "full";
  using State = Vec<5>;

  /// Step of the centered finite-difference Jacobian.
  static constexpr double kJacobianStep = 1e-6;

  ModelParams params = full7d_params();

  State rhs(const State& x, SlowPoint slow) const {
    const FullFastState d = rhs_fast7({x[0], x[1], x[2], x[3], x[4]}, slow, params);
    return {d.v, d.n, d.m, d.h, d.s};
  }

  Mat<5> jacobian(const State& x, SlowPoint slow) const {
    Mat<5> J{};
    for (std::size_t j = 0; j < dim; ++j) {
      State xp = x;
      State xm = x;
      xp[j] += kJacobianStep;
      xm[j] -= kJacobianStep;
      const State fp = rhs(xp, slow);
      const State fm = rhs(xm, slow);
      for (std::size_t i = 0; i < dim; ++i) J[i][j] = (fp[i] - fm[i]) / (2.0 * kJacobianStep);
    }
    return J;
  }

  State slaved(double v) const {
    const ModelParams& p = params;
    return {v, detail::logistic(v, p.theta_n, p.sigma_n), detail::logistic(v, p.theta_m, p.sigma_m),
            detail::logistic(v, p.theta_h, p.sigma_h), s_slaved(v, p)};
  }
};

/// Voltage equation evaluated on the curve of slaved gates; its zeros in v
/// are exactly the equilibria of the fast subsystem.
template <class Fast>
double slaved_voltage_rate(const Fast& fast, double v, SlowPoint slow) {
  return fast.rhs(fast.slaved(v), slow)[0];
}

}  // namespace burstlab
