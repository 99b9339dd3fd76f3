#pragma once

// Conductance-based respiratory bursting neuron: currents, gating functions
// and right-hand sides for the full seven-dimensional model, its
// two-dimensional quasi-steady-state fast reduction, and the slow (Ca, Na)
// equations.
//
// Units throughout: mV, ms, nS, pA, pF, uM (Ca), mM (Na).

#include <cmath>
#include <string>

#include "burstlab/error.hpp"

namespace burstlab {

/// All model constants. Field comments give the unit.
struct ModelParams {
  // conductances (nS)
  double g_L = 3.0;
  double g_Na = 150.0;
  double g_K = 30.0;
  double g_syn = 2.5;
  double g_CAN = 4.0;
  // reversal potentials (mV)
  double E_L = -60.0;
  double E_Na = 85.0;
  double E_K = -75.0;
  double E_syn = 0.0;
  double E_CAN = 0.0;
  // half activations (mV; k_CAN in uM)
  double theta_h = -30.0;
  double theta_m = -36.0;
  double theta_n = -30.0;
  double theta_s = 15.0;
  double k_CAN = 0.9;
  // slopes (mV; sigma_CAN in uM)
  double sigma_h = 5.0;
  double sigma_m = -8.5;
  double sigma_n = -5.0;
  double sigma_s = -3.0;
  double sigma_CAN = -0.05;
  // time constants (ms)
  double t_h = 15.0;
  double t_m = 1.0;
  double t_n = 30.0;
  double tau_s = 15.0;
  // scaling constants
  double k_Na = 10.0;    // mM
  double Na_b = 5.0;     // mM
  double k_Ca = 22.5;    // 1/ms
  double Ca_b = 0.05;    // uM
  double k_IP3 = 1200.0; // uM/ms
  // other
  double C = 45.0;        // pF, membrane capacitance
  double k = 1.0;         // dimensionless
  double r_pump = 200.0;  // pA
  double epsilon = 7e-4;  // Ca rate
  double alpha = 6.6e-5;  // mM/(pA ms)
};

/// Table of the seven-dimensional model.
inline ModelParams full7d_params() { return ModelParams{}; }

/// Parameters of the reduced model: the full set with the reduction's
/// overrides applied.
inline ModelParams reduced4d_params() {
  ModelParams p;
  p.g_K = 15.0;
  p.g_CAN = 10.0;
  p.theta_s = 10.0;
  p.k_CAN = 0.25;
  p.sigma_s = -8.0;
  p.k_Ca = 60.0;
  p.k_IP3 = 1700.0;
  p.k = 10.0;
  p.r_pump = 1500.0;
  p.epsilon = 0.005;
  return p;
}

/// Throws InvalidParameter if a documented invariant is violated.
inline void validate(const ModelParams& p) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidParameter(std::string("invalid model parameter: ") + what);
  };
  require(p.g_L >= 0 && p.g_Na >= 0 && p.g_K >= 0 && p.g_syn >= 0 && p.g_CAN >= 0,
          "conductances must be >= 0");
  require(p.C > 0, "C must be > 0");
  require(p.t_h > 0 && p.t_m > 0 && p.t_n > 0 && p.tau_s > 0, "time constants must be > 0");
  require(p.k_Na > 0, "k_Na must be > 0");
  require(p.k >= 0, "k must be >= 0");
  require(p.sigma_h != 0 && p.sigma_m != 0 && p.sigma_n != 0 && p.sigma_s != 0 &&
              p.sigma_CAN != 0,
          "slopes must be nonzero");
}

/// Point in the slow plane; also the parameter pair of the fast subsystem.
struct SlowPoint {
  double ca = 0.0;  // uM
  double na = 0.0;  // mM

  friend bool operator==(const SlowPoint&, const SlowPoint&) = default;
};

/// Fast state of the seven-dimensional model.
struct FullFastState {
  double v = 0.0;  // mV
  double n = 0.0;
  double m = 0.0;
  double h = 0.0;
  double s = 0.0;
};

/// Fast state of the reduced model.
struct ReducedFastState {
  double v = 0.0;  // mV
  double n = 0.0;
};

namespace detail {

inline double logistic(double v, double theta, double sigma) {
  return 1.0 / (1.0 + std::exp((v - theta) / sigma));
}

inline double logistic_dv(double v, double theta, double sigma) {
  const double x = logistic(v, theta, sigma);
  return -x * (1.0 - x) / sigma;
}

inline double bell_tau(double v, double t_x, double theta, double sigma) {
  return t_x / std::cosh((v - theta) / (2.0 * sigma));
}

}  // namespace detail

/// Steady-state activation 1/(1 + exp((v - theta)/sigma)).
inline double gate_inf(double v, double theta, double sigma) {
  if (sigma == 0.0) throw InvalidParameter("gate_inf: sigma must be nonzero");
  return detail::logistic(v, theta, sigma);
}

/// Voltage-dependent time constant t_x / cosh((v - theta)/(2 sigma)), in ms.
inline double gate_tau(double v, double t_x, double theta, double sigma) {
  if (sigma == 0.0) throw InvalidParameter("gate_tau: sigma must be nonzero");
  if (!(t_x > 0.0)) throw InvalidParameter("gate_tau: t_x must be positive");
  return detail::bell_tau(v, t_x, theta, sigma);
}

/// Constant time constant used for the synaptic gate s.
inline double gate_tau_const(double /*v*/, double tau) {
  if (!(tau > 0.0)) throw InvalidParameter("gate_tau_const: tau must be positive");
  return tau;
}

/// Pump saturation Na^3 / (Na^3 + k_Na^3).
inline double pump_saturation(double na, const ModelParams& p) {
  const double n3 = na * na * na;
  const double k3 = p.k_Na * p.k_Na * p.k_Na;
  return n3 / (n3 + k3);
}

/// CAN activation 1/(1 + exp((Ca - k_CAN)/sigma_CAN)).
inline double can_activation(double ca, const ModelParams& p) {
  return detail::logistic(ca, p.k_CAN, p.sigma_CAN);
}

/// Individual membrane currents in pA.
struct Currents {
  double I_L = 0.0;
  double I_K = 0.0;
  double I_Na = 0.0;
  double I_syn = 0.0;
  double I_CAN = 0.0;
  double I_pump = 0.0;

  double total() const { return I_L + I_K + I_Na + I_syn + I_CAN + I_pump; }
};

inline Currents currents(const FullFastState& x, SlowPoint slow, const ModelParams& p) {
  Currents c;
  const double n2 = x.n * x.n;
  c.I_L = p.g_L * (x.v - p.E_L);
  c.I_K = p.g_K * n2 * n2 * (x.v - p.E_K);
  c.I_Na = p.g_Na * x.m * x.m * x.m * x.h * (x.v - p.E_Na);
  c.I_syn = p.g_syn * x.s * (x.v - p.E_syn);
  c.I_CAN = p.g_CAN * (x.v - p.E_CAN) * can_activation(slow.ca, p);
  c.I_pump = p.r_pump * (pump_saturation(slow.na, p) - pump_saturation(p.Na_b, p));
  return c;
}

/// Quasi-steady value of s: the zero of its relaxation equation.
inline double s_slaved(double v, const ModelParams& p) {
  const double si = detail::logistic(v, p.theta_s, p.sigma_s);
  return si / (si + p.k);
}

/// Embeds a reduced state in the full one: m = m_inf(v), h = 1 - 1.08 n,
/// s at its quasi-steady value.
inline FullFastState embed_reduced(const ReducedFastState& x, const ModelParams& p) {
  return FullFastState{x.v, x.n, detail::logistic(x.v, p.theta_m, p.sigma_m), 1.0 - 1.08 * x.n,
                       s_slaved(x.v, p)};
}

/// Right-hand side of the five fast equations.
inline FullFastState rhs_fast7(const FullFastState& x, SlowPoint slow, const ModelParams& p) {
  using detail::bell_tau;
  using detail::logistic;
  FullFastState d;
  d.v = -currents(x, slow, p).total() / p.C;
  d.n = (logistic(x.v, p.theta_n, p.sigma_n) - x.n) / bell_tau(x.v, p.t_n, p.theta_n, p.sigma_n);
  d.m = (logistic(x.v, p.theta_m, p.sigma_m) - x.m) / bell_tau(x.v, p.t_m, p.theta_m, p.sigma_m);
  d.h = (logistic(x.v, p.theta_h, p.sigma_h) - x.h) / bell_tau(x.v, p.t_h, p.theta_h, p.sigma_h);
  const double si = logistic(x.v, p.theta_s, p.sigma_s);
  d.s = ((1.0 - x.s) * si - p.k * x.s) / p.tau_s;
  return d;
}

/// Right-hand side of the two slow equations (Ca, Na) of the full model.
inline SlowPoint rhs_slow7(const FullFastState& x, SlowPoint slow, const ModelParams& p) {
  const Currents c = currents(x, slow, p);
  return SlowPoint{p.epsilon * (p.k_IP3 * x.s - p.k_Ca * (slow.ca - p.Ca_b)),
                   p.alpha * (-c.I_CAN - c.I_pump)};
}

/// Right-hand side of the reduced two-dimensional fast subsystem.
inline ReducedFastState rhs_fast4(const ReducedFastState& x, SlowPoint slow,
                                  const ModelParams& p) {
  const FullFastState e = embed_reduced(x, p);
  ReducedFastState d;
  d.v = -currents(e, slow, p).total() / p.C;
  d.n = (detail::logistic(x.v, p.theta_n, p.sigma_n) - x.n) /
        detail::bell_tau(x.v, p.t_n, p.theta_n, p.sigma_n);
  return d;
}

/// Row-major 2x2 Jacobian of rhs_fast4 with respect to (v, n).
struct Jacobian2 {
  double vv = 0.0, vn = 0.0;
  double nv = 0.0, nn = 0.0;

  double trace() const { return vv + nn; }
  double det() const { return vv * nn - vn * nv; }
};

/// Analytic Jacobian of the reduced fast subsystem.
inline Jacobian2 jacobian_fast4(const ReducedFastState& x, SlowPoint slow, const ModelParams& p) {
  using detail::logistic;
  using detail::logistic_dv;
  const double v = x.v;
  const double n = x.n;

  const double m = logistic(v, p.theta_m, p.sigma_m);
  const double dm = logistic_dv(v, p.theta_m, p.sigma_m);
  const double h = 1.0 - 1.08 * n;
  const double si = logistic(v, p.theta_s, p.sigma_s);
  const double dsi = logistic_dv(v, p.theta_s, p.sigma_s);
  const double s = si / (si + p.k);
  const double ds = dsi * p.k / ((si + p.k) * (si + p.k));
  const double w = can_activation(slow.ca, p);
  const double n3 = n * n * n;

  const double dI_dv = p.g_L + p.g_K * n3 * n +
                       p.g_Na * (3.0 * m * m * dm * h * (v - p.E_Na) + m * m * m * h) +
                       p.g_syn * (ds * (v - p.E_syn) + s) + p.g_CAN * w;
  const double dI_dn = 4.0 * p.g_K * n3 * (v - p.E_K) - 1.08 * p.g_Na * m * m * m * (v - p.E_Na);

  const double u = (v - p.theta_n) / (2.0 * p.sigma_n);
  const double ninf = logistic(v, p.theta_n, p.sigma_n);
  const double dninf = logistic_dv(v, p.theta_n, p.sigma_n);

  Jacobian2 J;
  J.vv = -dI_dv / p.C;
  J.vn = -dI_dn / p.C;
  J.nv = (dninf * std::cosh(u) + (ninf - n) * std::sinh(u) / (2.0 * p.sigma_n)) / p.t_n;
  J.nn = -std::cosh(u) / p.t_n;
  return J;
}

}  // namespace burstlab
