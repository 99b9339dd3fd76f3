#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "burstlab/bifurcation.hpp"
#include "burstlab/fast_system.hpp"
#include "burstlab/model.hpp"
#include "burstlab/ode.hpp"
#include "burstlab/params_io.hpp"

using namespace burstlab;

namespace {

std::string read_file(const std::string& name) {
  std::ifstream in(std::string(BURSTLAB_TEST_DATA) + "/" + name);
  EXPECT_TRUE(in.good()) << name;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(GateInf, MidpointAndLogisticValue) {
  EXPECT_DOUBLE_EQ(gate_inf(-30, -30, -5), 0.5);
  EXPECT_NEAR(gate_inf(-25, -30, -5), 0.731059, 1e-6);
  EXPECT_NEAR(gate_inf(-25, -30, -5), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_DOUBLE_EQ(gate_inf(-30, -30, 5), 0.5);
}

TEST(GateInf, MonotoneDirectionFollowsSlopeSign) {
  EXPECT_GT(gate_inf(-20, -30, -5), gate_inf(-40, -30, -5));
  EXPECT_LT(gate_inf(-20, -30, 5), gate_inf(-40, -30, 5));
}

TEST(GateInf, ZeroSlopeIsRejected) {
  EXPECT_THROW(gate_inf(0, 0, 0), InvalidParameter);
  EXPECT_THROW(gate_tau(0, 1, 0, 0), InvalidParameter);
  EXPECT_THROW(gate_tau(0, 0, 0, 1), InvalidParameter);
}

TEST(GateTau, MaximumSymmetryAndValue) {
  EXPECT_DOUBLE_EQ(gate_tau(-30, 30, -30, -5), 30.0);
  EXPECT_DOUBLE_EQ(gate_tau(-30 + 7, 30, -30, -5), gate_tau(-30 - 7, 30, -30, -5));
  EXPECT_NEAR(gate_tau(-20, 30, -30, -5), 19.44, 2e-3);
  EXPECT_NEAR(gate_tau(-20, 30, -30, -5), 30.0 / std::cosh(-1.0), 1e-13);
  EXPECT_DOUBLE_EQ(gate_tau_const(-50, 15), 15.0);
}

TEST(Currents, TrivialZeros) {
  const ModelParams p = full7d_params();
  const FullFastState x{p.E_L, 0.3, 0.2, 0.5, 0.1};
  EXPECT_DOUBLE_EQ(currents(x, {0.1, 5.5}, p).I_L, 0.0);
  EXPECT_DOUBLE_EQ(currents(x, {0.1, p.Na_b}, p).I_pump, 0.0);
  EXPECT_DOUBLE_EQ(pump_saturation(p.k_Na, p), 0.5);
}

TEST(RhsFast7, RelaxationFixedPoints) {
  const ModelParams p = full7d_params();
  const double v = -42.0;
  FullFastState x{v, gate_inf(v, p.theta_n, p.sigma_n), gate_inf(v, p.theta_m, p.sigma_m),
                  gate_inf(v, p.theta_h, p.sigma_h), 0.0};
  const double si = gate_inf(v, p.theta_s, p.sigma_s);
  x.s = si / (si + p.k);
  const FullFastState d = rhs_fast7(x, {0.3, 5.5}, p);
  EXPECT_DOUBLE_EQ(d.n, 0.0);
  EXPECT_DOUBLE_EQ(d.m, 0.0);
  EXPECT_DOUBLE_EQ(d.h, 0.0);
  EXPECT_NEAR(d.s, 0.0, 1e-18);
}

TEST(RhsSlow7, AlgebraicBalances) {
  const ModelParams p = full7d_params();
  FullFastState x{-50, 0.1, 0.1, 0.6, 0.02};
  const double ca_eq = p.Ca_b + p.k_IP3 * x.s / p.k_Ca;
  EXPECT_NEAR(rhs_slow7(x, {ca_eq, 5.5}, p).ca, 0.0, 1e-15);
  x.s = 0.0;
  EXPECT_DOUBLE_EQ(rhs_slow7(x, {p.Ca_b, 5.5}, p).ca, 0.0);
  // Na' vanishes where I_CAN = -I_pump: choose v so that the two cancel
  FullFastState y{-50, 0.1, 0.1, 0.6, 0.0};
  const SlowPoint s{0.3, 6.0};
  const Currents c0 = currents(y, s, p);
  y.v = p.E_CAN - c0.I_pump / (p.g_CAN * can_activation(s.ca, p));
  EXPECT_NEAR(rhs_slow7(y, s, p).na, 0.0, 1e-15);
}

TEST(RhsFast4, SubstitutionIdentityOnRandomSamples) {
  const ModelParams p = reduced4d_params();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> v(-90, 40), n(0, 1), ca(-0.2, 1.6), na(4.5, 6.5);
  for (int k = 0; k < 1000; ++k) {
    const ReducedFastState x{v(rng), n(rng)};
    const SlowPoint s{ca(rng), na(rng)};
    const double si = gate_inf(x.v, p.theta_s, p.sigma_s);
    const FullFastState e{x.v, x.n, gate_inf(x.v, p.theta_m, p.sigma_m), 1.0 - 1.08 * x.n, si / (si + p.k)};
    const ReducedFastState d4 = rhs_fast4(x, s, p);
    const FullFastState d7 = rhs_fast7(e, s, p);
    ASSERT_EQ(d4.v, d7.v) << k;
    ASSERT_EQ(d4.n, d7.n) << k;
  }
}

TEST(RhsFast4, NFixedPoint) {
  const ModelParams p = reduced4d_params();
  const double v = -33.0;
  EXPECT_DOUBLE_EQ(rhs_fast4({v, gate_inf(v, p.theta_n, p.sigma_n)}, {0.2, 5.5}, p).n, 0.0);
}

TEST(Jacobian4, MatchesCenteredDifferences) {
  const ModelParams p = reduced4d_params();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> v(-80, 20), n(0.05, 0.8), ca(-0.1, 1.2), na(4.8, 6.4);
  const double h = 1e-5;
  for (int k = 0; k < 200; ++k) {
    const ReducedFastState x{v(rng), n(rng)};
    const SlowPoint s{ca(rng), na(rng)};
    const Jacobian2 J = jacobian_fast4(x, s, p);
    const auto fv = [&](double dv, double dn) { return rhs_fast4({x.v + dv, x.n + dn}, s, p); };
    const double vv = (fv(h, 0).v - fv(-h, 0).v) / (2 * h), nv = (fv(h, 0).n - fv(-h, 0).n) / (2 * h);
    const double vn = (fv(0, h).v - fv(0, -h).v) / (2 * h), nn = (fv(0, h).n - fv(0, -h).n) / (2 * h);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    EXPECT_LT(rel(J.vv, vv), 1e-6);
    EXPECT_LT(rel(J.vn, vn), 1e-6);
    EXPECT_LT(rel(J.nv, nv), 1e-6);
    EXPECT_LT(rel(J.nn, nn), 1e-6);
  }
}

TEST(GateBox, ForwardInvariance) {
  const FullFast fast;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1), v(-80, 20), ca(-0.2, 1.6), na(4.5, 6.5);
  OdeOptions opt;
  opt.rel_tol = opt.abs_tol = 1e-6;
  for (int k = 0; k < 10000; ++k) {
    const Vec<5> y0{v(rng), u(rng), u(rng), u(rng), u(rng)};
    const SlowPoint s{ca(rng), na(rng)};
    double lo = 1.0, hi = 0.0;
    integrate_dense<5>([&](double, const Vec<5>& y) { return fast.rhs(y, s); }, y0, 0.0, 500.0, opt,
                       [&](const DenseStep<5>& st) {
                         for (int j = 1; j <= 4; ++j) {
                           const Vec<5> y = st(st.t0 + st.h * j / 4.0);
                           for (int i = 1; i < 5; ++i) {
                             lo = std::min(lo, y[i]);
                             hi = std::max(hi, y[i]);
                           }
                         }
                         return true;
                       });
    ASSERT_GE(lo, -1e-6) << k;
    ASSERT_LE(hi, 1.0 + 1e-6) << k;
  }
}

TEST(Presets, GoldenFilesExactRoundTrip) {
  const std::string full = read_file("full7d.params");
  const std::string reduced = read_file("reduced4d.params");
  EXPECT_EQ(params_to_text(full7d_params()), full);
  EXPECT_EQ(params_to_text(reduced4d_params()), reduced);
  EXPECT_EQ(params_to_text(params_from_text(full)), full);
  EXPECT_EQ(params_to_text(params_from_text(reduced)), reduced);
}

TEST(Presets, ReducedDiffersInExactlyTheTabulatedFields) {
  const ModelParams a = full7d_params(), b = reduced4d_params();
  std::vector<std::string> diff;
  for (const auto& f : kParamFields) {
    if (a.*(f.member) != b.*(f.member)) diff.emplace_back(f.name);
  }
  const std::vector<std::string> expected{"g_K", "g_CAN", "theta_s", "k_CAN", "sigma_s",
                                          "k_Ca", "k_IP3", "k", "r_pump", "epsilon"};
  EXPECT_EQ(diff, expected);
}

TEST(Params, SeventeenDigitRoundTrip) {
  ModelParams p = full7d_params();
  p.g_L = 0.1 + 0.2;
  p.alpha = 1.0 / 3.0;
  const ModelParams q = params_from_text(params_to_text(p));
  EXPECT_EQ(q.g_L, p.g_L);
  EXPECT_EQ(q.alpha, p.alpha);
}

TEST(Params, UnknownNameAndBadValue) {
  EXPECT_THROW(params_from_text("g_X = 1\n"), UsageError);
  EXPECT_THROW(params_from_text("g_L = abc\n"), UsageError);
  EXPECT_THROW(params_from_text("g_L 3\n"), UsageError);
}

TEST(Params, ValidateRejectsBadDomains) {
  ModelParams p;
  p.C = 0;
  EXPECT_THROW(validate(p), InvalidParameter);
  p = ModelParams{};
  p.g_K = -1;
  EXPECT_THROW(validate(p), InvalidParameter);
  p = ModelParams{};
  p.sigma_n = 0;
  EXPECT_THROW(validate(p), InvalidParameter);
  EXPECT_NO_THROW(validate(reduced4d_params()));
}

TEST(Equilibria, FullSystemResidualBelowTolerance) {
  const FullFast fast;
  for (SlowPoint s : {SlowPoint{0.3, 5.0}, SlowPoint{0.7, 5.35}, SlowPoint{1.2, 6.0}}) {
    const auto eqs = find_equilibria(fast, s);
    ASSERT_FALSE(eqs.empty());
    for (const auto& e : eqs) {
      const Vec<5> r = fast.rhs(e.state, s);
      for (double ri : r) EXPECT_LT(std::abs(ri), 1e-10);
    }
  }
}
