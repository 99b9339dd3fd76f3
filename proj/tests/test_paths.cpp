#include <cmath>

#include <gtest/gtest.h>

#include "burstlab/ode.hpp"
#include "burstlab/paths.hpp"

using namespace burstlab;

namespace {

const EllipsePath kFig4 = EllipsePath::centered(0.15, 5.85, 1.0, 0.0, 0.004);
const EllipsePath kOffAxis{0.2, 5.5, 0.4, 0.05, 5.7, 0.009};

Trajectory<2> integrate_path(const EllipsePath& p, double t1, double tol) {
  OdeOptions opt;
  opt.rel_tol = opt.abs_tol = tol;
  opt.max_step = 10.0;
  return integrate<2>(
      [&](double, const Vec<2>& y) {
        const SlowPoint d = ellipse_rhs({y[0], y[1]}, p);
        return Vec<2>{d.ca, d.na};
      },
      Vec<2>{p.ca0, p.na0}, 0.0, t1, opt);
}

}  // namespace

TEST(EllipsePoint, StartAntipodeAndQuarterTurn) {
  const EllipsePath p = EllipsePath::centered(0.2, 5.5, 0.5, 0.05, 0.01);
  const SlowPoint a = ellipse_point(p, 0.0);
  EXPECT_DOUBLE_EQ(a.ca, p.ca0);
  EXPECT_DOUBLE_EQ(a.na, p.na0);
  const SlowPoint b = ellipse_point(p, M_PI / p.eps);
  EXPECT_NEAR(b.ca, 2 * p.ca_c - p.ca0, 1e-14);
  EXPECT_NEAR(b.na, 2 * p.na_c - p.na0, 1e-14);
  const SlowPoint c = ellipse_point(p, 0.5 * M_PI / p.eps);
  EXPECT_NEAR(c.ca, p.ca_c, 1e-14);
  EXPECT_NEAR(c.na, p.na_c + (p.ca0 - p.ca_c) / p.d, 1e-14);
  EXPECT_DOUBLE_EQ(p.period(), 2 * M_PI / p.eps);
}

TEST(EllipseRhs, CenterSignAndConservation) {
  const EllipsePath p = kOffAxis;
  const SlowPoint z = ellipse_rhs({p.ca_c, p.na_c}, p);
  EXPECT_EQ(z.ca, 0.0);
  EXPECT_EQ(z.na, 0.0);
  const double r = 0.03;
  const SlowPoint e = ellipse_rhs({p.ca_c + r, p.na_c}, p);
  EXPECT_DOUBLE_EQ(e.ca, 0.0);
  EXPECT_DOUBLE_EQ(e.na, p.eps * r / p.d);
  for (double t : {0.0, 17.0, 123.0, 400.0}) {
    const SlowPoint s = ellipse_point(p, t);
    const SlowPoint d = ellipse_rhs(s, p);
    const double dq = 2 * (s.ca - p.ca_c) * d.ca + 2 * p.d * p.d * (s.na - p.na_c) * d.na;
    EXPECT_NEAR(dq, 0.0, 1e-16);
  }
}

TEST(PathExtent, ClosedFormRanges) {
  const PathExtent e4 = path_extent(kFig4);
  EXPECT_DOUBLE_EQ(e4.delta, 0.15);
  EXPECT_NEAR(e4.na_min, 5.70, 1e-12);
  EXPECT_NEAR(e4.na_max, 6.00, 1e-12);
  const PathExtent e3 = path_extent(EllipsePath::centered(0.7, 5.35, 2.0, 0.0, 0.009));
  EXPECT_NEAR(e3.ca_min, 0.0, 1e-15);
  EXPECT_NEAR(e3.ca_max, 1.4, 1e-15);
  const EllipsePath q = EllipsePath::centered(0.3, 5.0, 3.0, 0.1, 0.01);
  EXPECT_DOUBLE_EQ(path_extent(q).delta, std::abs(q.ca0 - q.ca_c));
}

TEST(PathExtent, SampledPointsStayInside) {
  const PathExtent e = path_extent(kOffAxis);
  for (int k = 0; k < 1000; ++k) {
    const SlowPoint s = ellipse_point(kOffAxis, kOffAxis.period() * k / 1000.0);
    EXPECT_GE(s.ca, e.ca_min - 1e-14);
    EXPECT_LE(s.ca, e.ca_max + 1e-14);
    EXPECT_GE(s.na, e.na_min - 1e-14);
    EXPECT_LE(s.na, e.na_max + 1e-14);
  }
}

TEST(EllipsePath, ValidateRejectsDegenerate) {
  EXPECT_THROW(validate(EllipsePath::centered(0.1, 5, 0.0, 0.0, 0.01)), InvalidParameter);
  EXPECT_THROW(validate(EllipsePath::centered(0.1, 5, 1.0, 0.0, 0.0)), InvalidParameter);
  EXPECT_THROW(validate(EllipsePath::centered(0.1, 5, 1.0, 0.1, 0.01)), InvalidParameter);
  EXPECT_NO_THROW(validate(kOffAxis));
}

TEST(EllipseIntegration, ReturnsAndConservesOverOnePeriod) {
  for (const EllipsePath& p : {kFig4, kOffAxis}) {
    const auto traj = integrate_path(p, p.period(), 1e-9);
    const Vec<2> end = traj.state(traj.size() - 1);
    const double q0 = ellipse_invariant({p.ca0, p.na0}, p);
    EXPECT_LT(std::abs(ellipse_invariant({end[0], end[1]}, p) - q0) / q0, 1e-6);
    EXPECT_LT(std::hypot(end[0] - p.ca0, end[1] - p.na0) / std::hypot(p.ca0, p.na0), 1e-6);
    for (int k = 0; k < 100; ++k) {
      const double t = p.period() * k / 100.0;
      const Vec<2> y = traj(t);
      const SlowPoint s = ellipse_point(p, t);
      EXPECT_NEAR(y[0], s.ca, 1e-6);
      EXPECT_NEAR(y[1], s.na, 1e-6);
      EXPECT_LT(std::abs(ellipse_invariant({y[0], y[1]}, p) - q0) / q0, 1e-6);
    }
  }
}
