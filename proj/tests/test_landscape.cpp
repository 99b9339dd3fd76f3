#include <cmath>
#include <optional>
#include <sstream>

#include <gtest/gtest.h>

#include "burstlab/landscape.hpp"
#include "oracles.hpp"

using namespace burstlab;

namespace {

ScalarField analytic(const GridSpec& g, double (*f)(double, double)) {
  return evaluate_field(FieldKind::ReLambda, g, [f](SlowPoint s) -> std::optional<double> { return f(s.ca, s.na); }, 1);
}

GridSpec grid(double lo, double hi, int n) {
  GridSpec g;
  g.ca_min = g.na_min = lo;
  g.ca_max = g.na_max = hi;
  g.n_ca = g.n_na = n;
  return g;
}

struct Curves {
  BifCurve fold, hopf;
};

const Curves& reduced_curves() {
  static const Curves c = [] {
    const ReducedFast fast;
    ContinuationOptions o;
    o.ca_min = -0.1;
    o.ca_max = 1.2;
    return Curves{trace_fold_curve(fast, o), trace_hopf_curve(fast, o)};
  }();
  return c;
}

}  // namespace

TEST(Contours, VerticalLineForLinearField) {
  const auto f = analytic(grid(0, 1, 11), [](double x, double) { return x; });
  const auto c = extract_contours(f, {0.5});
  ASSERT_EQ(c.lines.size(), 1u);
  const auto& pts = c.lines[0].points;
  ASSERT_EQ(pts.size(), 11u);
  double lo = 1, hi = 0;
  for (const auto& p : pts) {
    EXPECT_NEAR(p.ca, 0.5, 1e-12);
    lo = std::min(lo, p.na);
    hi = std::max(hi, p.na);
  }
  EXPECT_DOUBLE_EQ(lo, 0.0);
  EXPECT_DOUBLE_EQ(hi, 1.0);
  EXPECT_FALSE(c.lines[0].closed);
}

TEST(Contours, UnitCircleWithinOneCellDiagonal) {
  const GridSpec g = grid(-1.5, 1.5, 41);
  const auto f = analytic(g, [](double x, double y) { return x * x + y * y; });
  const auto c = extract_contours(f, {1.0});
  ASSERT_EQ(c.lines.size(), 1u);
  EXPECT_TRUE(c.lines[0].closed);
  EXPECT_GT(c.lines[0].points.size(), 40u);
  for (const auto& p : c.lines[0].points) EXPECT_LT(std::abs(std::hypot(p.ca, p.na) - 1.0), g.cell_diagonal());
}

TEST(Contours, ConstantFieldGivesNothing) {
  const auto f = analytic(grid(0, 1, 5), [](double, double) { return 2.0; });
  EXPECT_TRUE(extract_contours(f, {1.0, 3.0}).lines.empty());
}

TEST(Contours, UndefinedCellsAreSkipped) {
  ScalarField f = analytic(grid(0, 1, 11), [](double x, double) { return x; });
  for (int j = 0; j < 11; ++j) f.values[std::size_t(j) * 11 + 5].reset();  // column x = 0.5
  const auto c = extract_contours(f, {0.45, 0.8});
  EXPECT_EQ(c.count(0.45), 0u);
  EXPECT_EQ(c.count(0.8), 1u);
}

TEST(Contours, LinesGroupedInLevelOrder) {
  const auto f = analytic(grid(0, 1, 21), [](double x, double y) { return x + 0.1 * y; });
  const std::vector<double> levels{0.7, 0.2, 0.5};
  const auto c = extract_contours(f, levels);
  EXPECT_EQ(c.levels, levels);
  ASSERT_EQ(c.lines.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(c.lines[k].level, levels[k]);
}

TEST(Contours, CsvLayout) {
  const auto f = analytic(grid(0, 1, 3), [](double x, double) { return x; });
  std::ostringstream os;
  write_contours_csv(os, extract_contours(f, {0.25}));
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "level,segment,ca,na");
  std::getline(is, line);
  EXPECT_EQ(line.substr(0, 7), "0.25,0,");
}

TEST(Field, ConstantStubGivesEqualNodes) {
  const auto f = analytic(grid(0, 1, 7), [](double, double) { return 4.5; });
  ASSERT_EQ(f.values.size(), 49u);
  for (const auto& v : f.values) EXPECT_EQ(v, std::optional<double>(4.5));
}

TEST(Field, ThrowingNodesBecomeUndefined) {
  const auto f = evaluate_field(FieldKind::Period, grid(0, 1, 4), [](SlowPoint s) -> std::optional<double> {
    if (s.ca > 0.5) throw NumericalError("boom", 0.0);
    return 1.0;
  }, 2);
  EXPECT_EQ(f.defined_count(), 8u);
}

TEST(Field, IndependentOfThreadCount) {
  const ReducedFast fast;
  GridSpec g;
  g.n_ca = 9;
  g.n_na = 7;
  const auto a = build_field(FieldKind::ReLambda, g, fast, 1);
  const auto b = build_field(FieldKind::ReLambda, g, fast, 4);
  EXPECT_EQ(a.values, b.values);
  std::ostringstream sa, sb;
  write_field_csv(sa, a);
  write_field_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Field, RejectsDegenerateGrid) {
  GridSpec g;
  g.n_ca = 1;
  EXPECT_THROW(validate(g), InvalidParameter);
  g = GridSpec{};
  g.ca_max = g.ca_min;
  EXPECT_THROW(validate(g), InvalidParameter);
  EXPECT_THROW(uniform_levels(0, 1, 0), InvalidParameter);
}

TEST(Field, CsvUsesEmptyCellForUndefined) {
  ScalarField f = analytic(grid(0, 1, 2), [](double x, double) { return x; });
  f.values[1].reset();
  std::ostringstream os;
  write_field_csv(os, f);
  EXPECT_EQ(os.str(), "ca,na,value\n0,0,0\n1,0,\n0,1,0\n1,1,1\n");
}

TEST(Relambda, ZeroOnHopfAndSignedAround) {
  const ReducedFast fast;
  for (double na : {5.0, 5.5, 6.0}) {
    const double ca = oracle::ca_at(reduced_curves().hopf, na);
    const auto on = relambda(fast, {ca, na});
    ASSERT_TRUE(on);
    EXPECT_LT(std::abs(*on), 1e-6);
    EXPECT_LT(*relambda(fast, {ca + 0.03, na}), 0.0);
    EXPECT_GT(*relambda(fast, {ca - 0.03, na}), 0.0);
  }
}

TEST(Relambda, MatchesOracleOnLevelContour) {
  const ReducedFast fast;
  const double na = 5.5;
  const double hopf = oracle::ca_at(reduced_curves().hopf, na);
  const double ca = oracle::relambda_level_ca(na, hopf, hopf + 0.3, -0.05, true);
  ASSERT_TRUE(std::isfinite(ca));
  const auto r = relambda(fast, {ca, na});
  ASSERT_TRUE(r);
  EXPECT_NEAR(*r, -0.05, 1e-4);
}

TEST(Relambda, ZeroContourFollowsHopfCurve) {
  const ReducedFast fast;
  GridSpec g;
  g.n_ca = g.n_na = 41;
  const auto f = build_field(FieldKind::ReLambda, g, fast);
  const auto c = extract_contours(f, {0.0});
  ASSERT_FALSE(c.lines.empty());
  for (const auto& l : c.lines) {
    for (const auto& p : l.points) {
      EXPECT_LT(oracle::distance_to(reduced_curves().hopf.points, p), g.cell_diagonal()) << p.ca << ", " << p.na;
    }
  }
}

TEST(Relambda, RefinementMovesContoursLessThanCoarseCell) {
  const ReducedFast fast;
  GridSpec coarse;
  coarse.n_ca = coarse.n_na = 31;
  GridSpec fine = coarse;
  fine.n_ca = fine.n_na = 61;
  const double level = -0.02;
  const auto cc = extract_contours(build_field(FieldKind::ReLambda, coarse, fast), {level});
  const auto cf = extract_contours(build_field(FieldKind::ReLambda, fine, fast), {level});
  ASSERT_FALSE(cc.lines.empty());
  ASSERT_FALSE(cf.lines.empty());
  for (const auto& l : cf.lines) {
    for (const auto& p : l.points) {
      double d = INFINITY;
      for (const auto& m : cc.lines) d = std::min(d, oracle::distance_to(m.points, p));
      EXPECT_LT(d, coarse.cell_diagonal());
    }
  }
}

TEST(Relambda, UniformLevelsAllPresentInOrder) {
  const ReducedFast fast;
  GridSpec g;
  g.n_ca = g.n_na = 61;
  const auto levels = uniform_levels(-0.05, 0.09, 15);
  ASSERT_EQ(levels.size(), 15u);
  EXPECT_DOUBLE_EQ(levels[1] - levels[0], 0.01);
  const auto c = extract_contours(build_field(FieldKind::ReLambda, g, fast), levels);
  EXPECT_EQ(c.levels, levels);
  std::size_t k = 0;
  for (const auto& l : c.lines) {
    while (k < levels.size() && levels[k] != l.level) ++k;
    ASSERT_LT(k, levels.size()) << "lines out of level order";
  }
  for (double lv : levels) EXPECT_GE(c.count(lv), 1u) << lv;
}

TEST(Period, DefinedBetweenCurvesOnly) {
  const ReducedFast fast;
  const double na = 5.5;
  const double fold = oracle::ca_at(reduced_curves().fold, na);
  const double hopf = oracle::ca_at(reduced_curves().hopf, na);
  const auto mid = orbit_period(fast, {0.5 * (fold + hopf), na});
  ASSERT_TRUE(mid.period) << mid.diagnostic;
  EXPECT_GT(*mid.period, 0.0);
  const auto right = orbit_period(fast, {hopf + 0.02, na});
  EXPECT_FALSE(right.period);
  EXPECT_FALSE(right.diagnostic.empty());
  const auto left = orbit_period(fast, {fold - 0.02, na});
  EXPECT_FALSE(left.period);
}

TEST(Period, GrowsTowardFold) {
  const ReducedFast fast;
  const double na = 5.2;
  const double fold = oracle::ca_at(reduced_curves().fold, na);
  std::vector<double> periods;
  for (double off : {0.04, 0.03, 0.02, 0.01, 0.005}) {
    const auto r = orbit_period(fast, {fold + off, na}, snic_period_options());
    ASSERT_TRUE(r.period) << off << ": " << r.diagnostic;
    periods.push_back(*r.period);
  }
  for (std::size_t i = 1; i < periods.size(); ++i) EXPECT_GT(periods[i], periods[i - 1]);
  EXPECT_GT(periods.back(), 40.0);
}
