#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "burstlab/config.hpp"
#include "burstlab/features.hpp"
#include "burstlab/simulate.hpp"

using namespace burstlab;

namespace {

const CurveSet& reduced_curves() {
  static const CurveSet c = compute_curves(ReducedFast{});
  return c;
}

EllipsePath fig4(std::size_t k) { return figure_preset("fig4").variants.at(k).path; }

BurstTrace<4> run(const EllipsePath& path, double tol = 1e-8) {
  RunOptions opt;
  opt.ode.rel_tol = opt.ode.abs_tol = tol;
  return run_driven(DrivenSystem<ReducedFast>{ReducedFast{}, path}, reduced_curves(), opt);
}

Crossing cross(CurveKind k, double t, int dir) { return Crossing{k, t, dir, {}}; }

std::vector<Crossing> db_sequence(double offset) {
  return {cross(CurveKind::Snic, offset + 10, +1), cross(CurveKind::Hopf, offset + 30, +1),
          cross(CurveKind::Hopf, offset + 50, -1), cross(CurveKind::Snic, offset + 70, -1)};
}

FeatureVector sample_features() {
  FeatureVector f;
  f.period = 1570.8;
  f.first_spike_delay = 12.5;
  f.isi = {40, 30, 22, 18, 15};
  f.amp_min = 12;
  f.amp_max = 28;
  f.ah_gap = 300;
  f.stage_ii_spikes = 6;
  f.stage_v_spikes = 2;
  f.deepest_hyperpolarization = -63;
  f.stage_durations = {900, 200, 120, 180, 170, 40};
  return f;
}

}  // namespace

TEST(Spikes, ConstantBelowThresholdHasNone) {
  const std::vector<double> t{0, 1, 2, 3, 4}, v(5, -60.0);
  EXPECT_TRUE(detect_spikes(t, v).empty());
}

TEST(Spikes, OnePerPeriodOfSine) {
  std::vector<double> t, v;
  for (double x = -1.0; x < 20 * M_PI - 1.0; x += 1e-3) {
    t.push_back(x);
    v.push_back(30 * std::sin(x));
  }
  const auto s = detect_spikes(t, v, {0.0, 1.0, 0.0});
  ASSERT_EQ(s.size(), 10u);
  for (std::size_t k = 0; k < s.size(); ++k) {
    EXPECT_NEAR(s[k].t, M_PI / 2 + 2 * M_PI * double(k), 1e-3);
    EXPECT_NEAR(s[k].peak, 30.0, 1e-5);
    if (k > 0) {
      EXPECT_GT(s[k].t, s[k - 1].t);
    }
  }
}

TEST(Spikes, RefractoryMergesCloseCrossings) {
  // two bumps whose onsets are 1 ms apart, separated by a dip below re-arm
  const std::vector<double> t{0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 10};
  const std::vector<double> v{-60, 0, -40, 10, -60, -60, -60, -60, -60};
  EXPECT_EQ(detect_spikes(t, v, {-20, 0.0, 5}).size(), 2u);
  const auto merged = detect_spikes(t, v, {-20, 2.0, 5});
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_EQ(merged[0].peak, 10);
}

TEST(Spikes, HysteresisIgnoresChatterAtThreshold) {
  const std::vector<double> t{0, 1, 2, 3, 4, 5, 6, 7};
  const std::vector<double> v{-60, -19, -21, -19, -22, 5, -60, -60};
  EXPECT_EQ(detect_spikes(t, v, {-20, 0.0, 5}).size(), 1u);
  EXPECT_EQ(detect_spikes(t, v, {-20, 0.0, 0}).size(), 3u);
  EXPECT_THROW(detect_spikes(t, v, {-20, -1.0, 5}), InvalidParameter);
}

TEST(Crossings, DbCycleFromSyntheticSequence) {
  auto cs = db_sequence(0);
  const auto more = db_sequence(100);
  cs.insert(cs.end(), more.begin(), more.end());
  double end = 0;
  const auto c = find_db_cycle(cs, 0.0, std::nullopt, &end);
  EXPECT_EQ(c[0].t, 10);
  EXPECT_EQ(c[3].t, 70);
  EXPECT_EQ(end, 110);
  const auto d = find_db_cycle(cs, 0.0, 100.0, &end);
  EXPECT_EQ(d[2].t, 50);
  EXPECT_EQ(end, 110);
}

TEST(Crossings, NonDbSequenceNamesWhatWasSeen) {
  std::vector<Crossing> cs{cross(CurveKind::Snic, 10, +1), cross(CurveKind::Snic, 40, -1),
                           cross(CurveKind::Snic, 110, +1)};
  try {
    find_db_cycle(cs, 0.0, std::nullopt, nullptr);
    FAIL() << "expected ClassificationError";
  } catch (const ClassificationError& e) {
    EXPECT_NE(std::string(e.what()).find("SNIC+ SNIC-"), std::string::npos) << e.what();
  }
  try {
    find_db_cycle({}, 0.0, 100.0, nullptr);
    FAIL() << "expected ClassificationError";
  } catch (const ClassificationError& e) {
    EXPECT_NE(std::string(e.what()).find("(no crossings)"), std::string::npos) << e.what();
  }
}

TEST(Stages, PartitionOneCycle) {
  BurstTrace<4> tr;
  tr.crossings = db_sequence(0);
  tr.imposed_period = 100.0;
  tr.spikes = {{12, 10, 11}, {20, 10, 19}, {35, 5, 34}, {55, 0, 54}, {72, 0, 71}};
  const Segmentation s = segment_stages(tr);
  EXPECT_EQ(s.period(), 100.0);
  double total = 0;
  for (Stage st : {Stage::I, Stage::II, Stage::III, Stage::IV, Stage::V}) {
    EXPECT_GE(s[st].duration(), 0.0);
    total += s[st].duration();
  }
  EXPECT_DOUBLE_EQ(total, 100.0);
  EXPECT_EQ(s[Stage::II].begin, 10);
  EXPECT_EQ(s[Stage::III].end, 35);
  EXPECT_EQ(s[Stage::IV].end, 50);
  EXPECT_EQ(s[Stage::V].end, 70);
  EXPECT_EQ(s[Stage::VI].end, 72);
  const FeatureVector f = burst_features(tr, s);
  EXPECT_EQ(f.stage_ii_spikes, 2);
  EXPECT_EQ(f.isi, std::vector<double>{8});
  EXPECT_EQ(f.stage_v_spikes, 1);
  EXPECT_EQ(f.first_spike_delay, 2);
  EXPECT_EQ(f.ah_gap, 20);
}

TEST(Driven, PathLeftOfFoldIsNotDb) {
  const auto tr = run(EllipsePath::centered(-0.1, 5.5, 1.0, -0.05, 0.01));
  std::string observed;
  EXPECT_FALSE(is_db(tr, &observed));
  EXPECT_NE(observed.find("(no crossings)"), std::string::npos) << observed;
  EXPECT_THROW(segment_stages(tr), ClassificationError);
}

TEST(Driven, PeriodIsImposedAndFeaturesConsistent) {
  const EllipsePath path = fig4(1);
  const auto tr = run(path);
  ASSERT_TRUE(is_db(tr));
  const FeatureVector f = burst_features(tr);
  EXPECT_EQ(f.period, 2 * M_PI / path.eps);
  EXPECT_EQ(int(f.isi.size()), f.stage_ii_spikes - 1);
  EXPECT_GT(f.stage_ii_spikes, 5);
  EXPECT_GE(f.first_spike_delay, 0.0);
  EXPECT_GT(f.ah_gap, 0.0);
  EXPECT_LT(f.deepest_hyperpolarization, -50.0);
  for (double d : f.stage_durations) EXPECT_GE(d, 0.0);
  for (std::size_t k = 1; k < tr.spikes.size(); ++k) EXPECT_GT(tr.spikes[k].t, tr.spikes[k - 1].t);
}

TEST(Driven, SpikeCountsStableUnderToleranceHalving) {
  const auto a = burst_features(run(fig4(1), 1e-8));
  const auto b = burst_features(run(fig4(1), 5e-9));
  EXPECT_EQ(a.stage_ii_spikes, b.stage_ii_spikes);
  EXPECT_EQ(a.stage_v_spikes, b.stage_v_spikes);
}

TEST(Driven, TallPathSpendsLittleTimeRightOfHopf) {
  // the stretch right of AH sets the approach to and release from block
  const auto f = burst_features(run(fig4(2)));
  EXPECT_LT(f.ah_gap, f.stage_durations[std::size_t(Stage::II)]);
  EXPECT_LT(f.stage_durations[std::size_t(Stage::IV)], 0.1 * f.stage_durations[std::size_t(Stage::II)]);
}

TEST(Distance, IdentitySymmetryAndWeightDoubling) {
  const FeatureVector a = sample_features();
  FeatureVector b = a;
  EXPECT_EQ(feature_distance(a, a), 0.0);
  b.period += 100;
  b.isi = {35, 20, 10};
  b.ah_gap -= 50;
  EXPECT_GT(feature_distance(a, b), 0.0);
  EXPECT_EQ(feature_distance(a, b), feature_distance(b, a));

  FeatureWeights w;
  const double base = std::pow(feature_distance(a, b, w), 2);
  FeatureWeights only;
  only.period = only.first_spike_delay = only.isi = only.amplitude = only.ah_gap = only.hyperpolarization = 0;
  only.isi = 1;
  const double isi = std::pow(feature_distance(a, b, only), 2);
  w.isi = 2;
  EXPECT_NEAR(std::pow(feature_distance(a, b, w), 2), base + isi, 1e-12 * base);
}

TEST(Distance, SpikeCountsIgnoredByDefault) {
  const FeatureVector a = sample_features();
  FeatureVector b = a;
  b.stage_v_spikes = 7;
  EXPECT_EQ(feature_distance(a, b), 0.0);
  FeatureWeights w;
  w.spike_counts = 1;
  EXPECT_DOUBLE_EQ(feature_distance(a, b, w), 5.0);
}

TEST(Distance, MissingOnOneSideCostsOne) {
  const FeatureVector a = sample_features();
  FeatureVector b = a;
  b.first_spike_delay = std::nan("");
  EXPECT_DOUBLE_EQ(feature_distance(a, b), 1.0);
  b = a;
  b.isi.clear();
  EXPECT_DOUBLE_EQ(feature_distance(a, b), 1.0);
  FeatureWeights w;
  w.period = -1;
  EXPECT_THROW(feature_distance(a, a, w), InvalidParameter);
}

TEST(Distance, ResampleInterpolatesIndexCurve) {
  EXPECT_EQ(resample_sequence({1, 3}, 3), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(resample_sequence({5}, 4), (std::vector<double>{5, 5, 5, 5}));
  EXPECT_TRUE(resample_sequence({}, 4).empty());
}

TEST(FeaturesCsv, RoundTrip) {
  FeatureVector a = sample_features();
  a.first_spike_delay = std::nan("");
  a.isi.push_back(1.0 / 3.0);
  std::stringstream ss;
  write_features_header(ss);
  write_features_row(ss, a);
  const FeatureVector b = read_features_csv(ss);
  EXPECT_EQ(b.period, a.period);
  EXPECT_TRUE(std::isnan(b.first_spike_delay));
  EXPECT_EQ(b.isi, a.isi);
  EXPECT_EQ(b.stage_ii_spikes, a.stage_ii_spikes);
  EXPECT_EQ(b.stage_v_spikes, a.stage_v_spikes);
  EXPECT_EQ(b.stage_durations, a.stage_durations);
  EXPECT_EQ(feature_distance(a, b), 0.0);
  std::stringstream bad("period\n1\n");
  EXPECT_THROW(read_features_csv(bad), UsageError);
}
