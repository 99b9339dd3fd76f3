#include <sstream>

#include <gtest/gtest.h>

#include "burstlab/config.hpp"

using namespace burstlab;

namespace {

RunConfig from(const std::string& text) { return build_config(parse_key_values(text)); }

}  // namespace

TEST(KeyValues, SectionsCommentsAndWhitespace) {
  const auto kv = parse_key_values(
      "model = driven4d  # trailing comment\n"
      "\n"
      "[path]\n"
      "ca_c = 0.15\n"
      "  d=2\n"
      "[sim]\n"
      "rel_tol = 1e-9\n");
  ASSERT_EQ(kv.size(), 4u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"model", "driven4d"}));
  EXPECT_EQ(kv[1].first, "path.ca_c");
  EXPECT_EQ(kv[2], (std::pair<std::string, std::string>{"path.d", "2"}));
  EXPECT_EQ(kv[3].first, "sim.rel_tol");
  EXPECT_THROW(parse_key_values("just words\n"), UsageError);
}

TEST(KeyValues, AssignmentsAndLists) {
  EXPECT_EQ(parse_assignment("path.d=0.5"), (std::pair<std::string, std::string>{"path.d", "0.5"}));
  EXPECT_THROW(parse_assignment("nothing"), UsageError);
  EXPECT_EQ(parse_list("0, 100", "t"), (std::vector<double>{0, 100}));
  EXPECT_EQ(parse_list("1;2;3", "t"), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(split_names("ca_c, d ,eps"), (std::vector<std::string>{"ca_c", "d", "eps"}));
}

TEST(BuildConfig, DrivenPathAndOverrides) {
  const RunConfig c = from(
      "model = driven4d\n"
      "path.ca_c = 0.15\npath.na_c = 5.85\npath.d = 1\npath.ca0 = 0\npath.eps = 0.004\n"
      "params.g_L = 2.9\n"
      "sim.t_span = 0, 500\n"
      "fit.free = d, ca0\n"
      "fit.bounds.d = 0.5, 3\n"
      "fit.weights.isi = 2\n");
  ASSERT_TRUE(c.path);
  EXPECT_EQ(c.path->na0, 5.85);
  EXPECT_EQ(c.params.g_L, 2.9);
  EXPECT_EQ(c.params.g_K, reduced4d_params().g_K);
  EXPECT_EQ(c.t0, 0.0);
  EXPECT_EQ(c.t1, 500.0);
  ASSERT_EQ(c.fit.free.size(), 2u);
  EXPECT_EQ(c.fit.free[0].which, PathParam::D);
  EXPECT_EQ(c.fit.free[0].lo, 0.5);
  EXPECT_EQ(c.fit.free[0].hi, 3.0);
  EXPECT_EQ(c.fit.free[1].lo, default_bounds(PathParam::Ca0).first);
  EXPECT_EQ(c.fit.weights.isi, 2.0);
}

TEST(BuildConfig, ModelSelectsPresetAndLaterKeysWin) {
  const RunConfig full = from("params.g_K = 5\nmodel = full7d\n");
  EXPECT_EQ(full.params.epsilon, full7d_params().epsilon);
  EXPECT_EQ(full.params.g_K, 5.0);
  const RunConfig twice = from("model = reduced4d\nsim.rel_tol = 1e-6\nsim.rel_tol = 1e-9\n");
  EXPECT_EQ(twice.run.ode.rel_tol, 1e-9);
  EXPECT_THROW(from("params.preset = other\n"), UsageError);
  EXPECT_THROW(from("model = driven9d\n"), UsageError);
}

TEST(BuildConfig, UnknownKeysAreListedTogether) {
  try {
    from("model = reduced4d\nfoo = 1\nparams.g_X = 2\nfit.weights.nope = 1\n");
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("foo"), std::string::npos) << m;
    EXPECT_NE(m.find("params.g_X"), std::string::npos) << m;
    EXPECT_NE(m.find("fit.weights.nope"), std::string::npos) << m;
  }
}

TEST(BuildConfig, InvalidCombinations) {
  EXPECT_THROW(from("model = driven4d\n"), UsageError);
  EXPECT_THROW(from("model = reduced4d\nsim.t_span = 10, 10\n"), UsageError);
  EXPECT_THROW(from("model = reduced4d\nsim.t_span = 10\n"), UsageError);
  EXPECT_THROW(from("model = reduced4d\nfit.free = d\nfit.bounds.eps = 0.001, 0.01\n"), UsageError);
  EXPECT_THROW(from("model = driven4d\npath.ca_c = 0.1\npath.ca0 = 0.1\npath.eps = 0.01\n"), InvalidParameter);
  EXPECT_THROW(from("model = reduced4d\nparams.C = 0\n"), InvalidParameter);
  EXPECT_THROW(from("model = reduced4d\nsim.rel_tol = abc\n"), UsageError);
}

TEST(BuildConfig, StreamWithOverrides) {
  std::istringstream is("model = reduced4d\nsim.transient = 100\n");
  const RunConfig c = load_config(is, {{"sim.transient", "200"}});
  EXPECT_EQ(c.run.transient, 200.0);
}

TEST(Presets, CaptionParameters) {
  const auto f3 = figure_preset("fig3");
  EXPECT_EQ(f3.model, ModelKind::Driven7d);
  ASSERT_EQ(f3.variants.size(), 3u);
  EXPECT_EQ(f3.variants[0].path, EllipsePath::centered(0.7, 5.35, 0.5, 0.0, 0.009));
  EXPECT_EQ(f3.variants[2].path.d, 20.0);
  const auto f4 = figure_preset("fig4");
  EXPECT_EQ(f4.model, ModelKind::Driven4d);
  EXPECT_EQ(f4.variants[0].path, EllipsePath::centered(0.15, 5.85, 0.2, 0.0, 0.004));
  EXPECT_EQ(f4.variants[2].path.d, 50.0);
  const auto f5 = figure_preset("fig5");
  EXPECT_EQ(f5.variants[1].path, EllipsePath::centered(0.15, 5.85, 0.1, 0.0, 0.006));
  const auto f6 = figure_preset("fig6");
  EXPECT_EQ(f6.variants[0].path, EllipsePath::centered(0.15, 5.2, 0.1, 0.0, 0.009));
  EXPECT_EQ(f6.variants[1].path, EllipsePath::centered(0.1, 5.1, 1.0, -0.1, 0.009));
  EXPECT_EQ(f6.field, FieldKind::Period);
  const auto f7 = figure_preset("fig7");
  EXPECT_EQ(f7.variants[1].path, EllipsePath::centered(0.19, 5.75, 0.2, 0.04, 0.004));
  EXPECT_EQ(f7.levels.size(), 15u);
  EXPECT_EQ(figure_preset("fig1").model, ModelKind::Full7d);
  EXPECT_EQ(figure_preset("fig2").model, ModelKind::Reduced4d);
  EXPECT_THROW(figure_preset("fig8"), UsageError);
  EXPECT_EQ(figure_names().size(), 7u);
}

TEST(Presets, FreshCopyEveryTime) {
  auto a = figure_preset("fig4");
  a.variants[0].path.d = 99;
  a.levels.push_back(1);
  EXPECT_EQ(figure_preset("fig4").variants[0].path.d, 0.2);
  EXPECT_TRUE(figure_preset("fig4").levels.empty());
  EXPECT_EQ(RunConfig{}.params.g_K, reduced4d_params().g_K);
}

TEST(ModelKind, RoundTripAndTraits) {
  for (ModelKind m : {ModelKind::Full7d, ModelKind::Reduced4d, ModelKind::Driven7d, ModelKind::Driven4d}) {
    EXPECT_EQ(model_kind_from_string(to_string(m)), m);
  }
  EXPECT_TRUE(is_driven(ModelKind::Driven7d));
  EXPECT_FALSE(is_driven(ModelKind::Full7d));
  EXPECT_TRUE(uses_full_fast(ModelKind::Driven7d));
  EXPECT_FALSE(uses_full_fast(ModelKind::Driven4d));
}
