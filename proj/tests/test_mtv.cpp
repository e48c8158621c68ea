#include <gtest/gtest.h>

#include "support.hpp"

using namespace mtv;
using fx::N;
using fx::T;

namespace {

HeightList hl(std::initializer_list<std::pair<const char*, double>> items) {
  HeightList out;
  for (const auto& [c, v] : items) out.emplace_back(T(c), v);
  return out;
}

MtvConfig config(DataMorphism alpha, EqualityMeasure eq, int trials = 100, std::uint64_t seed = 1) {
  MtvConfig c;
  c.alpha = std::move(alpha);
  c.eq = std::move(eq);
  c.trials = trials;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(BarOrderEqual, Examples) {
  const auto a = hl({{"X", 2}, {"Y", 3}});
  EXPECT_TRUE(bar_order_equal(a, a, 0));
  EXPECT_FALSE(bar_order_equal(a, hl({{"X", 3}, {"Y", 2}}), 0));
  EXPECT_TRUE(bar_order_equal(hl({{"X", 2}, {"Y", 2.0000001}}), hl({{"X", 3}, {"Y", 2}}), 1e-3));
  // list order does not matter, only categories
  EXPECT_TRUE(bar_order_equal(a, hl({{"Y", 5}, {"X", 1}}), 0));
  EXPECT_THROW(bar_order_equal(a, hl({{"X", 2}, {"Z", 3}}), 0), Error);
  EXPECT_THROW(bar_order_equal(a, hl({{"X", 2}}), 0), Error);
}

TEST(BarOrderEqual, TiesCompatibleWithAnyOrder) {
  const auto tied = hl({{"a", 1}, {"b", 1}, {"c", 5}});
  EXPECT_TRUE(bar_order_equal(tied, hl({{"a", 2}, {"b", 1}, {"c", 9}}), 0));
  EXPECT_TRUE(bar_order_equal(tied, hl({{"a", 1}, {"b", 2}, {"c", 9}}), 0));
  EXPECT_FALSE(bar_order_equal(tied, hl({{"a", 1}, {"b", 2}, {"c", 0}}), 0));
}

TEST(Variance, Examples) {
  const auto base = hl({{"X", 0}, {"Y", 0}});
  std::vector<HeightList> same(5, hl({{"X", 1.1}, {"Y", 2.3}}));
  EXPECT_EQ(variance_of_height_difference(same, base), 0.0);
  std::vector<HeightList> two = {hl({{"X", 0}, {"Y", 1}}), hl({{"X", 0}, {"Y", 3}})};
  EXPECT_DOUBLE_EQ(variance_of_height_difference(two, base), 2.0);
  std::vector<HeightList> one = {hl({{"X", 0}, {"Y", 1}})};
  EXPECT_THROW(variance_of_height_difference(one, base), Error);
}

TEST(Variance, MatchesTextbookFormula) {
  Rng rng(5);
  for (int round = 0; round < 50; ++round) {
    std::vector<HeightList> trials;
    std::vector<double> d;
    const int n = 2 + static_cast<int>(rng.uniform_below(30));
    for (int i = 0; i < n; ++i) {
      const double x = rng.normal(50, 10), y = rng.normal(55, 3);
      trials.push_back(hl({{"X", x}, {"Y", y}}));
      d.push_back(y - x);
    }
    double mean = 0;
    for (double v : d) mean += v;
    mean /= n;
    double ss = 0;
    for (double v : d) ss += (v - mean) * (v - mean);
    EXPECT_NEAR(variance_of_height_difference(trials, hl({{"X", 0}, {"Y", 0}})), ss / (n - 1), 1e-9);
  }
}

TEST(RunSingle, IdentityIsSound) {
  for (const auto& f : fx::corpus()) {
    Rng rng(1);
    const auto rec = run_single(f.spec, f.table, morph::Identity{}, morph::IdentityVisual{}, eq::PixelCount{0}, rng);
    EXPECT_TRUE(rec.applicable) << f.name;
    EXPECT_TRUE(rec.pass) << f.name;
    EXPECT_EQ(rec.diff, 0u) << f.name;
  }
}

TEST(RunSingle, ShuffleOnAggregatedBarsAlwaysPasses) {
  const auto spec = fx::mean_bar_spec();
  const Table t({"category", "value"}, {{T("b"), N(1)}, {T("a"), N(2.5)}, {T("b"), N(7)}});
  // oracle: every permutation of the 3 rows renders the same image
  const auto ref = rasterize(compile(spec, t));
  std::vector<RowIndex> perm = {0, 1, 2};
  do {
    EXPECT_EQ(rasterize(compile(spec, select_rows(t, perm))), ref);
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    EXPECT_TRUE(run_single(spec, t, morph::Shuffle{}, morph::IdentityVisual{}, eq::PixelCount{0}, rng).pass);
  }
}

TEST(RunSingle, ShuffleDetectsOverlappingPoints) {
  const Table t({"x", "y", "g"}, {{N(1), N(1), T("a")}, {N(1), N(1), T("b")}});
  const auto spec = fx::make_spec(MarkKind::Point, fx::quant("x"), fx::quant("y"), fx::nominal("g"));
  // enumerate both draw orders: the images differ exactly on the overlap
  const auto fwd = rasterize(compile(spec, t));
  const auto rev = rasterize(compile(spec, select_rows(t, {1, 0})));
  EXPECT_GT(pixel_diff(fwd, rev), 0u);
  int passes = 0, fails = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng probe(seed);
    const bool swapped = shuffle_rows(t, probe).rows()[0] == t.rows()[1];
    Rng rng(seed);
    const auto rec = run_single(spec, t, morph::Shuffle{}, morph::IdentityVisual{}, eq::PixelCount{0}, rng);
    EXPECT_EQ(rec.pass, !swapped) << seed;
    (rec.pass ? passes : fails) += 1;
  }
  EXPECT_GT(passes, 0);
  EXPECT_GT(fails, 0);
}

TEST(RunSingle, NotApplicable) {
  const auto f = fx::separated_scatter();
  Rng rng(1);
  const auto rec =
      run_single(f.spec, f.table, morph::Shuffle{}, morph::IdentityVisual{}, eq::BarHeightOrder{0}, rng);
  EXPECT_FALSE(rec.applicable);
  EXPECT_FALSE(rec.pass);
  const auto out = run_statistical(config(morph::Shuffle{}, eq::InsightPreserved{"p", "q"}), f.spec, f.table);
  EXPECT_EQ(out.verdict, Verdict::NotApplicable);
  EXPECT_TRUE(out.trials.empty());
  EXPECT_TRUE(to_json(out)["pass_fraction"].is_null());
}

TEST(RunStatistical, ShuffleOnSortedBarsIsExact) {
  Rng gen(3);
  const Table t = sim::generate_baseline(gen);
  const auto out = run_statistical(config(morph::Shuffle{}, eq::PixelCount{0}), sim::two_bar_spec(), t);
  EXPECT_EQ(out.pass_fraction, 1.0);
  EXPECT_EQ(out.verdict, Verdict::Pass);
  ASSERT_EQ(out.trials.size(), 100u);
  EXPECT_EQ(out.height_diff_variance, 0.0);
}

TEST(RunStatistical, PassFractionAndVerdict) {
  const auto f = fx::overlapping_scatter();
  auto c = config(morph::Shuffle{}, eq::PixelCount{0}, 60);
  const auto out = run_statistical(c, f.spec, f.table);
  std::size_t passes = 0;
  for (const auto& t : out.trials) passes += t.pass;
  EXPECT_DOUBLE_EQ(out.pass_fraction, static_cast<double>(passes) / 60.0);
  EXPECT_EQ(out.verdict, out.pass_fraction >= 0.95 ? Verdict::Pass : Verdict::Fail);
  c.pass_threshold = 0.0;
  EXPECT_EQ(run_statistical(c, f.spec, f.table).verdict, Verdict::Pass);
}

TEST(RunStatistical, SeedReproducible) {
  Rng gen(8);
  const auto q = sim::generate_quartet(gen);
  const auto c = config(morph::Bootstrap{"category", "value"}, eq::BarHeightOrder{0}, 40, 77);
  const auto a = to_json(run_statistical(c, sim::two_bar_spec(), q.b)).dump();
  const auto b = to_json(run_statistical(c, sim::two_bar_spec(), q.b)).dump();
  EXPECT_EQ(a, b);
  auto c2 = c;
  c2.seed = 78;
  EXPECT_NE(to_json(run_statistical(c2, sim::two_bar_spec(), q.b)).dump(), a);
}

TEST(RunStatistical, TrialsIndependentOfRunLength) {
  // per-trial seeds: the first 10 trials of a 10-trial run equal those of a 30-trial run
  Rng gen(8);
  const auto q = sim::generate_quartet(gen);
  const auto short_run =
      run_statistical(config(morph::Bootstrap{"category", "value"}, eq::BarHeightOrder{0}, 10), sim::two_bar_spec(), q.b);
  const auto long_run =
      run_statistical(config(morph::Bootstrap{"category", "value"}, eq::BarHeightOrder{0}, 30), sim::two_bar_spec(), q.b);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(short_run.trials[i].heights, long_run.trials[i].heights);
}

TEST(RunStatistical, QuartetAOutranksB) {
  Rng gen(2);
  const auto q = sim::generate_quartet(gen);
  const auto c = config(morph::Bootstrap{"category", "value"}, eq::InsightPreserved{"Y", "X"});
  const auto a = run_statistical(c, sim::two_bar_spec(), q.a);
  const auto b = run_statistical(c, sim::two_bar_spec(), q.b);
  EXPECT_GT(a.pass_fraction, b.pass_fraction);
}

TEST(RunStatistical, InsightCategoriesMustExist) {
  const auto c = config(morph::Bootstrap{"category", "value"}, eq::InsightPreserved{"Y", "Q"});
  EXPECT_THROW(run_statistical(c, fx::mean_bar_spec(), fx::xxy_table()), Error);
}

TEST(RunStatistical, ConfigChecks) {
  auto c = config(morph::Shuffle{}, eq::PixelCount{0}, 0);
  EXPECT_THROW(run_statistical(c, fx::mean_bar_spec(), fx::xxy_table()), Error);
  c.trials = 1;
  c.pass_threshold = 1.5;
  EXPECT_THROW(run_statistical(c, fx::mean_bar_spec(), fx::xxy_table()), Error);
}

TEST(OpacityRelation, NoOverlapPassesOverlapFails) {
  auto c = config(morph::Identity{}, eq::PixelCount{0, 1}, 1);
  c.omega = morph::OpacityScale{0.5};
  const auto sep = fx::separated_scatter();
  EXPECT_EQ(run_statistical(c, sep.spec, sep.table).pass_fraction, 1.0);
  EXPECT_EQ(run_statistical(c, fx::mean_bar_spec(), fx::xxy_table()).pass_fraction, 1.0);

  // any two overlapping opaque marks break it
  const Table two({"x", "y"}, {{N(1), N(1)}, {N(1), N(1)}});
  const auto spec = fx::make_spec(MarkKind::Point, fx::quant("x"), fx::quant("y"));
  EXPECT_EQ(run_statistical(c, spec, two).pass_fraction, 0.0);
  const auto unagg = fx::unaggregated_bars();
  EXPECT_EQ(run_statistical(c, unagg.spec, unagg.table).pass_fraction, 0.0);
}

TEST(MonotoneThreshold, PixelAndChi2) {
  const auto f = fx::overlapping_scatter();
  const std::vector<std::size_t> px_steps = {0, 1, 10, 40, 100, 1000};
  const std::vector<double> chi_steps = {0.0, 1.0, 10.0, 100.0, 1e4};
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    bool passed = false;
    for (std::size_t t : px_steps) {
      Rng rng(seed);
      const bool p =
          run_single(f.spec, f.table, morph::Shuffle{}, morph::IdentityVisual{}, eq::PixelCount{t}, rng).pass;
      EXPECT_TRUE(p || !passed) << "seed " << seed << " threshold " << t;
      passed = passed || p;
    }
    passed = false;
    for (double t : chi_steps) {
      Rng rng(seed);
      const bool p =
          run_single(f.spec, f.table, morph::Shuffle{}, morph::IdentityVisual{}, eq::Chi2Histogram{t}, rng).pass;
      EXPECT_TRUE(p || !passed) << "seed " << seed << " threshold " << t;
      passed = passed || p;
    }
  }
}

TEST(Serialization, OutcomeSchema) {
  const auto out = run_statistical(config(morph::Bootstrap{"category", "value"}, eq::BarHeightOrder{0}, 3),
                                   fx::mean_bar_spec(), fx::xxy_table());
  const auto j = to_json(out);
  for (const char* key : {"verdict", "pass_fraction", "height_diff_variance", "baseline_heights", "config", "seed",
                          "trials"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["config"]["alpha"]["name"], "bootstrap");
  EXPECT_EQ(j["config"]["eq"]["name"], "bar-height-order");
  EXPECT_EQ(j["trials"].size(), 3u);
  EXPECT_TRUE(j["trials"][0].contains("heights"));
}
