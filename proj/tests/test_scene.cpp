#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "support.hpp"

using namespace mtv;
using fx::N;
using fx::T;

TEST(AggregateGroups, MeanCountSum) {
  const Table t = fx::xxy_table();
  auto mean = aggregate_groups(t, "category", "value", Aggregate::Mean);
  ASSERT_EQ(mean.size(), 2u);
  EXPECT_EQ(mean[0].category, T("X"));
  EXPECT_EQ(mean[0].value, 2.0);
  EXPECT_EQ(mean[0].provenance, (std::vector<RowIndex>{0, 1}));
  EXPECT_EQ(mean[1].category, T("Y"));
  EXPECT_EQ(mean[1].value, 2.0);
  EXPECT_EQ(mean[1].provenance, (std::vector<RowIndex>{2}));

  auto count = aggregate_groups(t, "category", "value", Aggregate::Count);
  EXPECT_EQ(count[0].value, 2.0);
  EXPECT_EQ(count[1].value, 1.0);

  auto sum = aggregate_groups(t, "category", "value", Aggregate::Sum);
  EXPECT_EQ(sum[0].value, 4.0);
  EXPECT_EQ(sum[1].value, 2.0);
}

TEST(AggregateGroups, NullCategoryIsOwnGroupSortedLast) {
  const Table t({"k", "v"}, {{Value::null(), N(5)}, {T("b"), N(1)}, {T("a"), N(2)}, {Value::null(), N(7)}});
  auto g = aggregate_groups(t, "k", "v", Aggregate::Sum);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g[2].category.label(), kNullLabel);
  EXPECT_EQ(g[2].value, 12.0);
  EXPECT_EQ(g[2].provenance, (std::vector<RowIndex>{0, 3}));
}

TEST(AggregateGroups, DegenerateGroup) {
  const Table t({"k", "v"}, {{T("a"), Value::null()}, {T("b"), N(1)}});
  auto g = aggregate_groups(t, "k", "v", Aggregate::Mean);
  EXPECT_TRUE(g[0].degenerate());
  EXPECT_EQ(g[0].record_count, 1u);
  EXPECT_FALSE(g[1].degenerate());
  // count is never degenerate
  EXPECT_EQ(aggregate_groups(t, "k", "v", Aggregate::Count)[0].value, 1.0);
}

TEST(AggregateGroups, SortOrders) {
  const Table t({"k", "v"}, {{T("b"), N(1)}, {T("c"), N(3)}, {T("a"), N(2)}, {T("d"), Value::null()}});
  auto labels = [](const std::vector<GroupSummary>& g) {
    std::vector<std::string> out;
    for (const auto& s : g) out.push_back(s.category.label());
    return out;
  };
  EXPECT_EQ(labels(aggregate_groups(t, "k", "v", Aggregate::Sum, SortOrder::ByCategoryAscending)),
            (std::vector<std::string>{"a", "b", "c", "d"}));
  EXPECT_EQ(labels(aggregate_groups(t, "k", "v", Aggregate::Sum, SortOrder::ByValueDescending)),
            (std::vector<std::string>{"c", "a", "b", "d"}));
  EXPECT_EQ(labels(aggregate_groups(t, "k", "v", Aggregate::Sum, SortOrder::None)),
            (std::vector<std::string>{"b", "c", "a", "d"}));
}

TEST(QuantitativeDomain, Rules) {
  EXPECT_EQ(quantitative_domain({2, 5}, true), (std::pair<double, double>{0, 5}));
  EXPECT_EQ(quantitative_domain({-2, -5}, true), (std::pair<double, double>{-5, 0}));
  const auto [lo, hi] = quantitative_domain({10, 20}, false);
  EXPECT_DOUBLE_EQ(lo, 9.5);
  EXPECT_DOUBLE_EQ(hi, 20.5);
  EXPECT_EQ(quantitative_domain({3, 3}, false), (std::pair<double, double>{2, 4}));
  EXPECT_EQ(quantitative_domain({0, 0}, true), (std::pair<double, double>{-1, 1}));
}

TEST(Compile, PointsOnePerRowInRowOrder) {
  const Table t({"x", "y"}, {{N(1), N(1)}, {N(2), N(3)}, {N(3), N(2)}});
  const auto scene = compile(fx::make_spec(MarkKind::Point, fx::quant("x"), fx::quant("y")), t);
  ASSERT_EQ(scene.marks.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(scene.marks[i].draw_order, i);
    EXPECT_EQ(scene.marks[i].provenance, (std::vector<RowIndex>{static_cast<RowIndex>(i)}));
  }
  EXPECT_TRUE(scene.groups.empty());
}

TEST(Compile, EqualMeansGiveEqualBars) {
  const auto scene = compile(fx::mean_bar_spec(), fx::xxy_table());
  ASSERT_EQ(scene.marks.size(), 2u);
  const auto& a = std::get<RectGeom>(scene.marks[0].geometry);
  const auto& b = std::get<RectGeom>(scene.marks[1].geometry);
  EXPECT_EQ(a.y1 - a.y0, b.y1 - b.y0);
  EXPECT_EQ(a.y0, b.y0);
  EXPECT_GT(a.y1 - a.y0, 0);
  EXPECT_LT(a.x1, b.x0);  // bands do not touch
}

TEST(Compile, TallerMeanGivesTallerBar) {
  const auto scene = compile(fx::mean_bar_spec(), fx::two_groups({1, 2}, {4, 4}));
  const auto& x = std::get<RectGeom>(scene.marks[0].geometry);
  const auto& y = std::get<RectGeom>(scene.marks[1].geometry);
  EXPECT_GT(y.y1 - y.y0, x.y1 - x.y0);
  EXPECT_EQ(x.y1, y.y1);  // shared baseline
}

TEST(Compile, EmptyTableHasAxesButNoMarks) {
  const auto scene = compile(fx::mean_bar_spec(), Table({"category", "value"}, {}));
  EXPECT_TRUE(scene.marks.empty());
  EXPECT_FALSE(scene.axes.empty());
  EXPECT_TRUE(bar_heights(scene).empty());
}

TEST(Compile, RejectsInvalidSpec) {
  EXPECT_THROW(compile(fx::mean_bar_spec("nope"), fx::xxy_table()), SpecError);
}

TEST(Compile, MarksInsideCanvas) {
  for (const auto& f : fx::corpus()) {
    const auto scene = compile(f.spec, f.table);
    std::set<int> orders;
    for (const auto& m : scene.marks) {
      orders.insert(m.draw_order);
      std::visit(
          [&](const auto& g) {
            using G = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<G, RectGeom>) {
              EXPECT_GE(g.x0, 0) << f.name;
              EXPECT_GE(g.y0, 0) << f.name;
              EXPECT_LE(g.x1, scene.width) << f.name;
              EXPECT_LE(g.y1, scene.height) << f.name;
            } else if constexpr (std::is_same_v<G, CircleGeom>) {
              EXPECT_GE(g.cx, 0) << f.name;
              EXPECT_LT(g.cx, scene.width) << f.name;
              EXPECT_GE(g.cy, 0) << f.name;
              EXPECT_LT(g.cy, scene.height) << f.name;
            } else {
              for (int v : {g.x0, g.x1}) EXPECT_TRUE(v >= 0 && v < scene.width) << f.name;
              for (int v : {g.y0, g.y1}) EXPECT_TRUE(v >= 0 && v < scene.height) << f.name;
            }
          },
          m.geometry);
    }
    EXPECT_EQ(orders.size(), scene.marks.size()) << f.name << ": draw orders not unique";
  }
}

TEST(Compile, LineSegmentsPerSeries) {
  const Table t({"t", "y", "s"}, {{N(2), N(1), T("a")}, {N(1), N(2), T("a")}, {N(3), N(0), T("a")},
                                  {N(1), N(5), T("b")}, {N(2), N(5), T("b")}});
  const auto scene = compile(fx::make_spec(MarkKind::Line, fx::quant("t"), fx::quant("y"), fx::nominal("s")), t);
  // 3 points -> 2 segments, 2 points -> 1 segment
  ASSERT_EQ(scene.marks.size(), 3u);
  for (const auto& m : scene.marks) EXPECT_EQ(m.kind, MarkShape::LineSegment);
  // segments within a series follow x, not row order
  const auto& s0 = std::get<SegmentGeom>(scene.marks[0].geometry);
  const auto& s1 = std::get<SegmentGeom>(scene.marks[1].geometry);
  EXPECT_LT(s0.x0, s0.x1);
  EXPECT_EQ(s0.x1, s1.x0);
}

TEST(BarHeights, Examples) {
  const auto h = bar_heights(compile(fx::mean_bar_spec(), fx::xxy_table()));
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h[0], (std::pair<Value, double>{T("X"), 2.0}));
  EXPECT_EQ(h[1], (std::pair<Value, double>{T("Y"), 2.0}));
}

TEST(BarHeights, RequiresAggregatedBar) {
  const auto f = fx::unaggregated_bars();
  try {
    bar_heights(compile(f.spec, f.table));
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "bar_heights requires aggregated bar chart");
  }
  const auto s = fx::separated_scatter();
  EXPECT_THROW(bar_heights(compile(s.spec, s.table)), Error);
}

TEST(BarHeights, QuartetFixtureA) {
  Rng rng(11);
  const auto q = sim::generate_quartet(rng);
  const auto h = bar_heights(compile(sim::two_bar_spec(), q.a));
  ASSERT_EQ(h.size(), 2u);
  // independent recomputation of the group means
  double sx = 0, sy = 0;
  int nx = 0, ny = 0;
  for (const auto& r : q.a.rows()) {
    (r[0].as_text() == "X" ? sx : sy) += r[1].as_number();
    (r[0].as_text() == "X" ? nx : ny) += 1;
  }
  EXPECT_NEAR(h[0].second, sx / nx, 1e-9);
  EXPECT_NEAR(h[1].second, sy / ny, 1e-9);
  EXPECT_GT(h[1].second, h[0].second);
}

TEST(Compile, QuartetBarsPixelIdentical) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const auto q = sim::generate_quartet(rng);
    const auto spec = sim::two_bar_spec();
    const auto a = compile(spec, q.a);
    for (const Table* t : {&q.b, &q.c, &q.d}) {
      const auto other = compile(spec, *t);
      ASSERT_EQ(other.marks.size(), a.marks.size());
      for (std::size_t i = 0; i < a.marks.size(); ++i) {
        EXPECT_EQ(other.marks[i].geometry, a.marks[i].geometry) << "seed " << seed;
      }
      EXPECT_EQ(rasterize(other), rasterize(a)) << "seed " << seed;
    }
  }
}

// Properties --------------------------------------------------------------------------------

TEST(SceneProperties, OrderInvarianceAllPermutationsOfThreeRows) {
  // brute force: every permutation of every 3-row table over a small alphabet
  const std::vector<std::string> cats = {"a", "b"};
  const std::vector<double> vals = {0.1, 0.2, 0.7};
  for (Aggregate agg : {Aggregate::Sum, Aggregate::Mean, Aggregate::Count, Aggregate::Min, Aggregate::Max}) {
    const auto spec = fx::make_spec(MarkKind::Bar, fx::nominal("k"),
                                    agg == Aggregate::Count ? fx::quant("v", agg) : fx::quant("v", agg));
    for (int code = 0; code < 8; ++code) {
      std::vector<Row> rows;
      for (int i = 0; i < 3; ++i) rows.push_back({T(cats[(code >> i) & 1]), N(vals[i])});
      const Table t({"k", "v"}, rows);
      const auto ref_scene = compile(spec, t);
      const auto ref_heights = bar_heights(ref_scene);
      const auto ref_image = encode_ppm(rasterize(ref_scene));
      std::vector<RowIndex> perm = {0, 1, 2};
      do {
        const auto s = compile(spec, select_rows(t, perm));
        ASSERT_EQ(bar_heights(s), ref_heights);
        ASSERT_EQ(encode_ppm(rasterize(s)), ref_image);
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
  }
}

TEST(SceneProperties, ProvenancePartitionAndConsistency) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    const Table t = fx::random_table(rng);
    const auto mean = aggregate_groups(t, "category", "value", Aggregate::Mean);
    const auto sum = aggregate_groups(t, "category", "value", Aggregate::Sum);
    ASSERT_EQ(mean.size(), sum.size());

    std::vector<RowIndex> all;
    for (std::size_t g = 0; g < mean.size(); ++g) {
      ASSERT_EQ(mean[g].record_count, mean[g].provenance.size());
      ASSERT_EQ(mean[g].provenance, sum[g].provenance);
      for (RowIndex r : mean[g].provenance) ASSERT_EQ(t.rows()[r][0], mean[g].category);
      all.insert(all.end(), mean[g].provenance.begin(), mean[g].provenance.end());
      // mean * (non-null count) == sum
      std::size_t nonnull = 0;
      for (RowIndex r : mean[g].provenance) nonnull += t.rows()[r][1].is_number() ? 1 : 0;
      if (nonnull == 0) {
        ASSERT_TRUE(mean[g].degenerate());
        continue;
      }
      ASSERT_NEAR(*mean[g].value * static_cast<double>(nonnull), *sum[g].value,
                  1e-9 * std::max(1.0, std::abs(*sum[g].value)));
    }
    std::sort(all.begin(), all.end());
    std::vector<RowIndex> expect(t.row_count());
    std::iota(expect.begin(), expect.end(), RowIndex{0});
    ASSERT_EQ(all, expect) << "groups must partition the rows";
  }
}

TEST(SceneProperties, DeterministicAndShuffleInvariant) {
  const auto spec = fx::make_spec(MarkKind::Bar, fx::nominal("category"), fx::quant("value", Aggregate::Mean));
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Rng rng(seed);
    const Table t = fx::random_table(rng, 30);
    const auto a = compile(spec, t);
    ASSERT_EQ(compile(spec, t), a);
    const auto shuffled = shuffle_rows(t, rng);
    ASSERT_EQ(bar_heights(compile(spec, shuffled)), bar_heights(a)) << "seed " << seed;
  }
}
