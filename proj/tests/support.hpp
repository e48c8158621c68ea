#pragma once

// Shared fixtures for unit and acceptance tests: a small corpus of
// (spec, table) pairs and hand-rolled random table generators.

#include <string>
#include <vector>

#include "mtvlint/mtvlint.hpp"

namespace fx {

using mtv::Aggregate;
using mtv::Channel;
using mtv::ChartSpec;
using mtv::Encoding;
using mtv::FieldType;
using mtv::MarkKind;
using mtv::Row;
using mtv::Table;
using mtv::Value;

inline Value N(double v) { return Value::number(v); }
inline Value T(std::string s) { return Value::text(std::move(s)); }

inline Encoding nominal(std::string field) { return {std::move(field), FieldType::Nominal, Aggregate::None}; }
inline Encoding quant(std::string field, Aggregate agg = Aggregate::None) {
  return {std::move(field), FieldType::Quantitative, agg};
}

inline ChartSpec make_spec(MarkKind mark, Encoding x, Encoding y, std::optional<Encoding> color = {}) {
  ChartSpec s;
  s.mark = mark;
  s.encodings[Channel::X] = std::move(x);
  s.encodings[Channel::Y] = std::move(y);
  if (color) s.encodings[Channel::Color] = std::move(*color);
  s.width = 120;
  s.height = 90;
  return s;
}

inline ChartSpec mean_bar_spec(const std::string& cat = "category", const std::string& val = "value") {
  return make_spec(MarkKind::Bar, nominal(cat), quant(val, Aggregate::Mean));
}

/// {(X,1),(X,3),(Y,2)} — both means equal 2.
inline Table xxy_table() { return Table({"category", "value"}, {{T("X"), N(1)}, {T("X"), N(3)}, {T("Y"), N(2)}}); }

inline Table two_groups(const std::vector<double>& xs, const std::vector<double>& ys) {
  return mtv::sim::two_group_table(xs, ys);
}

struct Fixture {
  std::string name;
  ChartSpec spec;
  Table table;
};

/// Three opaque points of distinct colours stacked on one spot, plus a few
/// free-standing points: whichever colour is drawn last wins the overlap.
inline Fixture overlapping_scatter() {
  std::vector<Row> rows = {
      {N(1), N(1), T("a")}, {N(9), N(2), T("b")}, {N(2), N(8), T("c")},
      {N(5), N(5), T("a")}, {N(5), N(5), T("b")}, {N(5), N(5), T("c")},
  };
  return {"overlapping scatter",
          make_spec(MarkKind::Point, quant("x"), quant("y"), nominal("g")),
          Table({"x", "y", "g"}, std::move(rows))};
}

/// Well-separated points; no two marks touch.
inline Fixture separated_scatter() {
  std::vector<Row> rows;
  for (int i = 0; i < 5; ++i) rows.push_back({N(i * 10.0), N((i % 2) * 10.0), T(i % 2 ? "p" : "q")});
  auto spec = make_spec(MarkKind::Point, quant("x"), quant("y"), nominal("g"));
  spec.width = 200;
  spec.height = 120;
  return {"separated scatter", spec, Table({"x", "y", "g"}, std::move(rows))};
}

/// Bar mark without aggregation over several rows per category: the bars
/// stack on top of each other and only the tallest is visible.
inline Fixture unaggregated_bars() {
  return {"unaggregated bars",
          make_spec(MarkKind::Bar, nominal("category"), quant("value")),
          Table({"category", "value"},
                {{T("A"), N(3)}, {T("A"), N(7)}, {T("B"), N(5)}, {T("B"), N(2)}, {T("C"), N(4)}})};
}

/// Identity-soundness corpus covering bar / point / line, aggregated and not.
inline std::vector<Fixture> corpus() {
  std::vector<Fixture> out;
  out.push_back({"mean bars", mean_bar_spec(), xxy_table()});
  out.push_back({"sum bars", make_spec(MarkKind::Bar, nominal("k"), quant("v", Aggregate::Sum)),
                 Table({"k", "v"}, {{T("c"), N(4)}, {T("a"), N(-2)}, {T("b"), N(7)}, {T("a"), N(1)}})});
  out.push_back({"count bars", make_spec(MarkKind::Bar, nominal("k"), quant("k", Aggregate::Count)),
                 Table({"k"}, {{T("u")}, {T("v")}, {T("u")}, {T("w")}, {T("u")}})});
  out.push_back({"horizontal max bars", make_spec(MarkKind::Bar, quant("v", Aggregate::Max), nominal("k")),
                 Table({"k", "v"}, {{T("a"), N(3)}, {T("b"), N(9)}, {T("a"), N(5)}})});
  {
    auto s = make_spec(MarkKind::Bar, nominal("k"), quant("v", Aggregate::Min));
    s.encodings[Channel::Y].scale_zero = false;
    s.sort = mtv::SortOrder::ByValueDescending;
    out.push_back({"min bars, no zero, by value", s,
                   Table({"k", "v"}, {{T("a"), N(13)}, {T("b"), N(11)}, {T("c"), N(12)}, {T("b"), N(15)}})});
  }
  out.push_back({"coloured mean bars",
                 make_spec(MarkKind::Bar, nominal("k"), quant("v", Aggregate::Mean), nominal("k")),
                 Table({"k", "v"}, {{T("a"), N(1)}, {T("b"), N(2)}, {T("c"), Value::null()}, {T("c"), N(3)}})});
  out.push_back(unaggregated_bars());
  out.push_back(overlapping_scatter());
  out.push_back(separated_scatter());
  out.push_back({"scatter with nulls", make_spec(MarkKind::Point, quant("x"), quant("y")),
                 Table({"x", "y"}, {{N(1), N(2)}, {Value::null(), N(3)}, {N(4), N(-1)}, {N(2.5), Value::null()}})});
  out.push_back({"single line", make_spec(MarkKind::Line, quant("t"), quant("y")),
                 Table({"t", "y"}, {{N(3), N(1)}, {N(1), N(4)}, {N(2), N(2)}, {N(4), N(6)}})});
  out.push_back({"two lines", make_spec(MarkKind::Line, quant("t"), quant("y"), nominal("s")),
                 Table({"t", "y", "s"}, {{N(1), N(1), T("n")}, {N(2), N(3), T("n")}, {N(3), N(2), T("n")},
                                         {N(1), N(4), T("m")}, {N(2), N(1), T("m")}, {N(3), N(5), T("m")}})});
  out.push_back({"empty bar table", mean_bar_spec(), Table({"category", "value"}, {})});
  return out;
}

// Random tables -----------------------------------------------------------------------------

/// Random (category, value, tag) table: 0..max_rows rows, 1..5 categories,
/// occasional Null categories and values, duplicated rows likely.
inline Table random_table(mtv::Rng& rng, std::size_t max_rows = 40, bool allow_null = true) {
  const std::size_t n = rng.uniform_below(max_rows + 1);
  const std::size_t k = 1 + rng.uniform_below(5);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < n; ++i) {
    Value cat = T(std::string(1, static_cast<char>('A' + rng.uniform_below(k))));
    if (allow_null && rng.uniform_below(12) == 0) cat = Value::null();
    Value val = N(static_cast<double>(rng.uniform_below(20)) - 5.0);
    if (allow_null && rng.uniform_below(15) == 0) val = Value::null();
    rows.push_back({cat, val, N(static_cast<double>(i))});
  }
  return Table({"category", "value", "tag"}, std::move(rows));
}

inline std::vector<Row> sorted_rows(const Table& t) {
  auto r = t.rows();
  std::sort(r.begin(), r.end());
  return r;
}

/// Rows of `t` grouped by category label, each group sorted.
inline std::map<std::string, std::vector<Row>> rows_by_category(const Table& t, std::size_t cat_col = 0) {
  std::map<std::string, std::vector<Row>> out;
  for (const auto& r : t.rows()) out[r[cat_col].label()].push_back(r);
  for (auto& [_, v] : out) std::sort(v.begin(), v.end());
  return out;
}

}  // namespace fx
