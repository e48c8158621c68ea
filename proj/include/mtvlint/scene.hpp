#pragma once

// Compiles (ChartSpec, Table) into positioned marks. Every mark remembers the
// rows it was drawn from (backward provenance), which is what the grouped
// morphisms resample.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mtvlint/chartspec.hpp"
#include "mtvlint/data.hpp"

namespace mtv {

struct Rgba {
  std::uint8_t r = 0, g = 0, b = 0, a = 255;
  friend bool operator==(const Rgba&, const Rgba&) = default;
};

/// Ten-colour categorical palette, assigned in category sort order.
inline constexpr std::array<Rgba, 10> kPalette = {{
    {0x4c, 0x78, 0xa8, 255}, {0xf5, 0x85, 0x18, 255}, {0xe4, 0x57, 0x56, 255}, {0x72, 0xb7, 0xb2, 255},
    {0x54, 0xa2, 0x4b, 255}, {0xee, 0xca, 0x3b, 255}, {0xb2, 0x79, 0xa2, 255}, {0xff, 0x9d, 0xa6, 255},
    {0x9d, 0x75, 0x5d, 255}, {0xba, 0xb0, 0xac, 255},
}};

struct GroupSummary {
  Value category;
  /// Aggregated value in data units; empty when the group is degenerate
  /// (no non-null values to aggregate).
  std::optional<double> value;
  /// Source row indices in row order. A multiset once the table itself
  /// contains duplicated rows.
  std::vector<RowIndex> provenance;
  std::size_t record_count = 0;

  bool degenerate() const { return !value.has_value(); }
  friend bool operator==(const GroupSummary&, const GroupSummary&) = default;
};

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct RectGeom {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  friend bool operator==(const RectGeom&, const RectGeom&) = default;
};
struct CircleGeom {
  int cx = 0, cy = 0, r = 0;
  friend bool operator==(const CircleGeom&, const CircleGeom&) = default;
};
/// Pixel segment; `include_end` is false for interior segments of a polyline
/// so joints are painted exactly once.
struct SegmentGeom {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool include_end = true;
  friend bool operator==(const SegmentGeom&, const SegmentGeom&) = default;
};

enum class MarkShape { Bar, Point, LineSegment };

struct Mark {
  MarkShape kind = MarkShape::Bar;
  std::variant<RectGeom, CircleGeom, SegmentGeom> geometry;
  Rgba color;
  double opacity = 1.0;
  std::vector<RowIndex> provenance;
  int draw_order = 0;
  friend bool operator==(const Mark&, const Mark&) = default;
};

struct AxisDomain {
  Channel channel = Channel::X;
  FieldType type = FieldType::Nominal;
  double lo = 0.0, hi = 0.0;          // quantitative
  std::vector<std::string> categories;  // nominal, in band order
  friend bool operator==(const AxisDomain&, const AxisDomain&) = default;
};

struct SceneGraph {
  int width = 0, height = 0;
  MarkKind mark_kind = MarkKind::Bar;
  bool aggregated = false;
  std::vector<Mark> marks;
  std::vector<GroupSummary> groups;
  std::vector<AxisDomain> axes;
  friend bool operator==(const SceneGraph&, const SceneGraph&) = default;
};

/// Plot-area inset from the canvas edge, in pixels.
struct Margins {
  int left = 30, right = 10, top = 10, bottom = 20;
};

inline constexpr int kPointRadius = 4;
inline constexpr double kBandPadding = 0.10;

// Aggregation ------------------------------------------------------------------

namespace detail {

inline std::optional<double> reduce(Aggregate agg, std::vector<double>& values, std::size_t record_count) {
  if (agg == Aggregate::Count) return static_cast<double>(record_count);
  if (values.empty()) return std::nullopt;
  // Sorting first makes the floating-point sum independent of row order.
  std::sort(values.begin(), values.end());
  switch (agg) {
    case Aggregate::Sum:
    case Aggregate::Mean: {
      double s = 0.0;
      for (double v : values) s += v;
      return agg == Aggregate::Sum ? s : s / static_cast<double>(values.size());
    }
    case Aggregate::Min: return values.front();
    case Aggregate::Max: return values.back();
    default: return std::nullopt;
  }
}

inline std::vector<std::size_t> distinct_in_order(const std::vector<Value>& keys, std::vector<Value>& uniq) {
  std::map<Value, std::size_t> index;
  std::vector<std::size_t> slot(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto [it, inserted] = index.emplace(keys[i], uniq.size());
    if (inserted) uniq.push_back(keys[i]);
    slot[i] = it->second;
  }
  return slot;
}

/// Lexicographic by label; Null sorts after every other key. Labels can
/// collide across types ("1" vs 1), so the typed value breaks ties.
inline bool category_less(const Value& a, const Value& b) {
  if (a.is_null() != b.is_null()) return b.is_null();
  const auto la = a.label(), lb = b.label();
  if (la != lb) return la < lb;
  return a < b;
}

}  // namespace detail

/// One summary per distinct category value (Null is its own group). Groups are
/// ordered per `sort`; by-value-descending puts degenerate groups last.
inline std::vector<GroupSummary> aggregate_groups(const Table& table, std::string_view category_field,
                                                  std::string_view value_field, Aggregate aggregate,
                                                  SortOrder sort = SortOrder::ByCategoryAscending) {
  const std::size_t cat_col = table.column_index(category_field);
  const std::size_t val_col = table.column_index(value_field);

  std::vector<Value> keys;
  keys.reserve(table.row_count());
  for (const auto& row : table.rows()) keys.push_back(row[cat_col]);
  std::vector<Value> uniq;
  const auto slot = detail::distinct_in_order(keys, uniq);

  std::vector<GroupSummary> groups(uniq.size());
  std::vector<std::vector<double>> values(uniq.size());
  for (std::size_t g = 0; g < uniq.size(); ++g) groups[g].category = uniq[g];
  for (RowIndex r = 0; r < table.row_count(); ++r) {
    GroupSummary& grp = groups[slot[r]];
    grp.provenance.push_back(r);
    const Value& v = table.rows()[r][val_col];
    if (aggregate == Aggregate::Count || v.is_null()) continue;
    if (!v.is_number()) {
      throw Error("cannot aggregate non-numeric value '" + v.label() + "' in field '" +
                  std::string(value_field) + "'");
    }
    values[slot[r]].push_back(v.as_number());
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    groups[g].record_count = groups[g].provenance.size();
    groups[g].value = detail::reduce(aggregate, values[g], groups[g].record_count);
  }

  auto by_category = [](const GroupSummary& a, const GroupSummary& b) {
    return detail::category_less(a.category, b.category);
  };
  switch (sort) {
    case SortOrder::ByCategoryAscending:
      std::sort(groups.begin(), groups.end(), by_category);
      break;
    case SortOrder::ByValueDescending:
      std::sort(groups.begin(), groups.end(), [&](const GroupSummary& a, const GroupSummary& b) {
        if (a.value.has_value() != b.value.has_value()) return a.value.has_value();
        if (a.value && *a.value != *b.value) return *a.value > *b.value;
        return by_category(a, b);
      });
      break;
    case SortOrder::None:
      break;  // first appearance
  }
  return groups;
}

// Scales ---------------------------------------------------------------------------

/// Quantitative domain: [0, max] (extended to include 0) when zero is forced,
/// otherwise [min, max] padded 5% each side; constant data pads to [v-1, v+1].
inline std::pair<double, double> quantitative_domain(const std::vector<double>& values, bool zero) {
  if (values.empty()) return {0.0, 1.0};
  auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  double lo = *mn, hi = *mx;
  if (zero) {
    lo = std::min(lo, 0.0);
    hi = std::max(hi, 0.0);
    if (lo == hi) return {lo - 1.0, hi + 1.0};
    return {lo, hi};
  }
  if (lo == hi) return {lo - 1.0, hi + 1.0};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

namespace detail {

struct Axis {
  AxisDomain domain;
  int start = 0;   // first pixel of the range
  int extent = 0;  // pixel length of the range
  bool flipped = false;  // y grows downward on the canvas

  /// Pixel coordinate (fractional) of a quantitative value.
  double project(double v) const {
    double t = (v - domain.lo) / (domain.hi - domain.lo);
    if (flipped) t = 1.0 - t;
    return start + t * extent;
  }
  /// Baseline for bars: zero if inside the domain, else the domain minimum.
  double baseline() const {
    const double base = (domain.lo <= 0.0 && 0.0 <= domain.hi) ? 0.0 : domain.lo;
    return project(base);
  }
  double band_width() const {
    return domain.categories.empty() ? 0.0 : static_cast<double>(extent) / domain.categories.size();
  }
  std::size_t band_index(const std::string& label) const {
    auto it = std::find(domain.categories.begin(), domain.categories.end(), label);
    return static_cast<std::size_t>(it - domain.categories.begin());
  }
  std::pair<double, double> band(std::size_t i) const {
    const double bw = band_width();
    const double pad = bw * kBandPadding / 2.0;
    double a = start + i * bw + pad, b = start + (i + 1) * bw - pad;
    if (flipped) {
      a = start + extent - (i + 1) * bw + pad;
      b = start + extent - i * bw - pad;
    }
    return {a, b};
  }
  double band_center(std::size_t i) const {
    auto [a, b] = band(i);
    return (a + b) / 2.0;
  }
};

inline int to_pixel(double v) { return static_cast<int>(std::floor(v + 0.5)); }

inline std::vector<std::string> sorted_labels(std::vector<Value> values) {
  std::sort(values.begin(), values.end(), category_less);
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<std::string> out;
  for (const auto& v : values) out.push_back(v.label());
  return out;
}

inline std::vector<std::string> first_seen_labels(const std::vector<Value>& values) {
  std::vector<Value> uniq;
  distinct_in_order(values, uniq);
  std::vector<std::string> out;
  for (const auto& v : uniq) out.push_back(v.label());
  return out;
}

}  // namespace detail

// Compilation -------------------------------------------------------------------------

/// Compiles a validated spec. Unaggregated charts get one mark per row (line
/// charts one segment per consecutive pair), draw order = row order.
/// Aggregated charts get one mark per group.
inline SceneGraph compile(const ChartSpec& spec, const Table& table, const Margins& margins = {}) {
  if (auto issues = validate_spec(spec, table); has_errors(issues)) {
    std::string msg = "cannot compile invalid chart:";
    for (const auto& i : issues) {
      if (i.severity == Severity::Error) msg += " " + i.message + ";";
    }
    throw SpecError(msg);
  }

  SceneGraph scene;
  scene.width = spec.width;
  scene.height = spec.height;
  scene.mark_kind = spec.mark;
  scene.aggregated = spec.is_aggregated();

  const int plot_x0 = std::min(margins.left, spec.width - 1);
  const int plot_x1 = std::max(plot_x0 + 1, spec.width - margins.right);
  const int plot_y0 = std::min(margins.top, spec.height - 1);
  const int plot_y1 = std::max(plot_y0 + 1, spec.height - margins.bottom);

  detail::Axis xaxis, yaxis;
  xaxis.domain.channel = Channel::X;
  xaxis.start = plot_x0;
  xaxis.extent = plot_x1 - plot_x0;
  yaxis.domain.channel = Channel::Y;
  yaxis.start = plot_y0;
  yaxis.extent = plot_y1 - plot_y0;
  yaxis.flipped = true;
  xaxis.domain.type = spec.x().type;
  yaxis.domain.type = spec.y().type;

  // Per-row or per-group positional data.
  struct Datum {
    Value xv, yv;  // category (nominal) or number (quantitative); Null for degenerate
    Value colorv;
    std::vector<RowIndex> provenance;
  };
  std::vector<Datum> data;

  const Encoding* color_enc = spec.color();
  std::vector<std::string> color_labels;
  std::size_t color_col = 0;
  if (color_enc) {
    color_col = table.column_index(color_enc->field);
    color_labels = detail::sorted_labels(column_values(table, color_enc->field));
  }

  if (auto roles = aggregate_roles(spec)) {
    const Encoding& cat = spec.encodings.at(roles->category);
    const Encoding& val = spec.encodings.at(roles->value);
    scene.groups = aggregate_groups(table, cat.field, val.field, val.aggregate, spec.sort);
    for (const auto& g : scene.groups) {
      Datum d;
      const Value v = g.value ? Value::number(*g.value) : Value::null();
      (roles->category == Channel::X ? d.xv : d.yv) = g.category;
      (roles->category == Channel::X ? d.yv : d.xv) = v;
      d.colorv = g.category;
      d.provenance = g.provenance;
      data.push_back(std::move(d));
    }
    std::vector<std::string> band_order;
    for (const auto& g : scene.groups) band_order.push_back(g.category.label());
    detail::Axis& cat_axis = roles->category == Channel::X ? xaxis : yaxis;
    cat_axis.domain.categories = band_order;
  } else {
    const std::size_t xc = table.column_index(spec.x().field);
    const std::size_t yc = table.column_index(spec.y().field);
    for (RowIndex r = 0; r < table.row_count(); ++r) {
      const auto& row = table.rows()[r];
      data.push_back(Datum{row[xc], row[yc], color_enc ? row[color_col] : Value{}, {r}});
    }
    for (detail::Axis* ax : {&xaxis, &yaxis}) {
      if (ax->domain.type != FieldType::Nominal) continue;
      std::vector<Value> vals;
      for (const auto& d : data) vals.push_back(ax == &xaxis ? d.xv : d.yv);
      ax->domain.categories = spec.sort == SortOrder::None ? detail::first_seen_labels(vals)
                                                           : detail::sorted_labels(vals);
    }
  }

  for (detail::Axis* ax : {&xaxis, &yaxis}) {
    if (ax->domain.type != FieldType::Quantitative) continue;
    std::vector<double> vals;
    for (const auto& d : data) {
      const Value& v = ax == &xaxis ? d.xv : d.yv;
      if (v.is_number()) vals.push_back(v.as_number());
    }
    const Encoding& enc = ax == &xaxis ? spec.x() : spec.y();
    auto [lo, hi] = quantitative_domain(vals, enc.scale_zero);
    ax->domain.lo = lo;
    ax->domain.hi = hi;
  }
  scene.axes = {xaxis.domain, yaxis.domain};

  auto color_for = [&](const Value& v) -> Rgba {
    if (!color_enc) return kPalette[0];
    auto it = std::find(color_labels.begin(), color_labels.end(), v.label());
    return kPalette[static_cast<std::size_t>(it - color_labels.begin()) % kPalette.size()];
  };

  auto clamp_x = [&](int v) { return std::clamp(v, 0, spec.width); };
  auto clamp_y = [&](int v) { return std::clamp(v, 0, spec.height); };

  // Point position of a datum, or nothing if a coordinate is missing.
  auto position = [&](const Datum& d) -> std::optional<std::pair<double, double>> {
    double px = 0, py = 0;
    for (int k = 0; k < 2; ++k) {
      const detail::Axis& ax = k == 0 ? xaxis : yaxis;
      const Value& v = k == 0 ? d.xv : d.yv;
      double p;
      if (ax.domain.type == FieldType::Nominal) {
        p = ax.band_center(ax.band_index(v.label()));
      } else {
        if (!v.is_number()) return std::nullopt;
        p = ax.project(v.as_number());
      }
      (k == 0 ? px : py) = p;
    }
    return std::make_pair(px, py);
  };

  int order = 0;
  if (spec.mark == MarkKind::Bar) {
    const bool vertical = spec.x().type == FieldType::Nominal;
    const detail::Axis& band_axis = vertical ? xaxis : yaxis;
    const detail::Axis& value_axis = vertical ? yaxis : xaxis;
    for (const auto& d : data) {
      const Value& cat = vertical ? d.xv : d.yv;
      const Value& val = vertical ? d.yv : d.xv;
      auto [b0, b1] = band_axis.band(band_axis.band_index(cat.label()));
      const double base = value_axis.baseline();
      const double tip = val.is_number() ? value_axis.project(val.as_number()) : base;
      RectGeom rect;
      const int v0 = detail::to_pixel(std::min(base, tip)), v1 = detail::to_pixel(std::max(base, tip));
      const int c0 = detail::to_pixel(b0), c1 = detail::to_pixel(b1);
      if (vertical) {
        rect = {clamp_x(c0), clamp_y(v0), clamp_x(c1), clamp_y(v1)};
      } else {
        rect = {clamp_x(v0), clamp_y(c0), clamp_x(v1), clamp_y(c1)};
      }
      scene.marks.push_back(Mark{MarkShape::Bar, rect, color_for(d.colorv), spec.opacity, d.provenance, order++});
    }
  } else if (spec.mark == MarkKind::Point) {
    for (const auto& d : data) {
      auto pos = position(d);
      if (!pos) continue;
      CircleGeom c{detail::to_pixel(pos->first), detail::to_pixel(pos->second), kPointRadius};
      scene.marks.push_back(Mark{MarkShape::Point, c, color_for(d.colorv), spec.opacity, d.provenance, order++});
    }
  } else {
    // Series keyed by colour (single series without a colour channel), each
    // connected in x order; equal x keeps row order.
    std::map<std::string, std::vector<std::size_t>> series;
    std::vector<std::string> series_order;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::string key = color_enc ? data[i].colorv.label() : std::string();
      if (!series.contains(key)) series_order.push_back(key);
      series[key].push_back(i);
    }
    if (color_enc) series_order = color_labels;
    for (const auto& key : series_order) {
      auto it = series.find(key);
      if (it == series.end()) continue;
      std::vector<std::pair<std::pair<double, double>, std::size_t>> pts;
      for (std::size_t i : it->second) {
        if (auto pos = position(data[i])) pts.push_back({*pos, i});
      }
      std::stable_sort(pts.begin(), pts.end(),
                       [](const auto& a, const auto& b) { return a.first.first < b.first.first; });
      for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const auto& [p0, i0] = pts[k];
        const auto& [p1, i1] = pts[k + 1];
        SegmentGeom seg{detail::to_pixel(p0.first), detail::to_pixel(p0.second), detail::to_pixel(p1.first),
                        detail::to_pixel(p1.second), k + 2 == pts.size()};
        std::vector<RowIndex> prov = data[i0].provenance;
        prov.insert(prov.end(), data[i1].provenance.begin(), data[i1].provenance.end());
        scene.marks.push_back(
            Mark{MarkShape::LineSegment, seg, color_for(data[i0].colorv), spec.opacity, std::move(prov), order++});
      }
    }
  }
  return scene;
}

/// Aggregated bar heights in data units, in group order. Degenerate groups
/// report 0, matching their zero-height bar.
inline std::vector<std::pair<Value, double>> bar_heights(const SceneGraph& scene) {
  if (scene.mark_kind != MarkKind::Bar || !scene.aggregated) {
    throw Error("bar_heights requires aggregated bar chart");
  }
  std::vector<std::pair<Value, double>> out;
  out.reserve(scene.groups.size());
  for (const auto& g : scene.groups) out.emplace_back(g.category, g.value.value_or(0.0));
  return out;
}

// Debug dump -------------------------------------------------------------------------

inline nlohmann::json to_json(const SceneGraph& scene) {
  using nlohmann::json;
  json marks = json::array();
  for (const auto& m : scene.marks) {
    json g;
    std::visit(
        [&](const auto& geom) {
          using T = std::decay_t<decltype(geom)>;
          if constexpr (std::is_same_v<T, RectGeom>) {
            g = {{"rect", {geom.x0, geom.y0, geom.x1, geom.y1}}};
          } else if constexpr (std::is_same_v<T, CircleGeom>) {
            g = {{"circle", {geom.cx, geom.cy, geom.r}}};
          } else {
            g = {{"segment", {geom.x0, geom.y0, geom.x1, geom.y1}}, {"include_end", geom.include_end}};
          }
        },
        m.geometry);
    marks.push_back({{"draw_order", m.draw_order},
                     {"geometry", g},
                     {"color", {m.color.r, m.color.g, m.color.b, m.color.a}},
                     {"opacity", m.opacity},
                     {"provenance", m.provenance}});
  }
  json groups = json::array();
  for (const auto& g : scene.groups) {
    groups.push_back({{"category", g.category.label()},
                      {"value", g.value ? json(*g.value) : json(nullptr)},
                      {"record_count", g.record_count},
                      {"provenance", g.provenance}});
  }
  json axes = json::array();
  for (const auto& a : scene.axes) {
    json ax = {{"channel", std::string(to_string(a.channel))}, {"type", std::string(to_string(a.type))}};
    if (a.type == FieldType::Quantitative) {
      ax["domain"] = {a.lo, a.hi};
    } else {
      ax["domain"] = a.categories;
    }
    axes.push_back(ax);
  }
  return {{"width", scene.width}, {"height", scene.height}, {"marks", marks}, {"groups", groups}, {"axes", axes}};
}

}  // namespace mtv
