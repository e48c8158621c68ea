#pragma once

// Declarative chart specification: a small Vega-Lite-like JSON grammar with
// three marks (bar, point, line), three channels (x, y, color) and six
// aggregates.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mtvlint/data.hpp"

namespace mtv {

enum class MarkKind { Bar, Point, Line };
enum class Channel { X, Y, Color };
enum class FieldType { Nominal, Quantitative };
enum class Aggregate { None, Sum, Mean, Count, Min, Max };
enum class SortOrder { ByCategoryAscending, ByValueDescending, None };

struct Encoding {
  std::string field;
  FieldType type = FieldType::Nominal;
  Aggregate aggregate = Aggregate::None;
  bool scale_zero = true;
  friend bool operator==(const Encoding&, const Encoding&) = default;
};

struct ChartSpec {
  MarkKind mark = MarkKind::Bar;
  std::map<Channel, Encoding> encodings;
  int width = 400;
  int height = 300;
  double opacity = 1.0;
  SortOrder sort = SortOrder::ByCategoryAscending;

  const Encoding& x() const { return encodings.at(Channel::X); }
  const Encoding& y() const { return encodings.at(Channel::Y); }
  const Encoding* color() const {
    auto it = encodings.find(Channel::Color);
    return it == encodings.end() ? nullptr : &it->second;
  }

  /// True when a positional channel carries an aggregate.
  bool is_aggregated() const {
    return x().aggregate != Aggregate::None || y().aggregate != Aggregate::None;
  }

  friend bool operator==(const ChartSpec&, const ChartSpec&) = default;
};

class SpecError : public Error {
 public:
  using Error::Error;
};

// Names ----------------------------------------------------------------------

inline std::string_view to_string(MarkKind m) {
  switch (m) {
    case MarkKind::Bar: return "bar";
    case MarkKind::Point: return "point";
    case MarkKind::Line: return "line";
  }
  return "bar";
}
inline std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::X: return "x";
    case Channel::Y: return "y";
    case Channel::Color: return "color";
  }
  return "x";
}
inline std::string_view to_string(FieldType t) {
  return t == FieldType::Nominal ? "nominal" : "quantitative";
}
inline std::string_view to_string(Aggregate a) {
  switch (a) {
    case Aggregate::None: return "none";
    case Aggregate::Sum: return "sum";
    case Aggregate::Mean: return "mean";
    case Aggregate::Count: return "count";
    case Aggregate::Min: return "min";
    case Aggregate::Max: return "max";
  }
  return "none";
}
inline std::string_view to_string(SortOrder s) {
  switch (s) {
    case SortOrder::ByCategoryAscending: return "by-category-ascending";
    case SortOrder::ByValueDescending: return "by-value-descending";
    case SortOrder::None: return "none";
  }
  return "none";
}

// Parsing ----------------------------------------------------------------------

namespace detail {

using nlohmann::json;

inline const json& require_type(const json& j, json::value_t t, const std::string& path, std::string_view what) {
  bool ok = j.type() == t;
  if (t == json::value_t::number_integer) ok = j.is_number_integer();
  if (t == json::value_t::number_float) ok = j.is_number();
  if (!ok) throw SpecError(path + ": expected " + std::string(what));
  return j;
}

inline Encoding parse_encoding(const json& j, const std::string& path) {
  if (!j.is_object()) throw SpecError(path + ": expected object");
  Encoding enc;
  bool has_field = false, has_type = false;
  for (const auto& [key, val] : j.items()) {
    const std::string sub = path + "." + key;
    if (key == "field") {
      enc.field = require_type(val, json::value_t::string, sub, "string").get<std::string>();
      if (enc.field.empty()) throw SpecError(sub + ": field name must be non-empty");
      has_field = true;
    } else if (key == "type") {
      const auto t = require_type(val, json::value_t::string, sub, "string").get<std::string>();
      if (t == "nominal") enc.type = FieldType::Nominal;
      else if (t == "quantitative") enc.type = FieldType::Quantitative;
      else throw SpecError(sub + ": unknown field type '" + t + "'");
      has_type = true;
    } else if (key == "aggregate") {
      const auto a = require_type(val, json::value_t::string, sub, "string").get<std::string>();
      if (a == "none") enc.aggregate = Aggregate::None;
      else if (a == "sum") enc.aggregate = Aggregate::Sum;
      else if (a == "mean") enc.aggregate = Aggregate::Mean;
      else if (a == "count") enc.aggregate = Aggregate::Count;
      else if (a == "min") enc.aggregate = Aggregate::Min;
      else if (a == "max") enc.aggregate = Aggregate::Max;
      else throw SpecError(sub + ": unknown aggregate '" + a + "'");
    } else if (key == "scale") {
      if (!val.is_object()) throw SpecError(sub + ": expected object");
      for (const auto& [skey, sval] : val.items()) {
        if (skey != "zero") throw SpecError(sub + "." + skey + ": unknown key");
        enc.scale_zero = require_type(sval, json::value_t::boolean, sub + ".zero", "boolean").get<bool>();
      }
    } else {
      throw SpecError(sub + ": unknown key");
    }
  }
  if (!has_field) throw SpecError(path + ".field: missing");
  if (!has_type) throw SpecError(path + ".type: missing");
  if (enc.aggregate != Aggregate::None && enc.aggregate != Aggregate::Count &&
      enc.type != FieldType::Quantitative) {
    throw SpecError(path + ".aggregate: '" + std::string(to_string(enc.aggregate)) +
                    "' requires a quantitative field");
  }
  return enc;
}

}  // namespace detail

/// Parses the JSON wire format. Strict: unknown keys are rejected, and every
/// error message starts with the offending path.
inline ChartSpec parse_spec(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("$: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SpecError("$: chart spec must be a JSON object");

  ChartSpec spec;
  bool has_mark = false, has_encoding = false;
  for (const auto& [key, val] : doc.items()) {
    if (key == "mark") {
      const auto m = detail::require_type(val, json::value_t::string, "mark", "string").get<std::string>();
      if (m == "bar") spec.mark = MarkKind::Bar;
      else if (m == "point") spec.mark = MarkKind::Point;
      else if (m == "line") spec.mark = MarkKind::Line;
      else throw SpecError("mark: unknown mark '" + m + "'");
      has_mark = true;
    } else if (key == "encoding") {
      if (!val.is_object()) throw SpecError("encoding: expected object");
      for (const auto& [ch, enc] : val.items()) {
        Channel channel;
        if (ch == "x") channel = Channel::X;
        else if (ch == "y") channel = Channel::Y;
        else if (ch == "color") channel = Channel::Color;
        else throw SpecError("encoding." + ch + ": unknown channel");
        spec.encodings[channel] = detail::parse_encoding(enc, "encoding." + ch);
      }
      has_encoding = true;
    } else if (key == "width" || key == "height") {
      if (!val.is_number_integer() || val.get<long long>() <= 0 || val.get<long long>() > 16384) {
        throw SpecError(key + ": expected positive integer pixel count");
      }
      (key == "width" ? spec.width : spec.height) = static_cast<int>(val.get<long long>());
    } else if (key == "opacity") {
      if (!val.is_number()) throw SpecError("opacity: expected number");
      const double o = val.get<double>();
      if (!(o > 0.0 && o <= 1.0)) throw SpecError("opacity: must lie in (0, 1], got " + format_number(o));
      spec.opacity = o;
    } else if (key == "sort") {
      const auto s = detail::require_type(val, json::value_t::string, "sort", "string").get<std::string>();
      if (s == "by-category-ascending") spec.sort = SortOrder::ByCategoryAscending;
      else if (s == "by-value-descending") spec.sort = SortOrder::ByValueDescending;
      else if (s == "none") spec.sort = SortOrder::None;
      else throw SpecError("sort: unknown sort '" + s + "'");
    } else {
      throw SpecError(key + ": unknown top-level key");
    }
  }
  if (!has_mark) throw SpecError("mark: missing");
  if (!has_encoding) throw SpecError("encoding: missing required channel x");
  if (!spec.encodings.contains(Channel::X)) throw SpecError("encoding.x: missing required channel x");
  if (!spec.encodings.contains(Channel::Y)) throw SpecError("encoding.y: missing required channel y");
  return spec;
}

inline nlohmann::json to_json(const ChartSpec& spec) {
  nlohmann::json enc = nlohmann::json::object();
  for (const auto& [ch, e] : spec.encodings) {
    enc[std::string(to_string(ch))] = {
        {"field", e.field},
        {"type", std::string(to_string(e.type))},
        {"aggregate", std::string(to_string(e.aggregate))},
        {"scale", {{"zero", e.scale_zero}}},
    };
  }
  return {
      {"mark", std::string(to_string(spec.mark))},
      {"encoding", enc},
      {"width", spec.width},
      {"height", spec.height},
      {"opacity", spec.opacity},
      {"sort", std::string(to_string(spec.sort))},
  };
}

inline std::string serialize_spec(const ChartSpec& spec) { return to_json(spec).dump(); }

// Validation ---------------------------------------------------------------------

enum class Severity { Error, Warning };

struct ValidationIssue {
  Severity severity = Severity::Error;
  std::string message;
  friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
};

/// Positional roles of an aggregated chart: which channel holds categories and
/// which holds the aggregated measure.
struct AggregateRoles {
  Channel category;
  Channel value;
};

inline std::optional<AggregateRoles> aggregate_roles(const ChartSpec& spec) {
  if (!spec.is_aggregated()) return std::nullopt;
  if (spec.y().aggregate != Aggregate::None && spec.x().aggregate == Aggregate::None &&
      spec.x().type == FieldType::Nominal) {
    return AggregateRoles{Channel::X, Channel::Y};
  }
  if (spec.x().aggregate != Aggregate::None && spec.y().aggregate == Aggregate::None &&
      spec.y().type == FieldType::Nominal) {
    return AggregateRoles{Channel::Y, Channel::X};
  }
  return std::nullopt;
}

/// Checks a spec against a table. An empty result means compile() cannot fail.
inline std::vector<ValidationIssue> validate_spec(const ChartSpec& spec, const Table& table) {
  std::vector<ValidationIssue> issues;
  auto error = [&](std::string msg) { issues.push_back({Severity::Error, std::move(msg)}); };
  auto warning = [&](std::string msg) { issues.push_back({Severity::Warning, std::move(msg)}); };

  if (!spec.encodings.contains(Channel::X)) error("missing required channel x");
  if (!spec.encodings.contains(Channel::Y)) error("missing required channel y");
  if (!issues.empty()) return issues;
  if (spec.width <= 0 || spec.height <= 0) error("canvas size must be positive");
  if (!(spec.opacity > 0.0 && spec.opacity <= 1.0)) error("opacity must lie in (0, 1]");

  for (const auto& [ch, enc] : spec.encodings) {
    const std::string where = "encoding." + std::string(to_string(ch));
    auto col = table.find_column(enc.field);
    if (!col) {
      error(where + ": field '" + enc.field + "' not found in data");
      continue;
    }
    const ColumnType ct = table.columns()[*col].type;
    const bool numeric = ct == ColumnType::Number;
    if (enc.aggregate != Aggregate::None && enc.aggregate != Aggregate::Count) {
      if (enc.type != FieldType::Quantitative) {
        error(where + ": aggregate '" + std::string(to_string(enc.aggregate)) + "' requires a quantitative field");
      } else if (!numeric) {
        error(where + ": aggregate '" + std::string(to_string(enc.aggregate)) + "' over " +
              std::string(to_string(ct)) + " column '" + enc.field + "'");
      }
    } else if (enc.type == FieldType::Quantitative && enc.aggregate == Aggregate::None && !numeric) {
      error(where + ": quantitative encoding of " + std::string(to_string(ct)) + " column '" + enc.field + "'");
    }
    if (ct == ColumnType::Mixed && enc.type == FieldType::Nominal) {
      warning(where + ": column '" + enc.field + "' mixes numbers and text (possible data-entry error)");
    }
  }
  if (!issues.empty() && std::any_of(issues.begin(), issues.end(),
                                     [](const auto& i) { return i.severity == Severity::Error; })) {
    return issues;
  }

  const Encoding& x = spec.x();
  const Encoding& y = spec.y();
  if (x.aggregate != Aggregate::None && y.aggregate != Aggregate::None) {
    error("only one positional channel may carry an aggregate");
  }
  if (spec.mark == MarkKind::Bar) {
    const bool x_nom = x.type == FieldType::Nominal, y_nom = y.type == FieldType::Nominal;
    if (x_nom == y_nom) error("bar mark requires exactly one nominal and one quantitative positional channel");
  }
  if (spec.is_aggregated() && !aggregate_roles(spec)) {
    if (std::none_of(issues.begin(), issues.end(), [](const auto& i) { return i.severity == Severity::Error; })) {
      error("aggregated chart requires a nominal category channel opposite the aggregated channel");
    }
  }
  if (const Encoding* c = spec.color()) {
    if (c->type != FieldType::Nominal) error("encoding.color: only nominal color encodings are supported");
    if (c->aggregate != Aggregate::None) error("encoding.color: aggregate not allowed on color");
    if (auto roles = aggregate_roles(spec)) {
      if (c->field != spec.encodings.at(roles->category).field) {
        error("encoding.color: on an aggregated chart color must encode the category field '" +
              spec.encodings.at(roles->category).field + "'");
      }
    }
  }
  if (spec.mark == MarkKind::Bar) {
    for (const Encoding* e : {&x, &y}) {
      if (e->type == FieldType::Quantitative && !e->scale_zero) {
        warning("bar axis for '" + e->field + "' does not start at zero (truncated axis can exaggerate differences)");
      }
    }
  }
  if (spec.mark == MarkKind::Bar && !spec.is_aggregated()) {
    warning("bar chart without aggregate: rows sharing a category overplot");
  }
  return issues;
}

inline bool has_errors(const std::vector<ValidationIssue>& issues) {
  return std::any_of(issues.begin(), issues.end(), [](const auto& i) { return i.severity == Severity::Error; });
}

}  // namespace mtv
