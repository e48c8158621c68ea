#pragma once

// Tabular data model: typed cells, CSV / JSON-rows ingestion, row selection.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace mtv {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

using RowIndex = std::size_t;

// Value ---------------------------------------------------------------------

/// One table cell. Numbers are always finite; anything non-finite is stored
/// as Null.
class Value {
 public:
  Value() = default;
  static Value null() { return Value{}; }
  static Value number(double v) {
    Value out;
    if (std::isfinite(v)) out.v_ = v;
    return out;
  }
  static Value text(std::string s) {
    Value out;
    out.v_ = std::move(s);
    return out;
  }
  static Value boolean(bool b) {
    Value out;
    out.v_ = b;
    return out;
  }

  bool is_null() const { return std::holds_alternative<std::monostate>(v_); }
  bool is_number() const { return std::holds_alternative<double>(v_); }
  bool is_text() const { return std::holds_alternative<std::string>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }

  double as_number() const { return std::get<double>(v_); }
  const std::string& as_text() const { return std::get<std::string>(v_); }
  bool as_bool() const { return std::get<bool>(v_); }

  /// Human-readable label, used for category ordering and report output.
  std::string label() const;

  friend bool operator==(const Value&, const Value&) = default;
  friend auto operator<=>(const Value& a, const Value& b) { return a.v_ <=> b.v_; }

 private:
  std::variant<std::monostate, double, std::string, bool> v_;
};

inline constexpr std::string_view kNullLabel = "⟨null⟩";

/// Shortest decimal representation that round-trips through from_chars.
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string Value::label() const {
  if (is_null()) return std::string(kNullLabel);
  if (is_number()) return format_number(as_number());
  if (is_bool()) return as_bool() ? "true" : "false";
  return as_text();
}

/// Parses a plain decimal literal: optional sign, digits with optional
/// fraction, optional exponent. No locale separators, no hex, no inf/nan.
/// Out-of-range literals yield a Null value.
inline std::optional<Value> parse_number_literal(std::string_view s) {
  std::size_t i = 0;
  const std::size_t n = s.size();
  if (i < n && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t int_digits = 0;
  while (i < n && s[i] >= '0' && s[i] <= '9') ++i, ++int_digits;
  std::size_t frac_digits = 0;
  if (i < n && s[i] == '.') {
    ++i;
    while (i < n && s[i] >= '0' && s[i] <= '9') ++i, ++frac_digits;
  }
  if (int_digits + frac_digits == 0) return std::nullopt;
  if (i < n && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < n && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < n && s[i] >= '0' && s[i] <= '9') ++i, ++exp_digits;
    if (exp_digits == 0) return std::nullopt;
  }
  if (i != n) return std::nullopt;

  // from_chars rejects a leading '+'.
  std::string_view body = s;
  if (!body.empty() && body.front() == '+') body.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(body.data(), body.data() + body.size(), v);
  if (res.ec == std::errc::result_out_of_range) return Value::null();
  if (res.ec != std::errc{} || res.ptr != body.data() + body.size()) return std::nullopt;
  return Value::number(v);
}

// Table ---------------------------------------------------------------------

enum class ColumnType { Number, Text, Bool, Mixed };

inline std::string_view to_string(ColumnType t) {
  switch (t) {
    case ColumnType::Number: return "number";
    case ColumnType::Text: return "text";
    case ColumnType::Bool: return "bool";
    case ColumnType::Mixed: return "mixed";
  }
  return "mixed";
}

struct Column {
  std::string name;
  ColumnType type = ColumnType::Number;
  friend bool operator==(const Column&, const Column&) = default;
};

using Row = std::vector<Value>;

/// Immutable-by-convention table: ordered columns, ordered rows.
class Table {
 public:
  Table() = default;

  /// Builds a table and infers column types. Throws on duplicate or empty
  /// column names and on ragged rows.
  Table(std::vector<std::string> names, std::vector<Row> rows) : rows_(std::move(rows)) {
    std::unordered_set<std::string> seen;
    for (auto& name : names) {
      if (name.empty()) throw ParseError("empty column name");
      if (!seen.insert(name).second) throw ParseError("duplicate column name '" + name + "'");
      columns_.push_back(Column{std::move(name), ColumnType::Number});
    }
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      if (rows_[r].size() != columns_.size()) {
        throw ParseError("row " + std::to_string(r) + " has " + std::to_string(rows_[r].size()) +
                         " cells, expected " + std::to_string(columns_.size()));
      }
    }
    for (std::size_t c = 0; c < columns_.size(); ++c) columns_[c].type = infer_type(c);
  }

  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<Row>& rows() const { return rows_; }
  std::size_t row_count() const { return rows_.size(); }
  std::size_t column_count() const { return columns_.size(); }

  std::optional<std::size_t> find_column(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i].name == name) return i;
    }
    return std::nullopt;
  }

  /// Column index by name; throws naming the field and the available columns.
  std::size_t column_index(std::string_view name) const {
    if (auto idx = find_column(name)) return *idx;
    std::string avail;
    for (const auto& c : columns_) {
      if (!avail.empty()) avail += ", ";
      avail += c.name;
    }
    throw Error("unknown field '" + std::string(name) + "' (available columns: " + avail + ")");
  }

  const Column& column(std::string_view name) const { return columns_[column_index(name)]; }

  /// Same schema, new rows. Column types are carried over unchanged, so
  /// morphisms never re-type a column.
  Table with_rows(std::vector<Row> rows) const {
    Table out;
    out.columns_ = columns_;
    out.rows_ = std::move(rows);
    return out;
  }

  friend bool operator==(const Table&, const Table&) = default;

 private:
  ColumnType infer_type(std::size_t c) const {
    bool any_num = false, any_text = false, any_bool = false;
    for (const auto& row : rows_) {
      const Value& v = row[c];
      any_num |= v.is_number();
      any_text |= v.is_text();
      any_bool |= v.is_bool();
    }
    const int kinds = int(any_num) + int(any_text) + int(any_bool);
    if (kinds > 1) return ColumnType::Mixed;
    if (any_text) return ColumnType::Text;
    if (any_bool) return ColumnType::Bool;
    return ColumnType::Number;
  }

  std::vector<Column> columns_;
  std::vector<Row> rows_;
};

// Row-level primitives -------------------------------------------------------

/// Multiset row selection: output rows follow `indices`, repeats allowed.
inline Table select_rows(const Table& table, const std::vector<RowIndex>& indices) {
  std::vector<Row> rows;
  rows.reserve(indices.size());
  for (RowIndex i : indices) {
    if (i >= table.row_count()) {
      throw Error("row index " + std::to_string(i) + " out of range (row count " +
                  std::to_string(table.row_count()) + ")");
    }
    rows.push_back(table.rows()[i]);
  }
  return table.with_rows(std::move(rows));
}

inline std::vector<Value> column_values(const Table& table, std::string_view field) {
  const std::size_t c = table.column_index(field);
  std::vector<Value> out;
  out.reserve(table.row_count());
  for (const auto& row : table.rows()) out.push_back(row[c]);
  return out;
}

// CSV --------------------------------------------------------------------------

struct CsvOptions {
  char delimiter = ',';
};

namespace detail {

struct CsvField {
  std::string text;
  bool quoted = false;
};

inline Value csv_cell(const CsvField& f) {
  if (f.quoted) return Value::text(f.text);
  if (f.text.empty()) return Value::null();
  if (auto num = parse_number_literal(f.text)) return *num;
  return Value::text(f.text);
}

}  // namespace detail

/// RFC-4180-style CSV. Unquoted numeric literals become numbers, empty
/// unquoted cells become Null, quoted cells are always text.
inline Table load_csv(std::string_view bytes, const CsvOptions& options = {}) {
  // UTF-8 BOM
  if (bytes.substr(0, 3) == "\xEF\xBB\xBF") bytes.remove_prefix(3);

  std::vector<std::vector<detail::CsvField>> records;
  std::vector<std::size_t> record_lines;
  std::vector<detail::CsvField> record;
  detail::CsvField field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field = {};
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record_lines.push_back(record_line);
    record.clear();
  };

  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const char ch = bytes[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < bytes.size() && bytes[i + 1] == '"') {
          field.text.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.text.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      in_quotes = true;
      field.quoted = true;
      field_started = true;
    } else if (ch == options.delimiter) {
      end_field();
    } else if (ch == '\r' && i + 1 < bytes.size() && bytes[i + 1] == '\n') {
      continue;
    } else if (ch == '\n') {
      end_record();
      ++line;
      record_line = line;
    } else {
      if (field.quoted) {
        throw ParseError("line " + std::to_string(line) + ": unexpected character after closing quote");
      }
      field.text.push_back(ch);
      field_started = true;
    }
  }
  if (in_quotes) throw ParseError("line " + std::to_string(record_line) + ": unterminated quoted field");
  if (field_started || !record.empty()) end_record();

  if (records.empty()) throw ParseError("line 1: missing header row");

  std::vector<std::string> names;
  for (auto& f : records.front()) names.push_back(std::move(f.text));
  {
    std::unordered_set<std::string> seen;
    for (const auto& n : names) {
      if (n.empty()) throw ParseError("line 1: empty column name");
      if (!seen.insert(n).second) throw ParseError("line 1: duplicate column name '" + n + "'");
    }
  }

  std::vector<Row> rows;
  rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != names.size()) {
      throw ParseError("line " + std::to_string(record_lines[r]) + ": expected " +
                       std::to_string(names.size()) + " fields, found " + std::to_string(rec.size()));
    }
    Row row;
    row.reserve(rec.size());
    for (const auto& f : rec) row.push_back(detail::csv_cell(f));
    rows.push_back(std::move(row));
  }
  return Table(std::move(names), std::move(rows));
}

namespace detail {

inline bool csv_needs_quotes(std::string_view s, char delim) {
  if (s.empty()) return true;
  if (parse_number_literal(s)) return true;
  return s.find_first_of(std::string{delim, '"', '\n', '\r'}) != std::string_view::npos;
}

inline void csv_write_field(std::string& out, std::string_view s, bool quote) {
  if (!quote) {
    out += s;
    return;
  }
  out.push_back('"');
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
}

}  // namespace detail

/// Inverse of load_csv for tables loaded from CSV.
inline std::string to_csv(const Table& table, const CsvOptions& options = {}) {
  std::string out;
  const char d = options.delimiter;
  for (std::size_t c = 0; c < table.column_count(); ++c) {
    if (c) out.push_back(d);
    const auto& name = table.columns()[c].name;
    detail::csv_write_field(out, name, name.find_first_of(std::string{d, '"', '\n', '\r'}) != std::string::npos);
  }
  out.push_back('\n');
  for (const auto& row : table.rows()) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out.push_back(d);
      const Value& v = row[c];
      if (v.is_null()) continue;
      if (v.is_number()) {
        out += format_number(v.as_number());
      } else if (v.is_bool()) {
        out += v.as_bool() ? "true" : "false";
      } else {
        detail::csv_write_field(out, v.as_text(), detail::csv_needs_quotes(v.as_text(), d));
      }
    }
    out.push_back('\n');
  }
  return out;
}

// JSON rows ------------------------------------------------------------------

/// Top-level array of flat objects. Columns are the union of keys in order of
/// first appearance; absent keys are Null.
inline Table load_json_rows(std::string_view bytes) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ParseError("JSON data must be a top-level array of objects");

  std::vector<std::string> names;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < doc.size(); ++r) {
    if (!doc[r].is_object()) throw ParseError("JSON row " + std::to_string(r) + " is not an object");
    for (const auto& [key, _] : doc[r].items()) {
      if (seen.insert(key).second) names.push_back(key);
    }
  }

  std::vector<Row> rows;
  rows.reserve(doc.size());
  for (std::size_t r = 0; r < doc.size(); ++r) {
    Row row(names.size());
    for (std::size_t c = 0; c < names.size(); ++c) {
      auto it = doc[r].find(names[c]);
      if (it == doc[r].end() || it->is_null()) continue;
      if (it->is_number()) {
        row[c] = Value::number(it->get<double>());
      } else if (it->is_string()) {
        row[c] = Value::text(it->get<std::string>());
      } else if (it->is_boolean()) {
        row[c] = Value::boolean(it->get<bool>());
      } else {
        throw ParseError("JSON row " + std::to_string(r) + " key '" + names[c] + "' is not a scalar");
      }
    }
    rows.push_back(std::move(row));
  }
  return Table(std::move(names), std::move(rows));
}

/// Picks the loader from the first non-whitespace byte: '[' means JSON rows.
inline Table load_table(std::string_view bytes) {
  auto pos = bytes.find_first_not_of(" \t\r\n");
  if (pos != std::string_view::npos && bytes[pos] == '[') return load_json_rows(bytes);
  return load_csv(bytes);
}

}  // namespace mtv
