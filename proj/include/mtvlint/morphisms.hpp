#pragma once

// Data perturbations (applied to the table) and visual perturbations
// (applied to the spec or the rendered image).

#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mtvlint/chartspec.hpp"
#include "mtvlint/data.hpp"
#include "mtvlint/raster.hpp"
#include "mtvlint/rng.hpp"
#include "mtvlint/scene.hpp"

namespace mtv {

// Data morphisms ----------------------------------------------------------------

namespace morph {

struct Identity {
  friend bool operator==(const Identity&, const Identity&) = default;
};
struct Shuffle {
  friend bool operator==(const Shuffle&, const Shuffle&) = default;
};
struct Bootstrap {
  std::string category_field, value_field;
  friend bool operator==(const Bootstrap&, const Bootstrap&) = default;
};
struct ContractRecords {
  std::string category_field, value_field;
  friend bool operator==(const ContractRecords&, const ContractRecords&) = default;
};
struct RandomizeAssignment {
  std::string category_field, value_field;
  friend bool operator==(const RandomizeAssignment&, const RandomizeAssignment&) = default;
};

struct IdentityVisual {
  friend bool operator==(const IdentityVisual&, const IdentityVisual&) = default;
};
struct OpacityScale {
  double factor = 0.5;
  friend bool operator==(const OpacityScale&, const OpacityScale&) = default;
};

}  // namespace morph

using DataMorphism =
    std::variant<morph::Identity, morph::Shuffle, morph::Bootstrap, morph::ContractRecords, morph::RandomizeAssignment>;
using VisualMorphism = std::variant<morph::IdentityVisual, morph::OpacityScale>;

/// Name used in reports; also the stream tag mixed into per-trial seeds.
inline std::string_view morphism_name(const DataMorphism& m) {
  static constexpr std::string_view names[] = {"identity", "shuffle", "bootstrap", "contract", "randomize"};
  return names[m.index()];
}
inline std::uint64_t morphism_tag(const DataMorphism& m) { return m.index(); }

inline std::string_view morphism_name(const VisualMorphism& m) {
  return std::holds_alternative<morph::IdentityVisual>(m) ? "identity" : "opacity";
}

namespace detail {

/// Groups by category in ascending category order; rows with a Null category
/// are returned separately.
struct Grouping {
  std::vector<std::vector<RowIndex>> groups;
  std::vector<RowIndex> ungrouped;
};

inline Grouping group_rows(const Table& table, std::string_view category_field, std::string_view value_field) {
  table.column_index(value_field);  // existence check
  Grouping out;
  for (auto& g : aggregate_groups(table, category_field, value_field, Aggregate::Count)) {
    if (g.category.is_null()) {
      out.ungrouped = std::move(g.provenance);
    } else {
      out.groups.push_back(std::move(g.provenance));
    }
  }
  return out;
}

}  // namespace detail

inline Table shuffle_rows(const Table& table, Rng& rng) {
  std::vector<RowIndex> idx(table.row_count());
  std::iota(idx.begin(), idx.end(), RowIndex{0});
  rng.shuffle(idx);
  return select_rows(table, idx);
}

/// Resamples every category group with replacement to its own size. Groups
/// are emitted in category order, Null-category rows last and untouched.
inline Table bootstrap_groups(const Table& table, std::string_view category_field, std::string_view value_field,
                              Rng& rng) {
  const auto grouping = detail::group_rows(table, category_field, value_field);
  std::vector<RowIndex> idx;
  idx.reserve(table.row_count());
  for (const auto& g : grouping.groups) {
    for (std::size_t k = 0; k < g.size(); ++k) idx.push_back(g[rng.uniform_below(g.size())]);
  }
  idx.insert(idx.end(), grouping.ungrouped.begin(), grouping.ungrouped.end());
  return select_rows(table, idx);
}

/// Shrinks every group to the smallest group size by sampling without
/// replacement.
inline Table contract_groups(const Table& table, std::string_view category_field, std::string_view value_field,
                             Rng& rng) {
  auto grouping = detail::group_rows(table, category_field, value_field);
  if (grouping.groups.empty()) return table;
  std::size_t m = grouping.groups.front().size();
  for (const auto& g : grouping.groups) m = std::min(m, g.size());

  std::vector<RowIndex> idx;
  for (auto& g : grouping.groups) {
    // partial Fisher-Yates: first m slots become a uniform m-subset
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(g.size() - i));
      std::swap(g[i], g[j]);
    }
    idx.insert(idx.end(), g.begin(), g.begin() + static_cast<std::ptrdiff_t>(m));
  }
  idx.insert(idx.end(), grouping.ungrouped.begin(), grouping.ungrouped.end());
  return select_rows(table, idx);
}

/// Permutes the value column across rows; every other column stays put.
inline Table randomize_assignment(const Table& table, std::string_view category_field, std::string_view value_field,
                                  Rng& rng) {
  table.column_index(category_field);
  const std::size_t vc = table.column_index(value_field);
  std::vector<RowIndex> perm(table.row_count());
  std::iota(perm.begin(), perm.end(), RowIndex{0});
  rng.shuffle(perm);
  std::vector<Row> rows = table.rows();
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r][vc] = table.rows()[perm[r]][vc];
  return table.with_rows(std::move(rows));
}

inline Table apply_data(const DataMorphism& m, const Table& table, Rng& rng) {
  return std::visit(
      [&](const auto& mm) -> Table {
        using T = std::decay_t<decltype(mm)>;
        if constexpr (std::is_same_v<T, morph::Identity>) {
          return table;
        } else if constexpr (std::is_same_v<T, morph::Shuffle>) {
          return shuffle_rows(table, rng);
        } else if constexpr (std::is_same_v<T, morph::Bootstrap>) {
          return bootstrap_groups(table, mm.category_field, mm.value_field, rng);
        } else if constexpr (std::is_same_v<T, morph::ContractRecords>) {
          return contract_groups(table, mm.category_field, mm.value_field, rng);
        } else {
          return randomize_assignment(table, mm.category_field, mm.value_field, rng);
        }
      },
      m);
}

/// Grouped morphism by report name: "bootstrap", "contract" or "randomize".
inline DataMorphism grouped_morphism(std::string_view name, const std::string& category_field,
                                     const std::string& value_field) {
  if (name == "bootstrap") return morph::Bootstrap{category_field, value_field};
  if (name == "contract") return morph::ContractRecords{category_field, value_field};
  if (name == "randomize") return morph::RandomizeAssignment{category_field, value_field};
  throw Error("unknown grouped morphism '" + std::string(name) + "'");
}

// Visual morphisms -------------------------------------------------------------------

inline void check_factor(double f) {
  if (!(f > 0.0 && f <= 1.0)) throw Error("opacity factor must lie in (0, 1], got " + format_number(f));
}

/// Spec side of the visual morphism.
inline ChartSpec apply_visual(const VisualMorphism& m, ChartSpec spec) {
  if (const auto* o = std::get_if<morph::OpacityScale>(&m)) {
    check_factor(o->factor);
    spec.opacity *= o->factor;
  }
  return spec;
}

/// Image side: the predicted rendering of the visually morphed spec.
inline RasterImage apply_visual(const VisualMorphism& m, const RasterImage& img) {
  if (const auto* o = std::get_if<morph::OpacityScale>(&m)) return blend_toward_background(img, o->factor);
  return img;
}

}  // namespace mtv
