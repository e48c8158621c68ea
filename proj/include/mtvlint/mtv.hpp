#pragma once

// Metamorphic test runner. One trial checks
//
//     Eq( render(alpha(data), omega(spec)),  omega(render(data, spec)) )
//
// and a statistical run repeats it over N independently seeded trials,
// passing when at least a fraction epsilon of the trials pass.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mtvlint/chartspec.hpp"
#include "mtvlint/data.hpp"
#include "mtvlint/morphisms.hpp"
#include "mtvlint/raster.hpp"
#include "mtvlint/rng.hpp"
#include "mtvlint/scene.hpp"

namespace mtv {

// Equality measures ---------------------------------------------------------------

namespace eq {

/// Pass when at most `threshold` pixels differ by more than
/// `channel_tolerance` in some channel.
struct PixelCount {
  std::size_t threshold = 0;
  int channel_tolerance = 0;
  friend bool operator==(const PixelCount&, const PixelCount&) = default;
};
/// Pass when the category ranking by bar height is unchanged.
struct BarHeightOrder {
  double tolerance = 0.0;
  friend bool operator==(const BarHeightOrder&, const BarHeightOrder&) = default;
};
struct Chi2Histogram {
  double threshold = 0.0;
  friend bool operator==(const Chi2Histogram&, const Chi2Histogram&) = default;
};
/// Pass when bar `greater` stays strictly above bar `lesser`.
struct InsightPreserved {
  std::string greater, lesser;
  friend bool operator==(const InsightPreserved&, const InsightPreserved&) = default;
};

}  // namespace eq

using EqualityMeasure = std::variant<eq::PixelCount, eq::BarHeightOrder, eq::Chi2Histogram, eq::InsightPreserved>;

inline bool needs_bar_heights(const EqualityMeasure& m) {
  return std::holds_alternative<eq::BarHeightOrder>(m) || std::holds_alternative<eq::InsightPreserved>(m);
}

using HeightList = std::vector<std::pair<Value, double>>;

/// Ranking comparison with ties: two categories whose values lie within
/// `tolerance` are tied, and a tie is compatible with either order.
inline bool bar_order_equal(const HeightList& a, const HeightList& b, double tolerance) {
  if (a.size() != b.size()) throw Error("bar_order_equal: category sets differ");
  std::vector<double> bv(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto it = std::find_if(b.begin(), b.end(), [&](const auto& e) { return e.first == a[i].first; });
    if (it == b.end()) throw Error("bar_order_equal: category '" + a[i].first.label() + "' missing");
    bv[i] = it->second;
  }
  auto rel = [tolerance](double u, double v) { return std::abs(u - v) <= tolerance ? 0 : (u < v ? -1 : 1); };
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const int ra = rel(a[i].second, a[j].second), rb = rel(bv[i], bv[j]);
      if (ra != 0 && rb != 0 && ra != rb) return false;
    }
  }
  return true;
}

/// Sample variance (N-1 divisor) of the height difference between
/// consecutive baseline categories, averaged over consecutive pairs. For a
/// two-bar chart this is the variance of value(second) - value(first).
inline double variance_of_height_difference(std::span<const HeightList> trials, const HeightList& baseline) {
  if (trials.size() < 2) throw Error("height-difference variance needs at least 2 trials");
  if (baseline.size() < 2) throw Error("height-difference variance needs at least 2 categories");
  auto lookup = [](const HeightList& h, const Value& cat) {
    for (const auto& [c, v] : h) {
      if (c == cat) return v;
    }
    throw Error("trial is missing category '" + cat.label() + "'");
  };
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < baseline.size(); ++j) {
    std::vector<double> d;
    d.reserve(trials.size());
    for (const auto& t : trials) d.push_back(lookup(t, baseline[j + 1].first) - lookup(t, baseline[j].first));
    // shifted by the first value so identical differences give exactly 0
    const double shift = d.front();
    for (double& x : d) x -= shift;
    double mean = 0.0;
    for (double x : d) mean += x;
    mean /= static_cast<double>(d.size());
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    total += ss / static_cast<double>(d.size() - 1);
  }
  return total / static_cast<double>(baseline.size() - 1);
}

// Configuration and outcomes ---------------------------------------------------------

struct MtvConfig {
  DataMorphism alpha = morph::Identity{};
  VisualMorphism omega = morph::IdentityVisual{};
  EqualityMeasure eq = eq::PixelCount{};
  int trials = 100;
  double pass_threshold = 0.95;  // epsilon
  std::uint64_t seed = 0;
};

enum class Verdict { Pass, Fail, NotApplicable };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::NotApplicable: return "not-applicable";
  }
  return "not-applicable";
}

struct TrialRecord {
  bool applicable = true;
  bool pass = false;
  std::optional<HeightList> heights;
  std::optional<std::size_t> diff;
  std::optional<double> chi2;
};

struct MtvOutcome {
  std::vector<TrialRecord> trials;
  double pass_fraction = 0.0;
  Verdict verdict = Verdict::NotApplicable;
  std::optional<double> height_diff_variance;
  std::optional<HeightList> baseline_heights;
  MtvConfig config;
};

// Running --------------------------------------------------------------------------------

/// The untouched side of the relation, computed once per statistical run.
class Baseline {
 public:
  Baseline(const ChartSpec& spec, const Table& table) : spec_(spec), table_(table), scene_(compile(spec, table)) {
    if (is_aggregated_bar()) heights_ = bar_heights(scene_);
  }

  const ChartSpec& spec() const { return spec_; }
  const Table& table() const { return table_; }
  const SceneGraph& scene() const { return scene_; }
  bool is_aggregated_bar() const { return scene_.mark_kind == MarkKind::Bar && scene_.aggregated; }
  const std::optional<HeightList>& heights() const { return heights_; }

  /// omega(render(x)), cached per visual morphism.
  const RasterImage& expected_image(const VisualMorphism& omega) {
    auto key = omega.index();
    auto it = images_.find(key);
    if (it == images_.end()) {
      if (!plain_) plain_ = rasterize(scene_);
      it = images_.emplace(key, apply_visual(omega, *plain_)).first;
    }
    return it->second;
  }

 private:
  const ChartSpec& spec_;
  const Table& table_;
  SceneGraph scene_;
  std::optional<HeightList> heights_;
  std::optional<RasterImage> plain_;
  std::map<std::size_t, RasterImage> images_;
};

inline bool is_applicable(const EqualityMeasure& eq, const Baseline& base) {
  return !needs_bar_heights(eq) || base.is_aggregated_bar();
}

inline TrialRecord run_trial(Baseline& base, const DataMorphism& alpha, const VisualMorphism& omega,
                             const EqualityMeasure& eq, Rng& rng) {
  TrialRecord rec;
  if (!is_applicable(eq, base)) {
    rec.applicable = false;
    return rec;
  }
  const Table morphed = apply_data(alpha, base.table(), rng);
  const ChartSpec spec = apply_visual(omega, base.spec());
  const SceneGraph scene = compile(spec, morphed);
  if (base.is_aggregated_bar()) rec.heights = bar_heights(scene);

  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, eq::PixelCount>) {
          rec.diff = pixel_diff(rasterize(scene), base.expected_image(omega), m.channel_tolerance);
          rec.pass = *rec.diff <= m.threshold;
        } else if constexpr (std::is_same_v<T, eq::Chi2Histogram>) {
          rec.chi2 = chi2_histogram_distance(rasterize(scene), base.expected_image(omega));
          rec.pass = *rec.chi2 <= m.threshold;
        } else if constexpr (std::is_same_v<T, eq::BarHeightOrder>) {
          rec.pass = bar_order_equal(*base.heights(), *rec.heights, m.tolerance);
        } else {
          auto value_of = [&](const std::string& label) {
            for (const auto& [c, v] : *rec.heights) {
              if (c.label() == label) return v;
            }
            throw Error("insight category '" + label + "' not present in chart");
          };
          rec.pass = value_of(m.greater) > value_of(m.lesser);
        }
      },
      eq);
  return rec;
}

/// One metamorphic trial.
inline TrialRecord run_single(const ChartSpec& spec, const Table& table, const DataMorphism& alpha,
                              const VisualMorphism& omega, const EqualityMeasure& eq, Rng& rng) {
  Baseline base(spec, table);
  return run_trial(base, alpha, omega, eq, rng);
}

/// N trials with per-trial seeds derived from (seed, morphism, trial index),
/// so each trial is reproducible on its own.
inline MtvOutcome run_statistical(const MtvConfig& config, const ChartSpec& spec, const Table& table) {
  if (config.trials < 1) throw Error("trials must be at least 1");
  if (!(config.pass_threshold >= 0.0 && config.pass_threshold <= 1.0)) throw Error("epsilon must lie in [0, 1]");

  MtvOutcome out;
  out.config = config;
  Baseline base(spec, table);
  out.baseline_heights = base.heights();
  if (!is_applicable(config.eq, base)) {
    out.verdict = Verdict::NotApplicable;
    return out;
  }
  if (const auto* ins = std::get_if<eq::InsightPreserved>(&config.eq)) {
    for (const auto* label : {&ins->greater, &ins->lesser}) {
      const auto& h = *base.heights();
      if (std::none_of(h.begin(), h.end(), [&](const auto& e) { return e.first.label() == *label; })) {
        throw Error("insight category '" + *label + "' not present in chart");
      }
    }
  }

  std::size_t passes = 0;
  out.trials.reserve(static_cast<std::size_t>(config.trials));
  for (int t = 0; t < config.trials; ++t) {
    Rng rng(derive_seed(config.seed, morphism_tag(config.alpha), static_cast<std::uint64_t>(t)));
    out.trials.push_back(run_trial(base, config.alpha, config.omega, config.eq, rng));
    passes += out.trials.back().pass ? 1 : 0;
  }
  out.pass_fraction = static_cast<double>(passes) / static_cast<double>(config.trials);
  out.verdict = out.pass_fraction >= config.pass_threshold ? Verdict::Pass : Verdict::Fail;

  if (base.heights() && base.heights()->size() >= 2 && config.trials >= 2) {
    std::vector<HeightList> hs;
    hs.reserve(out.trials.size());
    for (const auto& tr : out.trials) hs.push_back(*tr.heights);
    out.height_diff_variance = variance_of_height_difference(hs, *base.heights());
  }
  return out;
}

// Serialization ----------------------------------------------------------------------------

inline nlohmann::json to_json(const HeightList& h) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [c, v] : h) arr.push_back({{"category", c.label()}, {"value", v}});
  return arr;
}

inline nlohmann::json to_json(const DataMorphism& m) {
  nlohmann::json j = {{"name", std::string(morphism_name(m))}};
  std::visit(
      [&](const auto& mm) {
        if constexpr (requires { mm.category_field; }) {
          j["category_field"] = mm.category_field;
          j["value_field"] = mm.value_field;
        }
      },
      m);
  return j;
}

inline nlohmann::json to_json(const VisualMorphism& m) {
  nlohmann::json j = {{"name", std::string(morphism_name(m))}};
  if (const auto* o = std::get_if<morph::OpacityScale>(&m)) j["factor"] = o->factor;
  return j;
}

inline nlohmann::json to_json(const EqualityMeasure& m) {
  return std::visit(
      [](const auto& e) -> nlohmann::json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, eq::PixelCount>) {
          return {{"name", "pixel-count"}, {"threshold", e.threshold}, {"channel_tolerance", e.channel_tolerance}};
        } else if constexpr (std::is_same_v<T, eq::BarHeightOrder>) {
          return {{"name", "bar-height-order"}, {"tolerance", e.tolerance}};
        } else if constexpr (std::is_same_v<T, eq::Chi2Histogram>) {
          return {{"name", "chi2-histogram"}, {"threshold", e.threshold}};
        } else {
          return {{"name", "insight-preserved"}, {"greater", e.greater}, {"lesser", e.lesser}};
        }
      },
      m);
}

inline nlohmann::json to_json(const MtvConfig& c) {
  return {{"alpha", to_json(c.alpha)}, {"omega", to_json(c.omega)}, {"eq", to_json(c.eq)},
          {"trials", c.trials},        {"epsilon", c.pass_threshold}, {"seed", c.seed}};
}

inline nlohmann::json to_json(const MtvOutcome& o) {
  using nlohmann::json;
  json trials = json::array();
  for (const auto& t : o.trials) {
    json jt = {{"pass", t.pass}};
    if (t.heights) jt["heights"] = to_json(*t.heights);
    if (t.diff) jt["diff"] = *t.diff;
    if (t.chi2) jt["chi2"] = *t.chi2;
    trials.push_back(std::move(jt));
  }
  const bool na = o.verdict == Verdict::NotApplicable;
  return {{"verdict", std::string(to_string(o.verdict))},
          {"pass_fraction", na ? json(nullptr) : json(o.pass_fraction)},
          {"height_diff_variance", o.height_diff_variance ? json(*o.height_diff_variance) : json(nullptr)},
          {"baseline_heights", o.baseline_heights ? to_json(*o.baseline_heights) : json(nullptr)},
          {"config", to_json(o.config)},
          {"seed", o.config.seed},
          {"trials", trials}};
}

}  // namespace mtv
