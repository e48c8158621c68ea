#pragma once

// Chart linting: runs the applicable metamorphic tests on one chart and turns
// failures into mirage warnings.

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtvlint/chartspec.hpp"
#include "mtvlint/data.hpp"
#include "mtvlint/morphisms.hpp"
#include "mtvlint/mtv.hpp"

namespace mtv {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr std::array<std::string_view, 5> kLintTests = {"shuffle", "opacity", "bootstrap", "contract",
                                                               "randomize"};

/// Default pixel-count threshold: exact for aggregated charts, a little slack
/// for unaggregated ones.
inline std::size_t default_pixel_threshold(const ChartSpec& spec) { return spec.is_aggregated() ? 0 : 16; }

struct LintConfig {
  int trials = 100;
  double epsilon = 0.95;
  std::uint64_t seed = 0;
  double opacity_factor = 0.5;
  std::optional<std::size_t> pixel_threshold;  // default_pixel_threshold when empty
  double bar_tolerance = 0.0;
  /// Randomize: observed height gap must exceed this many randomized standard
  /// deviations to count as signal.
  double signal_ratio = 2.0;
  std::set<std::string> disabled;
};

struct TestReport {
  std::string name;
  bool applicable = true;
  Verdict verdict = Verdict::NotApplicable;
  std::optional<double> pass_fraction;
  std::optional<double> statistic;
  std::string statistic_name;
  std::string message;
};

struct LintReport {
  std::optional<ChartSpec> spec;
  std::vector<ValidationIssue> issues;
  std::vector<TestReport> tests;
  LintConfig config;

  bool valid() const { return spec.has_value() && !has_errors(issues); }
  bool any_fail() const {
    return std::any_of(tests.begin(), tests.end(), [](const auto& t) { return t.verdict == Verdict::Fail; });
  }
};

namespace detail {

inline std::string percent(double f) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.0f%%", f * 100.0);
  return buf;
}

inline TestReport not_applicable(std::string name, std::string why) {
  TestReport r;
  r.name = std::move(name);
  r.applicable = false;
  r.verdict = Verdict::NotApplicable;
  r.message = std::move(why);
  return r;
}

inline std::optional<double> max_diff(const MtvOutcome& o) {
  std::optional<double> best;
  for (const auto& t : o.trials) {
    if (t.diff) best = std::max(best.value_or(0.0), static_cast<double>(*t.diff));
  }
  return best;
}

/// Mean squared gap between consecutive bars of the unperturbed chart.
inline double observed_gap_sq(const HeightList& h) {
  if (h.size() < 2) return 0.0;
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < h.size(); ++j) s += (h[j + 1].second - h[j].second) * (h[j + 1].second - h[j].second);
  return s / static_cast<double>(h.size() - 1);
}

}  // namespace detail

/// Runs shuffle and opacity on every chart, and the grouped tests on
/// aggregated bar charts. The spec must validate against the table.
inline LintReport lint_chart(const ChartSpec& spec, const Table& table, const LintConfig& config = {}) {
  LintReport report;
  report.config = config;
  report.spec = spec;
  report.issues = validate_spec(spec, table);
  if (has_errors(report.issues)) return report;

  const std::size_t threshold = config.pixel_threshold.value_or(default_pixel_threshold(spec));
  const bool enabled_shuffle = !config.disabled.contains("shuffle");
  const auto roles = aggregate_roles(spec);
  const bool bar_agg = spec.mark == MarkKind::Bar && roles.has_value();

  auto base_config = [&](DataMorphism alpha, EqualityMeasure eq, int trials) {
    MtvConfig c;
    c.alpha = std::move(alpha);
    c.eq = std::move(eq);
    c.trials = trials;
    c.pass_threshold = config.epsilon;
    c.seed = config.seed;
    return c;
  };

  if (enabled_shuffle) {
    const auto out = run_statistical(base_config(morph::Shuffle{}, eq::PixelCount{threshold, 0}, config.trials),
                                     spec, table);
    TestReport r{"shuffle", true, out.verdict, out.pass_fraction, detail::max_diff(out), "max_pixel_diff", {}};
    r.message = out.verdict == Verdict::Pass
                    ? "rendering is stable under row reordering"
                    : "Overplotting: the image depends on row order (" + detail::percent(out.pass_fraction) +
                          " of shuffles within " + std::to_string(threshold) +
                          " px); overlapping marks hide each other, so draw order changes what is visible";
    report.tests.push_back(std::move(r));
  }

  if (!config.disabled.contains("opacity")) {
    auto c = base_config(morph::Identity{}, eq::PixelCount{threshold, 1}, 1);
    c.omega = morph::OpacityScale{config.opacity_factor};
    c.pass_threshold = 1.0;
    const auto out = run_statistical(c, spec, table);
    TestReport r{"opacity", true, out.verdict, out.pass_fraction, detail::max_diff(out), "pixel_diff", {}};
    r.message = out.verdict == Verdict::Pass
                    ? "lowering mark opacity fades the chart uniformly; no overlapping marks"
                    : "Overplotting: lowering mark opacity reveals stacked marks (" +
                          format_number(r.statistic.value_or(0)) +
                          " px differ from a uniform fade); marks occupy the same space and may hide values";
    report.tests.push_back(std::move(r));
  }

  const std::array<std::pair<std::string, std::string>, 3> grouped = {{
      {"bootstrap", "resampling rows within each bar"},
      {"contract", "contracting every bar to the smallest group size"},
      {"randomize", "randomizing the category-value assignment"},
  }};
  for (const auto& [name, what] : grouped) {
    if (config.disabled.contains(name)) continue;
    if (!bar_agg) {
      report.tests.push_back(detail::not_applicable(name, "requires an aggregated bar chart"));
      continue;
    }
    const std::string& cat = spec.encodings.at(roles->category).field;
    const std::string& val = spec.encodings.at(roles->value).field;
    const auto out =
        run_statistical(base_config(grouped_morphism(name, cat, val), eq::BarHeightOrder{config.bar_tolerance},
                                    config.trials),
                        spec, table);
    TestReport r{name, true, out.verdict, out.pass_fraction, out.height_diff_variance, "height_diff_variance", {}};
    const std::string kept = detail::percent(out.pass_fraction) + " of trials kept the bar order";
    if (name == "bootstrap") {
      r.message = out.verdict == Verdict::Pass
                      ? "bar order is robust to " + what + " (" + kept + ")"
                      : "Sampling error / outliers: bar order changes when " + what + " (" + kept +
                            "); the difference may be driven by a few extreme values or high variability";
    } else if (name == "contract") {
      r.message = out.verdict == Verdict::Pass
                      ? "bar order is robust to " + what + " (" + kept + ")"
                      : "Unequal group sizes: bar order changes when " + what + " (" + kept +
                            "); some bars may rest on too few records";
    } else {
      // Randomize reads the other way round: a chart that looks the same
      // with the relationship destroyed carries no real signal.
      const double var = out.height_diff_variance.value_or(0.0);
      const double gap_sq = out.baseline_heights ? detail::observed_gap_sq(*out.baseline_heights) : 0.0;
      const bool signal = gap_sq > 0.0 && (var == 0.0 || gap_sq > config.signal_ratio * config.signal_ratio * var);
      r.verdict = signal ? Verdict::Pass : Verdict::Fail;
      r.message = signal ? "heuristic: observed bar differences exceed what " + what +
                               " produces; the difference looks like signal"
                         : "Signal-to-noise (heuristic): " + what +
                               " yields charts much like the original; the differences between bars may be noise";
    }
    report.tests.push_back(std::move(r));
  }
  return report;
}

inline nlohmann::json to_json(const LintReport& r) {
  using nlohmann::json;
  json issues = json::array();
  for (const auto& i : r.issues) {
    issues.push_back({{"severity", i.severity == Severity::Error ? "error" : "warning"}, {"message", i.message}});
  }
  json tests = json::array();
  for (const auto& t : r.tests) {
    tests.push_back({{"name", t.name},
                     {"applicability", t.applicable ? "applicable" : "not-applicable"},
                     {"verdict", std::string(to_string(t.verdict))},
                     {"pass_fraction", t.pass_fraction ? json(*t.pass_fraction) : json(nullptr)},
                     {"statistic", t.statistic ? json(*t.statistic) : json(nullptr)},
                     {"statistic_name", t.statistic_name.empty() ? json(nullptr) : json(t.statistic_name)},
                     {"message", t.message}});
  }
  json chart = nullptr;
  if (r.spec) {
    json enc = json::object();
    for (const auto& [ch, e] : r.spec->encodings) {
      enc[std::string(to_string(ch))] = {{"field", e.field},
                                         {"type", std::string(to_string(e.type))},
                                         {"aggregate", std::string(to_string(e.aggregate))}};
    }
    chart = {{"mark", std::string(to_string(r.spec->mark))}, {"encoding", enc}};
  }
  json disabled = json::array();
  for (const auto& d : r.config.disabled) disabled.push_back(d);
  return {{"tool", "mtvlint"},
          {"version", std::string(kToolVersion)},
          {"seed", r.config.seed},
          {"chart", chart},
          {"config",
           {{"trials", r.config.trials},
            {"epsilon", r.config.epsilon},
            {"opacity_factor", r.config.opacity_factor},
            {"pixel_threshold", r.config.pixel_threshold ? json(*r.config.pixel_threshold) : json(nullptr)},
            {"bar_tolerance", r.config.bar_tolerance},
            {"signal_ratio", r.config.signal_ratio},
            {"disabled", disabled}}},
          {"validation", issues},
          {"tests", tests}};
}

}  // namespace mtv
