#pragma once

// Synthetic two-group bar-chart experiments: scenario generation, the
// 4 manipulations x 5 effect sizes x 30 replicates grid, summary statistics,
// and the four-dataset "same bar chart" fixtures.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "mtvlint/chartspec.hpp"
#include "mtvlint/data.hpp"
#include "mtvlint/morphisms.hpp"
#include "mtvlint/mtv.hpp"
#include "mtvlint/rng.hpp"

namespace mtv::sim {

enum class Manipulation { Mean, SampleSize, Outliers, Variance };

inline constexpr std::array<Manipulation, 4> kManipulations = {Manipulation::Mean, Manipulation::SampleSize,
                                                              Manipulation::Outliers, Manipulation::Variance};
inline constexpr std::array<std::string_view, 3> kTests = {"bootstrap", "contract", "randomize"};
inline constexpr int kEffectLevels = 5;
inline constexpr int kReplicates = 30;

inline constexpr int kBaseN = 50;
inline constexpr double kBaseMean = 50.0;
inline constexpr double kBaseSd = 10.0;

// Effect-size parameter tables, index 0 = effect level 1 (no manipulation).
inline constexpr std::array<double, 5> kMeanY = {50.0, 55.0, 60.0, 65.0, 70.0};
inline constexpr std::array<int, 5> kSampleSizeY = {50, 35, 25, 15, 8};
inline constexpr std::array<int, 5> kOutlierCount = {1, 2, 3, 4, 5};
inline constexpr std::array<double, 5> kSdY = {10.0, 15.0, 20.0, 25.0, 30.0};

inline std::string_view to_string(Manipulation m) {
  switch (m) {
    case Manipulation::Mean: return "mean";
    case Manipulation::SampleSize: return "sample_size";
    case Manipulation::Outliers: return "outliers";
    case Manipulation::Variance: return "variance";
  }
  return "mean";
}

struct SimScenario {
  Manipulation manipulation = Manipulation::Mean;
  int effect_index = 1;  // 1..5
  int replicate = 1;     // 1..30
  std::uint64_t seed = 0;
  friend bool operator==(const SimScenario&, const SimScenario&) = default;
};

struct TestStatistic {
  double height_diff_variance = 0.0;
  double pass_fraction = 0.0;
  friend bool operator==(const TestStatistic&, const TestStatistic&) = default;
};

struct SimResultCell {
  SimScenario scenario;
  std::map<std::string, TestStatistic> tests;
  friend bool operator==(const SimResultCell&, const SimResultCell&) = default;
};

// Quantiles ------------------------------------------------------------------------

/// Linear interpolation between order statistics (R type 7):
/// h = (n-1)p, q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
inline double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error("quantile of an empty list");
  if (!(p >= 0.0 && p <= 1.0)) throw Error("quantile probability must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

// Generation ------------------------------------------------------------------------------

inline Table two_group_table(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<Row> rows;
  rows.reserve(xs.size() + ys.size());
  for (double v : xs) rows.push_back({Value::text("X"), Value::number(v)});
  for (double v : ys) rows.push_back({Value::text("Y"), Value::number(v)});
  return Table({"category", "value"}, std::move(rows));
}

/// X and Y, 50 rows each, values N(50, 10^2). X is drawn first.
inline Table generate_baseline(Rng& rng) {
  std::vector<double> xs, ys;
  for (int i = 0; i < kBaseN; ++i) xs.push_back(rng.normal(kBaseMean, kBaseSd));
  for (int i = 0; i < kBaseN; ++i) ys.push_back(rng.normal(kBaseMean, kBaseSd));
  return two_group_table(xs, ys);
}

/// Baseline with Y's generator altered. Draw order is X (50 normals), then
/// Y's normals, then any outliers, so scenarios that share a seed share
/// their underlying noise across effect levels. Rows are emitted sorted by
/// value within each group: a resampled row index then picks a comparable
/// value at every effect level, which keeps the levels' trials paired.
inline Table generate_scenario(const SimScenario& s) {
  if (s.effect_index < 1 || s.effect_index > kEffectLevels) throw Error("effect index out of range");
  if (s.replicate < 1 || s.replicate > kReplicates) throw Error("replicate out of range");
  const std::size_t e = static_cast<std::size_t>(s.effect_index - 1);
  Rng rng(s.seed);

  double mean_y = kBaseMean, sd_y = kBaseSd;
  int n_y = kBaseN;
  switch (s.manipulation) {
    case Manipulation::Mean: mean_y = kMeanY[e]; break;
    case Manipulation::SampleSize: n_y = kSampleSizeY[e]; break;
    case Manipulation::Variance: sd_y = kSdY[e]; break;
    case Manipulation::Outliers: break;
  }

  std::vector<double> xs, ys;
  for (int i = 0; i < kBaseN; ++i) xs.push_back(rng.normal(kBaseMean, kBaseSd));
  for (int i = 0; i < n_y; ++i) ys.push_back(rng.normal(mean_y, sd_y));
  if (s.manipulation == Manipulation::Outliers) {
    const double q1 = quantile(ys, 0.25), q3 = quantile(ys, 0.75);
    const double iqr = q3 - q1;
    const double lo = q3 + 1.5 * iqr, hi = q3 + 3.0 * iqr;
    for (int k = 0; k < kOutlierCount[e]; ++k) ys.push_back(rng.uniform(lo, hi));
  }
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  return two_group_table(xs, ys);
}

/// Mean-aggregated two-bar chart used throughout the simulation.
inline ChartSpec two_bar_spec() {
  ChartSpec spec;
  spec.mark = MarkKind::Bar;
  spec.encodings[Channel::X] = Encoding{"category", FieldType::Nominal, Aggregate::None, true};
  spec.encodings[Channel::Y] = Encoding{"value", FieldType::Quantitative, Aggregate::Mean, true};
  return spec;
}

/// Runs the three grouped tests on one scenario.
inline SimResultCell run_cell(const SimScenario& s, int trials) {
  const Table table = generate_scenario(s);
  const ChartSpec spec = two_bar_spec();
  SimResultCell cell{s, {}};
  for (std::size_t t = 0; t < kTests.size(); ++t) {
    MtvConfig cfg;
    cfg.alpha = grouped_morphism(kTests[t], "category", "value");
    cfg.eq = eq::BarHeightOrder{0.0};
    cfg.trials = trials;
    cfg.seed = derive_seed(s.seed, 0x7e57 + t);
    const MtvOutcome out = run_statistical(cfg, spec, table);
    cell.tests[std::string(kTests[t])] = TestStatistic{out.height_diff_variance.value_or(0.0), out.pass_fraction};
  }
  return cell;
}

/// Seed of a scenario. The effect level is deliberately not an input, so the
/// five levels of one replicate differ only in the manipulation itself.
inline std::uint64_t scenario_seed(std::uint64_t master, Manipulation m, int replicate) {
  return derive_seed(master, 0x5ce0 + static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(replicate));
}

/// Every (manipulation, effect, replicate) cell, ordered by those keys.
inline std::vector<SimResultCell> run_experiment(std::uint64_t master_seed, int trials,
                                                 int replicates = kReplicates) {
  if (trials < 2) throw Error("simulation needs at least 2 trials per test");
  if (replicates < 1 || replicates > kReplicates) throw Error("replicates must lie in [1, 30]");
  std::vector<SimResultCell> cells;
  cells.reserve(kManipulations.size() * kEffectLevels * static_cast<std::size_t>(replicates));
  for (Manipulation m : kManipulations) {
    for (int e = 1; e <= kEffectLevels; ++e) {
      for (int r = 1; r <= replicates; ++r) {
        cells.push_back(run_cell(SimScenario{m, e, r, scenario_seed(master_seed, m, r)}, trials));
      }
    }
  }
  return cells;
}

// Summary ------------------------------------------------------------------------------------

struct SummaryRow {
  Manipulation manipulation = Manipulation::Mean;
  std::string test;
  int effect_index = 1;
  double median = 0, q1 = 0, q3 = 0, min = 0, max = 0;
  int n_replicates = 0;
  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

/// Five-number summary of height-difference variance per (manipulation,
/// test, effect level). Throws listing the missing cells when the grid has
/// gaps.
inline std::vector<SummaryRow> summarize(const std::vector<SimResultCell>& cells, int replicates = kReplicates) {
  std::map<std::tuple<int, std::string, int>, std::vector<double>> buckets;
  std::map<std::tuple<int, int, int>, int> seen;
  for (const auto& c : cells) {
    const auto& s = c.scenario;
    ++seen[{static_cast<int>(s.manipulation), s.effect_index, s.replicate}];
    for (const auto& [name, stat] : c.tests) {
      buckets[{static_cast<int>(s.manipulation), name, s.effect_index}].push_back(stat.height_diff_variance);
    }
  }
  std::vector<std::string> missing;
  for (Manipulation m : kManipulations) {
    for (int e = 1; e <= kEffectLevels; ++e) {
      for (int r = 1; r <= replicates; ++r) {
        auto it = seen.find({static_cast<int>(m), e, r});
        if (it == seen.end()) {
          missing.push_back(std::string(to_string(m)) + "/e" + std::to_string(e) + "/r" + std::to_string(r));
        }
      }
      for (auto t : kTests) {
        auto it = buckets.find({static_cast<int>(m), std::string(t), e});
        if (it == buckets.end() || static_cast<int>(it->second.size()) < replicates) {
          if (seen.contains({static_cast<int>(m), e, 1})) {
            missing.push_back(std::string(to_string(m)) + "/e" + std::to_string(e) + "/" + std::string(t));
          }
        }
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "incomplete simulation grid; missing:";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
    if (missing.size() > 20) msg += " ... (" + std::to_string(missing.size()) + " total)";
    throw Error(msg);
  }

  std::vector<SummaryRow> rows;
  for (Manipulation m : kManipulations) {
    for (auto t : kTests) {
      for (int e = 1; e <= kEffectLevels; ++e) {
        const auto& v = buckets.at({static_cast<int>(m), std::string(t), e});
        SummaryRow row;
        row.manipulation = m;
        row.test = std::string(t);
        row.effect_index = e;
        row.median = quantile(v, 0.5);
        row.q1 = quantile(v, 0.25);
        row.q3 = quantile(v, 0.75);
        row.min = *std::min_element(v.begin(), v.end());
        row.max = *std::max_element(v.begin(), v.end());
        row.n_replicates = static_cast<int>(v.size());
        rows.push_back(row);
      }
    }
  }
  return rows;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "manipulation,test,effect_index,median_var,q1,q3,min,max,n_replicates\n";
  for (const auto& r : rows) {
    out += std::string(to_string(r.manipulation)) + "," + r.test + "," + std::to_string(r.effect_index) + "," +
           format_number(r.median) + "," + format_number(r.q1) + "," + format_number(r.q3) + "," +
           format_number(r.min) + "," + format_number(r.max) + "," + std::to_string(r.n_replicates) + "\n";
  }
  return out;
}

inline nlohmann::json to_json(const SimResultCell& c) {
  nlohmann::json tests = nlohmann::json::object();
  for (const auto& [name, s] : c.tests) {
    tests[name] = {{"height_diff_variance", s.height_diff_variance}, {"pass_fraction", s.pass_fraction}};
  }
  return {{"manipulation", std::string(to_string(c.scenario.manipulation))},
          {"effect_index", c.scenario.effect_index},
          {"replicate", c.scenario.replicate},
          {"seed", c.scenario.seed},
          {"tests", tests}};
}

// Trend checks -------------------------------------------------------------------------------

/// Spearman rank correlation with average ranks for ties. Zero when either
/// side is constant.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw Error("spearman needs two equal-length lists of length >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

struct TrendCheck {
  Manipulation manipulation;
  std::string test;
  std::vector<double> medians;  // effect levels 1..5
  double rho = 0.0;
  bool pass = false;
};

inline constexpr double kTrendRho = 0.8;

/// The (manipulation, test) pairs whose median variance should grow with
/// effect size.
inline std::vector<TrendCheck> trend_checks(const std::vector<SummaryRow>& rows) {
  const std::vector<std::pair<Manipulation, std::string>> wanted = {{Manipulation::Variance, "bootstrap"},
                                                                    {Manipulation::Outliers, "bootstrap"},
                                                                    {Manipulation::SampleSize, "contract"},
                                                                    {Manipulation::Mean, "randomize"}};
  std::vector<TrendCheck> out;
  const std::vector<double> levels = {1, 2, 3, 4, 5};
  for (const auto& [m, t] : wanted) {
    TrendCheck c{m, t, {}, 0.0, false};
    for (int e = 1; e <= kEffectLevels; ++e) {
      for (const auto& r : rows) {
        if (r.manipulation == m && r.test == t && r.effect_index == e) c.medians.push_back(r.median);
      }
    }
    if (c.medians.size() == levels.size()) {
      c.rho = spearman(levels, c.medians);
      c.pass = c.rho >= kTrendRho;
    }
    out.push_back(std::move(c));
  }
  return out;
}

// Four datasets, one bar chart ------------------------------------------------------------

struct Quartet {
  Table a, b, c, d;
};

inline constexpr double kQuartetMeanX = 50.0;
inline constexpr double kQuartetMeanY = 60.0;

namespace detail {
inline std::vector<double> centered_normals(Rng& rng, int n, double sd, double target_mean) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(rng.normal(0.0, sd));
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  for (double& x : v) x = x - m + target_mean;
  return v;
}
}  // namespace detail

/// Four two-group tables whose group means are all (X=50, Y=60), so the
/// mean-aggregated bar chart is identical, while the data differ:
///   A  clean, well-separated Gaussians
///   B  Y's lead comes from a single large outlier
///   C  Y is one value repeated 40 times
///   D  Y has only 3 records against X's 50
inline Quartet generate_quartet(Rng& rng) {
  Quartet q;
  q.a = two_group_table(detail::centered_normals(rng, 50, 5.0, kQuartetMeanX),
                        detail::centered_normals(rng, 50, 5.0, kQuartetMeanY));

  auto ys = detail::centered_normals(rng, 49, 5.0, 49.0);
  ys.push_back(kQuartetMeanY * 50 - 49.0 * 49);
  q.b = two_group_table(detail::centered_normals(rng, 50, 5.0, kQuartetMeanX), ys);

  q.c = two_group_table(detail::centered_normals(rng, 50, 5.0, kQuartetMeanX),
                        std::vector<double>(40, kQuartetMeanY));

  q.d = two_group_table(detail::centered_normals(rng, 50, 5.0, kQuartetMeanX),
                        {kQuartetMeanY - 30.0, kQuartetMeanY, kQuartetMeanY + 30.0});
  return q;
}

}  // namespace mtv::sim
