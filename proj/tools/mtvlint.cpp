// mtvlint: metamorphic chart linter.
//
//   mtvlint lint <spec> <data>
//   mtvlint test <spec> <data> --morphism <name> [--trials N --epsilon E --seed S]
//   mtvlint simulate [--seed S --trials N --out DIR]
//   mtvlint render <spec> <data> --out FILE
//
// Exit codes: 0 pass, 1 failing test (lint only with --strict), 2 input error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mtvlint/mtvlint.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitInput = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mtv::Error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to a sibling temp file and renames, so readers never see a partial file.
void write_atomically(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw mtv::Error("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw mtv::Error("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("MTVLINT_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring non-numeric MTVLINT_SEED='" << env << "'\n";
    }
  }
  return 0;
}

struct Inputs {
  mtv::ChartSpec spec;
  mtv::Table table;
};

Inputs load_inputs(const std::string& spec_path, const std::string& data_path) {
  return {mtv::parse_spec(read_file(spec_path)), mtv::load_table(read_file(data_path))};
}

void print_issues(const std::vector<mtv::ValidationIssue>& issues) {
  for (const auto& i : issues) {
    std::cerr << (i.severity == mtv::Severity::Error ? "error: " : "warning: ") << i.message << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metamorphic testing linter for declarative charts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mtv::kToolVersion));

  std::uint64_t seed = default_seed();
  int trials = 100;
  double epsilon = 0.95;

  // lint
  auto* lint = app.add_subcommand("lint", "Run every applicable metamorphic test and report likely mirages");
  std::string lint_spec, lint_data;
  bool strict = false;
  double opacity_factor = 0.5;
  std::optional<std::size_t> threshold;
  std::map<std::string, bool> skip;
  lint->add_option("spec", lint_spec, "Chart spec (JSON)")->required()->check(CLI::ExistingFile);
  lint->add_option("data", lint_data, "Data (CSV or JSON rows)")->required()->check(CLI::ExistingFile);
  lint->add_option("--trials", trials, "Trials per randomized test")->check(CLI::PositiveNumber);
  lint->add_option("--epsilon", epsilon, "Pass fraction required")->check(CLI::Range(0.0, 1.0));
  lint->add_option("--seed", seed, "Master seed (default $MTVLINT_SEED or 0)");
  lint->add_option("--opacity-factor", opacity_factor, "Opacity multiplier for the opacity test");
  lint->add_option("--threshold", threshold, "Pixel-count threshold (default 0 aggregated, 16 otherwise)");
  lint->add_flag("--strict", strict, "Exit 1 when any test fails");
  for (auto name : mtv::kLintTests) {
    lint->add_flag("--no-" + std::string(name), skip[std::string(name)], "Skip the " + std::string(name) + " test");
  }

  // test
  auto* test = app.add_subcommand("test", "Run one metamorphic test and print its full outcome");
  std::string test_spec, test_data, morphism_name, eq_name;
  double tolerance = 0.0, chi2_threshold = 0.0;
  std::string greater, lesser;
  test->add_option("spec", test_spec, "Chart spec (JSON)")->required()->check(CLI::ExistingFile);
  test->add_option("data", test_data, "Data (CSV or JSON rows)")->required()->check(CLI::ExistingFile);
  test->add_option("--morphism", morphism_name, "shuffle | bootstrap | contract | randomize | opacity | identity")
      ->required()
      ->check(CLI::IsMember({"shuffle", "bootstrap", "contract", "randomize", "opacity", "identity"}));
  test->add_option("--eq", eq_name, "pixel | order | chi2 | insight (default per morphism)")
      ->check(CLI::IsMember({"pixel", "order", "chi2", "insight"}));
  test->add_option("--trials", trials, "Number of trials")->check(CLI::PositiveNumber);
  test->add_option("--epsilon", epsilon, "Pass fraction required")->check(CLI::Range(0.0, 1.0));
  test->add_option("--seed", seed, "Master seed (default $MTVLINT_SEED or 0)");
  test->add_option("--threshold", threshold, "Pixel-count threshold");
  test->add_option("--tolerance", tolerance, "Bar-height tie tolerance (data units)");
  test->add_option("--chi2-threshold", chi2_threshold, "Histogram distance threshold");
  test->add_option("--opacity-factor", opacity_factor, "Opacity multiplier for the opacity morphism");
  test->add_option("--greater", greater, "Insight: category expected to stay higher");
  test->add_option("--lesser", lesser, "Insight: category expected to stay lower");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run the synthetic two-bar experiment grid");
  std::string out_dir = "sim_out";
  bool write_cells = false;
  simulate->add_option("--seed", seed, "Master seed (default $MTVLINT_SEED or 0)");
  simulate->add_option("--trials", trials, "Trials per test per dataset")->check(CLI::Range(2, 100000));
  simulate->add_option("--out", out_dir, "Output directory");
  simulate->add_flag("--cells", write_cells, "Also write per-dataset results (cells.json)");

  // render
  auto* render = app.add_subcommand("render", "Rasterize a chart to PPM or PNG");
  std::string render_spec, render_data, render_out, scene_json;
  int overlay = 0;
  double layer_opacity = 0.05;
  render->add_option("spec", render_spec, "Chart spec (JSON)")->required()->check(CLI::ExistingFile);
  render->add_option("data", render_data, "Data (CSV or JSON rows)")->required()->check(CLI::ExistingFile);
  render->add_option("--out", render_out, "Output image (.ppm or .png)")->required();
  render->add_option("--bootstrap-overlay", overlay, "Overlay this many bootstrap resamples instead")
      ->check(CLI::NonNegativeNumber);
  render->add_option("--layer-opacity", layer_opacity, "Per-layer opacity for overlays")
      ->check(CLI::Range(0.0, 1.0));
  render->add_option("--seed", seed, "Master seed for overlays");
  render->add_option("--scene-json", scene_json, "Also write the scene graph debug dump here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitInput;
  }

  try {
    if (*lint) {
      Inputs in = load_inputs(lint_spec, lint_data);
      mtv::LintConfig cfg;
      cfg.trials = trials;
      cfg.epsilon = epsilon;
      cfg.seed = seed;
      cfg.opacity_factor = opacity_factor;
      cfg.pixel_threshold = threshold;
      for (const auto& [name, off] : skip) {
        if (off) cfg.disabled.insert(name);
      }
      const auto report = mtv::lint_chart(in.spec, in.table, cfg);
      std::cout << mtv::to_json(report).dump(2) << "\n";
      if (!report.valid()) {
        print_issues(report.issues);
        return kExitInput;
      }
      return strict && report.any_fail() ? kExitFail : kExitPass;
    }

    if (*test) {
      Inputs in = load_inputs(test_spec, test_data);
      if (auto issues = mtv::validate_spec(in.spec, in.table); mtv::has_errors(issues)) {
        print_issues(issues);
        return kExitInput;
      }
      mtv::MtvConfig cfg;
      cfg.trials = trials;
      cfg.pass_threshold = epsilon;
      cfg.seed = seed;
      const auto roles = mtv::aggregate_roles(in.spec);
      const std::size_t thr = threshold.value_or(mtv::default_pixel_threshold(in.spec));
      if (morphism_name == "shuffle") {
        cfg.alpha = mtv::morph::Shuffle{};
      } else if (morphism_name == "opacity") {
        cfg.omega = mtv::morph::OpacityScale{opacity_factor};
      } else if (morphism_name != "identity") {
        if (!roles) {
          std::cerr << "error: " << morphism_name << " needs an aggregated chart with a category channel\n";
          return kExitInput;
        }
        cfg.alpha = mtv::grouped_morphism(morphism_name, in.spec.encodings.at(roles->category).field,
                                          in.spec.encodings.at(roles->value).field);
      }
      const bool grouped = morphism_name == "bootstrap" || morphism_name == "contract" || morphism_name == "randomize";
      if (eq_name.empty()) eq_name = grouped ? "order" : "pixel";
      if (eq_name == "pixel") {
        cfg.eq = mtv::eq::PixelCount{thr, morphism_name == "opacity" ? 1 : 0};
      } else if (eq_name == "order") {
        cfg.eq = mtv::eq::BarHeightOrder{tolerance};
      } else if (eq_name == "chi2") {
        cfg.eq = mtv::eq::Chi2Histogram{chi2_threshold};
      } else {
        if (greater.empty() || lesser.empty()) {
          std::cerr << "error: --eq insight needs --greater and --lesser\n";
          return kExitInput;
        }
        cfg.eq = mtv::eq::InsightPreserved{greater, lesser};
      }
      const auto out = mtv::run_statistical(cfg, in.spec, in.table);
      std::cout << mtv::to_json(out).dump(2) << "\n";
      return out.verdict == mtv::Verdict::Fail ? kExitFail : kExitPass;
    }

    if (*simulate) {
      const auto cells = mtv::sim::run_experiment(seed, trials);
      const auto rows = mtv::sim::summarize(cells);
      std::filesystem::create_directories(out_dir);
      const auto csv_path = std::filesystem::path(out_dir) / "summary.csv";
      write_atomically(csv_path, mtv::sim::summary_csv(rows));
      if (write_cells) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& c : cells) arr.push_back(mtv::sim::to_json(c));
        write_atomically(std::filesystem::path(out_dir) / "cells.json", arr.dump(1) + "\n");
      }
      std::cout << cells.size() << " datasets, " << rows.size() << " summary rows -> " << csv_path.string() << "\n";
      bool all = true;
      for (const auto& t : mtv::sim::trend_checks(rows)) {
        std::cout << (t.pass ? "[trend ok]   " : "[trend FAIL] ") << to_string(t.manipulation) << "/" << t.test
                  << " spearman=" << mtv::format_number(t.rho) << " medians:";
        for (double m : t.medians) std::cout << " " << mtv::format_number(m);
        std::cout << "\n";
        all = all && t.pass;
      }
      return all ? kExitPass : kExitFail;
    }

    if (*render) {
      Inputs in = load_inputs(render_spec, render_data);
      if (auto issues = mtv::validate_spec(in.spec, in.table); mtv::has_errors(issues)) {
        print_issues(issues);
        return kExitInput;
      }
      const auto scene = mtv::compile(in.spec, in.table);
      mtv::RasterImage img;
      if (overlay > 0) {
        const auto roles = mtv::aggregate_roles(in.spec);
        if (!roles) {
          std::cerr << "error: --bootstrap-overlay needs an aggregated chart\n";
          return kExitInput;
        }
        const auto& cat = in.spec.encodings.at(roles->category).field;
        const auto& val = in.spec.encodings.at(roles->value).field;
        std::vector<mtv::SceneGraph> scenes;
        for (int t = 0; t < overlay; ++t) {
          mtv::Rng rng(mtv::derive_seed(seed, 2, static_cast<std::uint64_t>(t)));
          scenes.push_back(mtv::compile(in.spec, mtv::bootstrap_groups(in.table, cat, val, rng)));
        }
        img = mtv::render_overlay(scenes, layer_opacity > 0.0 ? layer_opacity : 0.05);
      } else {
        img = mtv::rasterize(scene);
      }
      mtv::write_image(img, render_out);
      if (!scene_json.empty()) write_atomically(scene_json, mtv::to_json(scene).dump(2) + "\n");
      return kExitPass;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
