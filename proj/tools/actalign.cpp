// Command-line entry point: classify, ablate, sweep-smoothing, export-paths,
// validate and report.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "actalign/actalign.hpp"

namespace {

using actalign::RunConfig;

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

/// Flags shared by every pipeline subcommand. Values given on the command
/// line override those from --config.
struct ConfigFlags {
  std::string config_path;
  RunConfig flags;
  std::string endpoint = "anchored_end";
  std::string tie_break = "diagonal,up,left";
  std::string method = "actalign";
  bool no_renormalize = false;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON run config (or a previous report) to start from");
    bind(app->add_option("--manifest", flags.manifest, "Dataset manifest JSON"),
         [this](RunConfig& c) { c.manifest = flags.manifest; });
    bind(app->add_option("--scripts", flags.scripts, "Sub-action scripts JSON"),
         [this](RunConfig& c) { c.scripts = flags.scripts; });
    bind(app->add_option("--scripts-context", flags.scripts_context, "Context-augmented scripts JSON"),
         [this](RunConfig& c) { c.scripts_context = flags.scripts_context; });
    bind(app->add_option("--scripts-short-fixed", flags.scripts_short_fixed, "Short-fixed scripts JSON"),
         [this](RunConfig& c) { c.scripts_short_fixed = flags.scripts_short_fixed; });
    bind(app->add_option("--names", flags.names, "Class-name embeddings JSON"),
         [this](RunConfig& c) { c.names = flags.names; });
    bind(app->add_option("--names-context", flags.names_context, "Context-augmented class-name embeddings JSON"),
         [this](RunConfig& c) { c.names_context = flags.names_context; });
    bind(app->add_option("--calibration", flags.calibration, "Calibration JSON {alpha, beta, source}"),
         [this](RunConfig& c) { c.calibration = flags.calibration; });
    bind(app->add_option("--smoothing-window", flags.smoothing_window, "Moving-average width in frames")
             ->check(CLI::PositiveNumber),
         [this](RunConfig& c) { c.smoothing_window = flags.smoothing_window; });
    bind(app->add_flag("--no-renormalize", no_renormalize, "Skip renormalization after smoothing"),
         [](RunConfig& c) { c.renormalize = false; });
    bind(app->add_option("--endpoint", endpoint, "DTW endpoint policy")
             ->check(CLI::IsMember({"anchored_end", "open_end", "anchored", "open"})),
         [this](RunConfig& c) { c.endpoint = actalign::parse_endpoint(endpoint); });
    bind(app->add_option("--tie-break", tie_break, "Predecessor preference, e.g. diagonal,up,left"),
         [this](RunConfig& c) { c.tie_break = parse_tie_break(tie_break); });
    bind(app->add_option("--method", method, "actalign|mean-pool|mean-pool-context|bag-of-words|reversed|randomized|random"),
         [this](RunConfig& c) { c.method = actalign::parse_method(method); });
    bind(app->add_option("--seed", flags.seed, "Run seed"), [this](RunConfig& c) { c.seed = flags.seed; });
    bind(app->add_option("--trials", flags.trials, "Trials for randomized/random methods")->check(CLI::PositiveNumber),
         [this](RunConfig& c) { c.trials = flags.trials; });
    bind(app->add_option("--workers", flags.workers, "Worker threads (ACTALIGN_WORKERS overrides)"),
         [this](RunConfig& c) { c.workers = flags.workers; });
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config_path.empty()) {
      c = actalign::run_config_from_json(actalign::detail::read_json_file(config_path), config_path);
    }
    for (const auto& [opt, apply] : overrides) {
      if (opt->count() > 0) apply(c);
    }
    if (c.smoothing_window % 2 == 0) {
      std::cerr << "warning: even smoothing window " << c.smoothing_window << " mapped to "
                << actalign::odd_window(c.smoothing_window) << "\n";
    }
    return c;
  }

 private:
  void bind(CLI::Option* opt, std::function<void(RunConfig&)> apply) { overrides.emplace_back(opt, std::move(apply)); }

  static actalign::TieBreakOrder parse_tie_break(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (const char ch : s + ",") {
      if (ch == ',') {
        if (!cur.empty()) parts.push_back(cur);
        cur.clear();
      } else if (ch != ' ') {
        cur.push_back(ch);
      }
    }
    if (parts.size() != 3) throw actalign::ValidationError("--tie-break", "", "expected three comma-separated steps");
    actalign::TieBreakOrder order{};
    for (std::size_t i = 0; i < 3; ++i) order[i] = actalign::parse_step(parts[i]);
    actalign::validate_tie_break(order);
    return order;
  }
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw actalign::Error("cannot write " + path.string());
  os << text;
}

int run_classify(const ConfigFlags& cf, const std::string& out, bool table, bool domains) {
  const RunConfig cfg = cf.resolve();
  auto ws = actalign::Workspace::open(cfg);
  const auto start = std::chrono::steady_clock::now();
  const auto report = actalign::evaluate(ws, cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!out.empty()) write_text(out, actalign::dump_report(report, ws.manifest()));
  if (table || out.empty()) std::cout << actalign::format_table(std::span(&report, 1));
  if (domains) std::cout << "\n" << actalign::format_domain_table(report);
  std::fprintf(stderr, "%zu videos in %.2f s (%.4f s/video)\n", report.per_video.size(), seconds,
               report.per_video.empty() ? 0.0 : seconds / static_cast<double>(report.per_video.size()));
  return 0;
}

int run_ablate(const ConfigFlags& cf, const std::string& out) {
  const RunConfig cfg = cf.resolve();
  auto ws = actalign::Workspace::open(cfg);
  const auto grid = actalign::default_ablation_grid(cfg);
  if (grid.empty()) {
    throw actalign::ValidationError("ablate", "", "no rows: provide at least --scripts or --names");
  }
  const auto reports = actalign::ablation_grid(ws, grid);
  std::cout << actalign::format_table(reports);
  if (!out.empty()) write_text(out, actalign::ablation_to_json(reports).dump(2) + "\n");
  return 0;
}

int run_sweep(const ConfigFlags& cf, const std::vector<std::size_t>& windows, const std::string& out) {
  const RunConfig cfg = cf.resolve();
  auto ws = actalign::Workspace::open(cfg);
  const auto rows = actalign::sweep_smoothing(ws, cfg, windows);
  const auto csv = actalign::sweep_to_csv(rows);
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_text(out, csv);
  }
  return 0;
}

int run_export(const ConfigFlags& cf, const std::string& video, const std::string& out_dir) {
  const RunConfig cfg = cf.resolve();
  auto ws = actalign::Workspace::open(cfg);
  for (const auto& p : actalign::export_paths(ws, cfg, video, out_dir)) std::cout << p.string() << "\n";
  return 0;
}

int run_validate(const ConfigFlags& cf) {
  const RunConfig cfg = cf.resolve();
  const auto problems = actalign::validate_inputs(cfg);
  for (const auto& p : problems) std::cerr << "error: " << p << "\n";
  if (!problems.empty()) return kExitValidation;
  std::cout << "ok\n";
  return 0;
}

int run_report(const std::string& predictions_path, const std::string& manifest_path, const std::string& out,
               bool table) {
  const auto manifest = actalign::load_manifest(manifest_path);
  const auto doc = actalign::detail::read_json_file(predictions_path);
  if (!doc.contains("per_video") || !doc.at("per_video").is_array()) {
    throw actalign::ValidationError(predictions_path, "per_video", "missing or not an array");
  }
  std::vector<actalign::VideoPrediction> preds;
  for (const auto& j : doc.at("per_video")) preds.push_back(actalign::prediction_from_json(j));

  std::vector<std::string> missing;
  for (const auto& v : manifest.videos) {
    const bool found = std::any_of(preds.begin(), preds.end(), [&](const auto& p) { return p.video_id == v.video_id; });
    if (!found) missing.push_back(v.video_id);
  }
  if (!missing.empty()) {
    for (const auto& id : missing) std::cerr << "error: no prediction for video " << id << "\n";
    return kExitValidation;
  }
  const auto label = doc.value("label", std::string{});
  const auto report = actalign::build_report(doc.value("run_config", nlohmann::json::object()), label,
                                             std::move(preds), manifest);
  if (!out.empty()) write_text(out, actalign::dump_report(report, manifest));
  if (table || out.empty()) std::cout << actalign::format_table(std::span(&report, 1));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free fine-grained video classification by sub-action alignment"};
  app.require_subcommand(1);

  ConfigFlags classify_flags, ablate_flags, sweep_flags, export_flags, validate_flags;

  auto* classify = app.add_subcommand("classify", "Classify every manifest video and write a report");
  classify_flags.attach(classify);
  std::string classify_out;
  bool classify_table = false, classify_domains = false;
  classify->add_option("--out", classify_out, "Report JSON path");
  classify->add_flag("--table", classify_table, "Print the Top-k table");
  classify->add_flag("--domains", classify_domains, "Print the per-domain table");

  auto* ablate = app.add_subcommand("ablate", "Run the ablation grid and print a comparison table");
  ablate_flags.attach(ablate);
  std::string ablate_out;
  ablate->add_option("--out", ablate_out, "Comparison JSON path");

  auto* sweep = app.add_subcommand("sweep-smoothing", "Top-k as a function of smoothing window");
  sweep_flags.attach(sweep);
  std::vector<std::size_t> windows = actalign::kDefaultSweepWindows;
  std::string sweep_out;
  sweep->add_option("--windows", windows, "Window widths")->delimiter(',');
  sweep->add_option("--out", sweep_out, "CSV path (stdout when omitted)");

  auto* exporter = app.add_subcommand("export-paths", "Write the alignment path of every candidate of one video");
  export_flags.attach(exporter);
  std::string video_id, out_dir = ".";
  exporter->add_option("--video", video_id, "Video id")->required();
  exporter->add_option("--out-dir", out_dir, "Output directory");

  auto* validate = app.add_subcommand("validate", "Check every input file the configuration references");
  validate_flags.attach(validate);

  auto* report = app.add_subcommand("report", "Recompute Top-k from a predictions/report JSON");
  std::string predictions_path, manifest_path, report_out;
  bool report_table = false;
  report->add_option("--predictions", predictions_path, "Report or predictions JSON with per_video")->required();
  report->add_option("--manifest", manifest_path, "Dataset manifest JSON")->required();
  report->add_option("--out", report_out, "Report JSON path");
  report->add_flag("--table", report_table, "Print the Top-k table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*classify) return run_classify(classify_flags, classify_out, classify_table, classify_domains);
    if (*ablate) return run_ablate(ablate_flags, ablate_out);
    if (*sweep) return run_sweep(sweep_flags, windows, sweep_out);
    if (*exporter) return run_export(export_flags, video_id, out_dir);
    if (*validate) return run_validate(validate_flags);
    if (*report) return run_report(predictions_path, manifest_path, report_out, report_table);
  } catch (const actalign::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
