#pragma once

// Evaluation driver: run configuration, input caching, fan-out across
// videos, ablation grids, smoothing sweeps and alignment-path export.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "actalign/affinity.hpp"
#include "actalign/align.hpp"
#include "actalign/classify.hpp"
#include "actalign/corpus.hpp"
#include "actalign/error.hpp"
#include "actalign/parallel.hpp"
#include "actalign/report.hpp"
#include "actalign/signal.hpp"

namespace actalign {

struct RunConfig {
  std::string manifest;
  std::string scripts;              // sub-action scripts used by alignment methods
  std::string scripts_context;      // context-augmented variant (ablation)
  std::string scripts_short_fixed;  // short-fixed variant (order ablation)
  std::string names;                // class-name embeddings (mean-pool baseline)
  std::string names_context;        // context-augmented class names
  std::string calibration;          // empty: built-in defaults
  std::size_t smoothing_window = kDefaultSmoothingWindow;  // as requested; even widths map to w+1
  bool renormalize = true;
  Endpoint endpoint = Endpoint::anchored_end;
  TieBreakOrder tie_break = kDefaultTieBreak;
  Method method = Method::actalign;
  std::uint64_t seed = 0;
  std::size_t trials = 5;   // randomized-order / random-score trials
  std::size_t workers = 0;  // 0: hardware threads; not part of the snapshot

  SmoothingConfig smoothing() const { return {odd_window(smoothing_window), renormalize}; }
  DtwConfig dtw() const { return {endpoint, tie_break}; }

  std::size_t trial_count() const {
    return method == Method::randomized_order || method == Method::random ? std::max<std::size_t>(trials, 1) : 1;
  }
};

/// Snapshot embedded in every report. Execution-only settings (worker count,
/// output paths) are left out so that the snapshot determines the results.
inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json tie = nlohmann::json::array();
  for (const Step s : c.tie_break) tie.push_back(to_string(s));
  return {{"manifest", c.manifest},
          {"scripts", c.scripts},
          {"scripts_context", c.scripts_context},
          {"scripts_short_fixed", c.scripts_short_fixed},
          {"names", c.names},
          {"names_context", c.names_context},
          {"calibration", c.calibration},
          {"smoothing_window", c.smoothing_window},
          {"effective_smoothing_window", odd_window(c.smoothing_window)},
          {"renormalize", c.renormalize},
          {"endpoint", to_string(c.endpoint)},
          {"tie_break", std::move(tie)},
          {"method", to_string(c.method)},
          {"seed", c.seed},
          {"trials", c.trial_count()}};
}

/// Accepts a bare config object or a report carrying "run_config".
inline RunConfig run_config_from_json(const nlohmann::json& doc, const std::string& origin = "config") {
  const nlohmann::json& j = doc.contains("run_config") ? doc.at("run_config") : doc;
  if (!j.is_object()) throw ValidationError(origin, "", "expected a JSON object");
  RunConfig c;
  auto str = [&](const char* key, std::string& dst) { dst = detail::optional_field<std::string>(j, key, dst, origin); };
  str("manifest", c.manifest);
  str("scripts", c.scripts);
  str("scripts_context", c.scripts_context);
  str("scripts_short_fixed", c.scripts_short_fixed);
  str("names", c.names);
  str("names_context", c.names_context);
  str("calibration", c.calibration);
  c.smoothing_window = detail::optional_field<std::size_t>(j, "smoothing_window", c.smoothing_window, origin);
  c.renormalize = detail::optional_field<bool>(j, "renormalize", c.renormalize, origin);
  if (j.contains("endpoint")) c.endpoint = parse_endpoint(detail::required_field<std::string>(j, "endpoint", origin));
  if (j.contains("tie_break")) {
    const auto steps = detail::required_field<std::vector<std::string>>(j, "tie_break", origin);
    if (steps.size() != 3) throw ValidationError(origin, "tie_break", "expected three steps");
    for (std::size_t i = 0; i < 3; ++i) c.tie_break[i] = parse_step(steps[i]);
    validate_tie_break(c.tie_break);
  }
  if (j.contains("method")) c.method = parse_method(detail::required_field<std::string>(j, "method", origin));
  c.seed = detail::optional_field<std::uint64_t>(j, "seed", c.seed, origin);
  c.trials = detail::optional_field<std::size_t>(j, "trials", c.trials, origin);
  return c;
}

inline bool uses_scripts(Method m) {
  return m == Method::actalign || m == Method::bag_of_words || m == Method::reversed_order ||
         m == Method::randomized_order;
}

inline bool uses_names(Method m) { return m == Method::mean_pool_name || m == Method::mean_pool_context; }

/// Produces the unit-norm frame embeddings of a video.
using FrameSource = std::function<EmbeddingSequence(const VideoEntry&)>;

inline FrameSource file_frame_source() {
  return [](const VideoEntry& v) { return load_embeddings(v.embedding_file, v.frame_count, std::nullopt, v.video_id); };
}

/// Loaded inputs shared by every run over one manifest. Script and name
/// files are loaded once per path and cached; loading happens before any
/// fan-out, so workers only ever read.
class Workspace {
 public:
  Workspace(DatasetManifest manifest, FrameSource frames)
      : manifest_(std::move(manifest)), frames_(std::move(frames)) {}

  /// Loads the manifest and checks that every embedding file is present.
  static Workspace open(const RunConfig& cfg) {
    if (cfg.manifest.empty()) throw ValidationError("config", "manifest", "no manifest given");
    if (!std::filesystem::exists(cfg.manifest)) {
      throw ValidationError(cfg.manifest, "", "manifest file not found");
    }
    auto manifest = load_manifest(cfg.manifest);
    for (const auto& v : manifest.videos) {
      if (!std::filesystem::exists(v.embedding_file)) {
        throw ValidationError("video " + v.video_id, "embedding_file",
                              "file not found: " + v.embedding_file.string());
      }
    }
    return Workspace(std::move(manifest), file_frame_source());
  }

  const DatasetManifest& manifest() const noexcept { return manifest_; }
  EmbeddingSequence frames(const VideoEntry& v) const { return frames_(v); }

  void add_scripts(const std::string& key, ScriptSet s) { scripts_[key] = std::move(s); }
  void add_names(const std::string& key, NameEmbeddings n) { names_[key] = std::move(n); }

  const ScriptSet& scripts(const std::string& path, const std::string& role = "scripts") {
    if (auto it = scripts_.find(path); it != scripts_.end()) return it->second;
    require_file(path, role);
    const PromptStyle style = role == "scripts_short_fixed" ? PromptStyle::short_fixed : PromptStyle::context_rich;
    return scripts_.emplace(path, load_scripts(path, style, role == "scripts_context")).first->second;
  }

  const NameEmbeddings& names(const std::string& path, const std::string& role = "names") {
    if (auto it = names_.find(path); it != names_.end()) return it->second;
    require_file(path, role);
    return names_.emplace(path, load_name_embeddings(path)).first->second;
  }

  CalibrationParams calibration(const std::string& path) {
    if (path.empty()) return {};
    if (auto it = calibrations_.find(path); it != calibrations_.end()) return it->second;
    require_file(path, "calibration");
    return calibrations_.emplace(path, load_calibration(path)).first->second;
  }

 private:
  static void require_file(const std::string& path, const std::string& role) {
    if (path.empty()) throw ValidationError("config", role, "required for this method but not given");
    if (!std::filesystem::exists(path)) throw ValidationError(path, role, "file not found");
  }

  DatasetManifest manifest_;
  FrameSource frames_;
  std::map<std::string, ScriptSet> scripts_;
  std::map<std::string, NameEmbeddings> names_;
  std::map<std::string, CalibrationParams> calibrations_;
};

inline nlohmann::json report_config(const RunConfig& cfg, const CalibrationParams& cal) {
  auto j = to_json(cfg);
  j["resolved_calibration"] = to_json(cal);
  return j;
}

/// Runs one configuration over every manifest video. Trial 0 fills
/// `per_video`, `topk` and `per_domain`; with several trials the per-trial
/// Top-k values and their mean/std land in `trials`.
inline EvaluationReport evaluate(Workspace& ws, const RunConfig& cfg, std::string label = {}) {
  const auto smoothing = cfg.smoothing();
  smoothing.validate();
  validate_tie_break(cfg.tie_break);
  const CalibrationParams cal = ws.calibration(cfg.calibration);

  const ScriptSet* scripts = uses_scripts(cfg.method) ? &ws.scripts(cfg.scripts) : nullptr;
  const NameEmbeddings* names = nullptr;
  if (cfg.method == Method::mean_pool_name) names = &ws.names(cfg.names);
  if (cfg.method == Method::mean_pool_context) names = &ws.names(cfg.names_context, "names_context");

  const AlignmentParams params{cal, smoothing, cfg.dtw()};
  const auto& videos = ws.manifest().videos;
  const std::size_t trials = cfg.trial_count();
  std::vector<std::vector<VideoPrediction>> preds(trials, std::vector<VideoPrediction>(videos.size()));

  parallel_for(videos.size(), resolve_worker_count(cfg.workers), [&](std::size_t i) {
    const VideoEntry& v = videos[i];
    if (cfg.method == Method::random) {
      for (std::size_t r = 0; r < trials; ++r) preds[r][i] = classify_random(v, cfg.seed, r);
      return;
    }
    const EmbeddingSequence frames = ws.frames(v);
    for (std::size_t r = 0; r < trials; ++r) {
      switch (cfg.method) {
        case Method::actalign: preds[r][i] = classify_actalign(v, frames, *scripts, params); break;
        case Method::reversed_order:
          preds[r][i] = classify_actalign(v, frames, *scripts, params, Perturbation::reversed);
          break;
        case Method::randomized_order:
          preds[r][i] = classify_actalign(v, frames, *scripts, params, Perturbation::randomized, cfg.seed, r);
          break;
        case Method::mean_pool_name:
        case Method::mean_pool_context: preds[r][i] = classify_mean_pool(v, frames, *names, cfg.method); break;
        case Method::bag_of_words: preds[r][i] = classify_bag_of_words(v, frames, *scripts); break;
        case Method::random: break;
      }
    }
  });

  if (label.empty()) label = to_string(cfg.method);
  std::optional<TrialSummary> summary;
  if (trials > 1) {
    std::vector<std::uint64_t> ids;
    std::vector<TopK> per_trial;
    for (std::size_t r = 0; r < trials; ++r) {
      ids.push_back(r);
      per_trial.push_back(topk_all(preds[r], ws.manifest()));
    }
    summary = summarize_trials(std::move(ids), std::move(per_trial));
  }
  auto report = build_report(report_config(cfg, cal), std::move(label), std::move(preds[0]), ws.manifest());
  report.trials = std::move(summary);
  return report;
}

// ---------------------------------------------------------------------------
// ablations

struct GridPoint {
  std::string label;
  RunConfig config;
};

/// The component ladder (mean-pool, + alignment, + context augmentation,
/// + smoothing), the open-end variant of the final row, the pooled
/// baselines and the sub-action order perturbations. Rows whose inputs are
/// not configured are omitted.
inline std::vector<GridPoint> default_ablation_grid(const RunConfig& base) {
  std::vector<GridPoint> grid;
  auto with = [&](Method m, const std::string& scripts, std::size_t window) {
    RunConfig c = base;
    c.method = m;
    c.scripts = scripts;
    c.smoothing_window = window;
    return c;
  };
  const std::string aligned_scripts = base.scripts_context.empty() ? base.scripts : base.scripts_context;

  if (!base.names.empty()) grid.push_back({"Mean-pool (class names)", with(Method::mean_pool_name, base.scripts, 1)});
  if (!base.scripts.empty()) grid.push_back({"+ DTW alignment", with(Method::actalign, base.scripts, 1)});
  if (!base.scripts_context.empty()) {
    grid.push_back({"+ Context augmentation", with(Method::actalign, base.scripts_context, 1)});
  }
  if (!aligned_scripts.empty()) {
    grid.push_back({"+ Signal smoothing", with(Method::actalign, aligned_scripts, base.smoothing_window)});
    auto open = with(Method::actalign, aligned_scripts, base.smoothing_window);
    open.endpoint = Endpoint::open_end;
    grid.push_back({"+ Signal smoothing (open-end DTW)", open});
  }
  if (!base.names_context.empty()) {
    grid.push_back({"Mean-pool w/ context augmentation", with(Method::mean_pool_context, base.scripts, 1)});
  }
  if (!aligned_scripts.empty()) {
    grid.push_back({"Mean-pool w/ bag-of-words", with(Method::bag_of_words, aligned_scripts, 1)});
  }
  if (!base.scripts_short_fixed.empty()) {
    grid.push_back({"Short-fixed: reversed order",
                    with(Method::reversed_order, base.scripts_short_fixed, base.smoothing_window)});
    grid.push_back({"Short-fixed: randomized order",
                    with(Method::randomized_order, base.scripts_short_fixed, base.smoothing_window)});
    grid.push_back({"Short-fixed: normal order", with(Method::actalign, base.scripts_short_fixed, base.smoothing_window)});
  }
  return grid;
}

inline std::vector<EvaluationReport> ablation_grid(Workspace& ws, const std::vector<GridPoint>& grid) {
  std::vector<EvaluationReport> reports;
  reports.reserve(grid.size());
  for (const auto& point : grid) reports.push_back(evaluate(ws, point.config, point.label));
  return reports;
}

inline nlohmann::json ablation_to_json(const std::vector<EvaluationReport>& reports) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json row{{"label", r.label}, {"run_config", r.run_config}, {"topk", to_json(r.topk)}};
    if (r.trials) row["trials"] = {{"mean", to_json(r.trials->mean)}, {"std", to_json(r.trials->stddev)}};
    rows.push_back(std::move(row));
  }
  return {{"rows", std::move(rows)}};
}

// ---------------------------------------------------------------------------
// smoothing sweep

inline const std::vector<std::size_t> kDefaultSweepWindows{10, 20, 30, 50};

struct SweepRow {
  std::size_t requested_window = 0;
  std::size_t effective_window = 0;
  EvaluationReport report;
};

inline std::vector<SweepRow> sweep_smoothing(Workspace& ws, const RunConfig& base,
                                             const std::vector<std::size_t>& windows) {
  if (windows.empty()) throw ValidationError("sweep", "windows", "no windows given");
  std::vector<SweepRow> rows;
  for (const std::size_t w : windows) {
    RunConfig c = base;
    c.smoothing_window = w;
    rows.push_back({w, odd_window(w), evaluate(ws, c, "w=" + std::to_string(odd_window(w)))});
  }
  return rows;
}

inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "window,effective_window,top1,top2,top3\n";
  for (const auto& r : rows) {
    os << r.requested_window << ',' << r.effective_window << ',' << percent(r.report.topk.at(1)) << ','
       << percent(r.report.topk.at(2)) << ',' << percent(r.report.topk.at(3)) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// path export

inline std::string safe_file_component(const std::string& s) {
  std::string out;
  for (const char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out;
}

struct PathExport {
  std::string class_id;
  AlignmentResult alignment;
  nlohmann::json record;
};

/// Aligns every candidate of one video under `cfg` (with its configured
/// script order perturbation, if any).
inline std::vector<PathExport> alignment_paths(Workspace& ws, const RunConfig& cfg, const std::string& video_id) {
  const VideoEntry* v = ws.manifest().find(video_id);
  if (!v) throw ValidationError("export-paths", "video_id", "unknown video id '" + video_id + "'");
  const auto smoothing = cfg.smoothing();
  smoothing.validate();
  const auto cal = ws.calibration(cfg.calibration);
  const auto& scripts = ws.scripts(cfg.scripts);
  const auto smoothed = smooth(ws.frames(*v), smoothing);

  std::vector<PathExport> out;
  for (const auto& class_id : v->candidates) {
    const auto& script = detail::script_for(scripts, class_id, video_id);
    SubActionScript used = script;
    if (cfg.method == Method::reversed_order) used = perturb_script(script, Perturbation::reversed);
    if (cfg.method == Method::randomized_order) {
      used = perturb_script(script, Perturbation::randomized, derive_seed(cfg.seed, video_id, class_id, 0));
    }
    auto result = align_smoothed(used, smoothed, cal, cfg.dtw());
    auto record = path_to_json(video_id, class_id, result);
    out.push_back({class_id, std::move(result), std::move(record)});
  }
  return out;
}

/// Writes one `<video>__<class>.json` file per candidate into `out_dir`.
inline std::vector<std::filesystem::path> export_paths(Workspace& ws, const RunConfig& cfg,
                                                       const std::string& video_id,
                                                       const std::filesystem::path& out_dir) {
  const auto exports = alignment_paths(ws, cfg, video_id);
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  for (const auto& e : exports) {
    const auto file = out_dir / (safe_file_component(video_id) + "__" + safe_file_component(e.class_id) + ".json");
    std::ofstream os(file);
    if (!os) throw Error("cannot write " + file.string());
    os << e.record.dump(2) << "\n";
    written.push_back(file);
  }
  return written;
}

// ---------------------------------------------------------------------------
// validation

/// Loads every input the configuration references and collects one message
/// per problem found; an empty result means the corpus is consistent.
inline std::vector<std::string> validate_inputs(const RunConfig& cfg) {
  std::vector<std::string> problems;
  std::optional<Workspace> ws;
  try {
    ws.emplace(Workspace::open(cfg));
  } catch (const ValidationError& e) {
    problems.push_back(e.what());
    return problems;
  }

  auto check = [&](auto&& fn) {
    try {
      fn();
    } catch (const ValidationError& e) {
      problems.push_back(e.what());
    }
  };
  check([&] { ws->calibration(cfg.calibration); });
  check([&] { cfg.smoothing().validate(); });

  std::vector<std::pair<std::string, const ScriptSet*>> script_sets;
  for (const auto& [role, path] : {std::pair<std::string, std::string>{"scripts", cfg.scripts},
                                   {"scripts_context", cfg.scripts_context},
                                   {"scripts_short_fixed", cfg.scripts_short_fixed}}) {
    if (path.empty()) continue;
    check([&] { script_sets.emplace_back(path, &ws->scripts(path, role)); });
  }
  std::vector<std::pair<std::string, const NameEmbeddings*>> name_sets;
  for (const auto& [role, path] :
       {std::pair<std::string, std::string>{"names", cfg.names}, {"names_context", cfg.names_context}}) {
    if (path.empty()) continue;
    check([&] { name_sets.emplace_back(path, &ws->names(path, role)); });
  }

  for (const auto& v : ws->manifest().videos) {
    std::optional<std::size_t> dim;
    check([&] { dim = ws->frames(v).dim(); });
    for (const auto& class_id : v.candidates) {
      for (const auto& [path, set] : script_sets) {
        const auto it = set->find(class_id);
        if (it == set->end()) {
          problems.push_back(path + ": no script for class '" + class_id + "' (video " + v.video_id + ")");
        } else if (dim && it->second.has_embeddings() && it->second.embeddings.cols() != *dim) {
          problems.push_back(path + ": class '" + class_id + "' has d=" +
                             std::to_string(it->second.embeddings.cols()) + " but video " + v.video_id +
                             " has d=" + std::to_string(*dim));
        }
      }
      for (const auto& [path, set] : name_sets) {
        if (!set->contains(class_id)) {
          problems.push_back(path + ": no name embedding for class '" + class_id + "' (video " + v.video_id + ")");
        }
      }
    }
  }
  return problems;
}

}  // namespace actalign
