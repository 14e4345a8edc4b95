#pragma once

// Top-k accuracy, per-domain breakdown and report serialization.

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "actalign/classify.hpp"
#include "actalign/corpus.hpp"
#include "actalign/error.hpp"

namespace actalign {

inline constexpr std::size_t kMaxTopK = 3;

/// Accuracies for k = 1..3; `at(k)` is 1-based.
struct TopK {
  std::array<double, kMaxTopK> values{};

  double at(std::size_t k) const { return values.at(k - 1); }
  double& at(std::size_t k) { return values.at(k - 1); }
};

struct DomainBreakdown {
  std::size_t samples = 0;
  TopK topk;
};

struct TrialSummary {
  std::vector<std::uint64_t> trial_ids;
  std::vector<TopK> per_trial;
  TopK mean;
  TopK stddev;  // population standard deviation
};

struct EvaluationReport {
  nlohmann::json run_config = nlohmann::json::object();
  std::string label;  // row name in comparison tables
  std::vector<VideoPrediction> per_video;
  TopK topk;
  std::map<std::string, DomainBreakdown> per_domain;
  std::optional<TrialSummary> trials;
};

namespace detail {

inline std::unordered_map<std::string, const VideoPrediction*> index_predictions(
    std::span<const VideoPrediction> predictions) {
  std::unordered_map<std::string, const VideoPrediction*> by_id;
  for (const auto& p : predictions) by_id.emplace(p.video_id, &p);
  return by_id;
}

inline const VideoPrediction& prediction_for(
    const std::unordered_map<std::string, const VideoPrediction*>& by_id, const VideoEntry& v) {
  const auto it = by_id.find(v.video_id);
  if (it == by_id.end()) throw Error("no prediction for video " + v.video_id);
  return *it->second;
}

}  // namespace detail

/// Fraction of manifest videos whose ground truth sits at position <= k of
/// the tie-broken ranking.
inline double topk_accuracy(std::span<const VideoPrediction> predictions, const DatasetManifest& manifest,
                            std::size_t k) {
  if (manifest.videos.empty()) return 0.0;
  const auto by_id = detail::index_predictions(predictions);
  std::size_t hits = 0;
  for (const auto& v : manifest.videos) {
    const auto rank = detail::prediction_for(by_id, v).rank_of(v.ground_truth);
    if (rank != 0 && rank <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(manifest.videos.size());
}

inline TopK topk_all(std::span<const VideoPrediction> predictions, const DatasetManifest& manifest) {
  TopK out;
  for (std::size_t k = 1; k <= kMaxTopK; ++k) out.at(k) = topk_accuracy(predictions, manifest, k);
  return out;
}

inline std::map<std::string, DomainBreakdown> per_domain_breakdown(std::span<const VideoPrediction> predictions,
                                                                   const DatasetManifest& manifest) {
  const auto by_id = detail::index_predictions(predictions);
  std::map<std::string, std::array<std::size_t, kMaxTopK>> hits;
  std::map<std::string, DomainBreakdown> out;
  for (const auto& v : manifest.videos) {
    auto& h = hits[v.domain];
    ++out[v.domain].samples;
    const auto rank = detail::prediction_for(by_id, v).rank_of(v.ground_truth);
    for (std::size_t k = 1; k <= kMaxTopK; ++k) {
      if (rank != 0 && rank <= k) ++h[k - 1];
    }
  }
  for (auto& [domain, b] : out) {
    for (std::size_t k = 1; k <= kMaxTopK; ++k) {
      b.topk.at(k) = static_cast<double>(hits[domain][k - 1]) / static_cast<double>(b.samples);
    }
  }
  return out;
}

inline TrialSummary summarize_trials(std::vector<std::uint64_t> ids, std::vector<TopK> per_trial) {
  TrialSummary s;
  s.trial_ids = std::move(ids);
  s.per_trial = std::move(per_trial);
  const auto n = static_cast<double>(s.per_trial.size());
  if (s.per_trial.empty()) return s;
  for (std::size_t k = 1; k <= kMaxTopK; ++k) {
    double sum = 0.0;
    for (const auto& t : s.per_trial) sum += t.at(k);
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& t : s.per_trial) sq += (t.at(k) - mean) * (t.at(k) - mean);
    s.mean.at(k) = mean;
    s.stddev.at(k) = std::sqrt(sq / n);
  }
  return s;
}

inline EvaluationReport build_report(nlohmann::json run_config, std::string label,
                                     std::vector<VideoPrediction> predictions, const DatasetManifest& manifest) {
  EvaluationReport r;
  r.run_config = std::move(run_config);
  r.label = std::move(label);
  r.topk = topk_all(predictions, manifest);
  r.per_domain = per_domain_breakdown(predictions, manifest);
  r.per_video = std::move(predictions);
  return r;
}

// ---------------------------------------------------------------------------
// serialization

inline nlohmann::json to_json(const TopK& t) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t k = 1; k <= kMaxTopK; ++k) j[std::to_string(k)] = t.at(k);
  return j;
}

inline TopK topk_from_json(const nlohmann::json& j) {
  TopK t;
  for (std::size_t k = 1; k <= kMaxTopK; ++k) t.at(k) = j.at(std::to_string(k)).get<double>();
  return t;
}

inline nlohmann::json to_json(const VideoPrediction& p, const VideoEntry* entry = nullptr) {
  nlohmann::json ranked = nlohmann::json::array();
  for (const auto& c : p.ranked) ranked.push_back({{"class_id", c.class_id}, {"score", c.score}});
  nlohmann::json j{{"video_id", p.video_id},
                   {"method", to_string(p.method)},
                   {"predicted", p.predicted},
                   {"ranked", std::move(ranked)}};
  if (entry) {
    j["ground_truth"] = entry->ground_truth;
    j["ground_truth_rank"] = p.rank_of(entry->ground_truth);
    j["domain"] = entry->domain;
  }
  return j;
}

inline VideoPrediction prediction_from_json(const nlohmann::json& j) {
  VideoPrediction p;
  try {
    p.video_id = j.at("video_id").get<std::string>();
    p.method = parse_method(j.at("method").get<std::string>());
    for (const auto& c : j.at("ranked")) {
      p.ranked.push_back({c.at("class_id").get<std::string>(), c.at("score").get<double>()});
    }
    p.predicted = j.at("predicted").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("prediction", "", e.what());
  }
  if (p.ranked.empty() || p.ranked.front().class_id != p.predicted) {
    throw ValidationError("prediction " + p.video_id, "predicted", "must be the first ranked class");
  }
  return p;
}

inline nlohmann::json to_json(const EvaluationReport& r, const DatasetManifest& manifest) {
  nlohmann::json per_video = nlohmann::json::array();
  for (const auto& p : r.per_video) per_video.push_back(to_json(p, manifest.find(p.video_id)));

  nlohmann::json domains = nlohmann::json::object();
  for (const auto& [d, b] : r.per_domain) {
    domains[d] = {{"samples", b.samples}, {"topk", to_json(b.topk)}};
  }

  nlohmann::json j{{"label", r.label},
                   {"run_config", r.run_config},
                   {"num_videos", r.per_video.size()},
                   {"tie_policy", "manifest_candidate_order"},
                   {"topk", to_json(r.topk)},
                   {"per_domain", std::move(domains)},
                   {"per_video", std::move(per_video)}};
  if (r.trials) {
    nlohmann::json per_trial = nlohmann::json::array();
    for (std::size_t i = 0; i < r.trials->per_trial.size(); ++i) {
      per_trial.push_back({{"trial", r.trials->trial_ids[i]}, {"topk", to_json(r.trials->per_trial[i])}});
    }
    j["trials"] = {{"per_trial", std::move(per_trial)},
                   {"mean", to_json(r.trials->mean)},
                   {"std", to_json(r.trials->stddev)}};
  }
  return j;
}

/// Stable textual form: two-space indentation, trailing newline.
inline std::string dump_report(const EvaluationReport& r, const DatasetManifest& manifest) {
  return to_json(r, manifest).dump(2) + "\n";
}

inline std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

/// Fixed-width comparison table, one row per report, accuracies in percent.
inline std::string format_table(std::span<const EvaluationReport> reports) {
  std::size_t width = 13;
  for (const auto& r : reports) width = std::max(width, r.label.size());
  std::ostringstream os;
  auto cell = [](const std::string& s, std::size_t w) {
    return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
  };
  auto left = [](const std::string& s, std::size_t w) {
    return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
  };
  os << left("Configuration", width) << "  " << cell("Top-1 (%)", 16) << "  " << cell("Top-2 (%)", 16) << "  "
     << cell("Top-3 (%)", 16) << "\n";
  os << std::string(width + 3 * 18, '-') << "\n";
  for (const auto& r : reports) {
    os << left(r.label, width);
    for (std::size_t k = 1; k <= kMaxTopK; ++k) {
      std::string v = r.trials ? percent(r.trials->mean.at(k)) + " +- " + percent(r.trials->stddev.at(k))
                               : percent(r.topk.at(k));
      os << "  " << cell(v, 16);
    }
    os << "\n";
  }
  return os.str();
}

/// Per-domain table for a single report.
inline std::string format_domain_table(const EvaluationReport& r) {
  std::ostringstream os;
  std::size_t width = 6;
  for (const auto& [d, b] : r.per_domain) width = std::max(width, d.size());
  char buf[128];
  os << std::string("Domain") + std::string(width - 6, ' ');
  std::snprintf(buf, sizeof buf, "  %7s  %9s  %9s  %9s\n", "Samples", "Top-1 (%)", "Top-2 (%)", "Top-3 (%)");
  os << buf;
  for (const auto& [d, b] : r.per_domain) {
    os << d << std::string(width - d.size(), ' ');
    std::snprintf(buf, sizeof buf, "  %7zu  %9s  %9s  %9s\n", b.samples, percent(b.topk.at(1)).c_str(),
                  percent(b.topk.at(2)).c_str(), percent(b.topk.at(3)).c_str());
    os << buf;
  }
  return os.str();
}

}  // namespace actalign
