#pragma once

// Loading and validation of the on-disk corpus: dataset manifest, per-video
// frame embeddings, sub-action scripts and class-name embeddings.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "actalign/error.hpp"
#include "actalign/matrix.hpp"
#include "actalign/tensor_io.hpp"

namespace actalign {

inline constexpr double kUnitNormTolerance = 1e-4;

struct VideoEntry {
  std::string video_id;
  std::string domain;
  std::size_t frame_count = 0;
  std::vector<std::string> candidates;  // manifest order doubles as tie-break order
  std::string ground_truth;
  std::filesystem::path embedding_file;  // resolved against the manifest directory
};

struct DatasetManifest {
  std::vector<VideoEntry> videos;
  std::map<std::string, std::string> domains;

  std::size_t size() const noexcept { return videos.size(); }

  const VideoEntry* find(const std::string& video_id) const {
    for (const auto& v : videos) {
      if (v.video_id == video_id) return &v;
    }
    return nullptr;
  }
};

/// Frame embeddings of one video, one row per frame.
struct EmbeddingSequence {
  std::string video_id;
  MatrixD frames;
  /// Rows that were all-zero after smoothing and could not be renormalized.
  std::vector<std::size_t> degenerate_rows;

  std::size_t length() const noexcept { return frames.rows(); }
  std::size_t dim() const noexcept { return frames.cols(); }
};

enum class PromptStyle { short_fixed, context_rich };

inline std::string to_string(PromptStyle s) {
  return s == PromptStyle::short_fixed ? "short_fixed" : "context_rich";
}

inline PromptStyle parse_prompt_style(const std::string& s) {
  if (s == "short_fixed" || s == "short-fixed") return PromptStyle::short_fixed;
  if (s == "context_rich" || s == "context-rich") return PromptStyle::context_rich;
  throw ValidationError("prompt_style", "", "unknown prompt style '" + s + "'");
}

/// Ordered sub-action decomposition of one action class.
struct SubActionScript {
  std::string class_id;
  std::string domain;
  std::vector<std::string> texts;
  MatrixD embeddings;  // K x d, unit rows; empty when the script carries text only
  PromptStyle prompt_style = PromptStyle::context_rich;
  bool context_augmented = false;

  std::size_t length() const noexcept { return texts.size(); }
  bool has_embeddings() const noexcept { return !embeddings.empty(); }
};

using ScriptSet = std::map<std::string, SubActionScript>;

struct ClassNameEmbedding {
  std::string class_id;
  std::vector<double> embedding;
};

using NameEmbeddings = std::map<std::string, ClassNameEmbedding>;

// ---------------------------------------------------------------------------
// helpers

namespace detail {

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string(), "", "cannot open file");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string(), "", std::string("JSON parse failure: ") + e.what());
  }
}

template <typename T>
T required_field(const nlohmann::json& obj, const char* key, const std::string& subject) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ValidationError(subject, key, "missing field");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(subject, key, "wrong type");
  }
}

template <typename T>
T optional_field(const nlohmann::json& obj, const char* key, T fallback, const std::string& subject) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(subject, key, "wrong type");
  }
}

inline std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace detail

/// Checks every value is finite and rescales each row to unit L2 norm.
/// A zero row cannot be normalized and is reported by index.
inline void normalize_rows(MatrixD& m, const std::string& origin) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!std::isfinite(row[c])) {
        throw ValidationError(origin, "row " + std::to_string(r),
                              "non-finite value at column " + std::to_string(c));
      }
    }
    if (!normalize_in_place(row)) {
      throw ValidationError(origin, "row " + std::to_string(r), "zero-norm row cannot be normalized");
    }
  }
}

// ---------------------------------------------------------------------------
// manifest

inline DatasetManifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                                      const std::string& origin = "manifest") {
  DatasetManifest manifest;
  if (!doc.is_object() || !doc.contains("videos") || !doc.at("videos").is_array()) {
    throw ValidationError(origin, "videos", "missing or not an array");
  }
  if (doc.contains("domains")) {
    if (!doc.at("domains").is_object()) throw ValidationError(origin, "domains", "not an object");
    for (const auto& [id, name] : doc.at("domains").items()) {
      if (!name.is_string()) throw ValidationError(origin, "domains." + id, "not a string");
      manifest.domains[id] = name.get<std::string>();
    }
  }

  std::set<std::string> seen;
  std::size_t index = 0;
  for (const auto& item : doc.at("videos")) {
    const std::string where = origin + " video[" + std::to_string(index++) + "]";
    VideoEntry v;
    v.video_id = detail::required_field<std::string>(item, "video_id", where);
    const std::string subject = "video " + v.video_id;
    v.domain = detail::required_field<std::string>(item, "domain", subject);
    const auto frames = detail::required_field<long long>(item, "frame_count", subject);
    if (frames < 1) throw ValidationError(subject, "frame_count", "must be >= 1");
    v.frame_count = static_cast<std::size_t>(frames);
    v.candidates = detail::required_field<std::vector<std::string>>(item, "candidates", subject);
    if (v.candidates.size() < 2) {
      throw ValidationError(subject, "candidates", "need at least 2 candidates");
    }
    if (std::set<std::string>(v.candidates.begin(), v.candidates.end()).size() != v.candidates.size()) {
      throw ValidationError(subject, "candidates", "duplicate candidate class id");
    }
    v.ground_truth = detail::required_field<std::string>(item, "ground_truth", subject);
    if (std::find(v.candidates.begin(), v.candidates.end(), v.ground_truth) == v.candidates.end()) {
      throw ValidationError(subject, "ground_truth",
                            "'" + v.ground_truth + "' is not among the candidates");
    }
    v.embedding_file =
        detail::resolve_path(base_dir, detail::required_field<std::string>(item, "embedding_file", subject));
    if (!seen.insert(v.video_id).second) {
      throw ValidationError(subject, "video_id", "duplicate video id");
    }
    manifest.videos.push_back(std::move(v));
  }
  return manifest;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(detail::read_json_file(path), path.parent_path(), path.string());
}

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json videos = nlohmann::json::array();
  for (const auto& v : m.videos) {
    videos.push_back({{"video_id", v.video_id},
                      {"domain", v.domain},
                      {"frame_count", v.frame_count},
                      {"candidates", v.candidates},
                      {"ground_truth", v.ground_truth},
                      {"embedding_file", v.embedding_file.string()}});
  }
  return {{"videos", std::move(videos)}, {"domains", m.domains}};
}

// ---------------------------------------------------------------------------
// embeddings

/// Loads frame embeddings and L2-normalizes every row. The row count must
/// equal `expected_frames`; `expected_dim` is checked when given.
inline EmbeddingSequence load_embeddings(const std::filesystem::path& path, std::size_t expected_frames,
                                         std::optional<std::size_t> expected_dim = std::nullopt,
                                         std::string video_id = {}) {
  if (!std::filesystem::exists(path)) {
    throw ValidationError(path.string(), "", "embedding file not found");
  }
  EmbeddingSequence seq;
  seq.video_id = std::move(video_id);
  seq.frames = read_tensor(path);
  if (seq.frames.rows() != expected_frames) {
    throw ValidationError(path.string(), "rows",
                          "shape mismatch: file has " + std::to_string(seq.frames.rows()) +
                              " frames, manifest expects " + std::to_string(expected_frames));
  }
  if (expected_dim && seq.frames.cols() != *expected_dim) {
    throw ValidationError(path.string(), "cols",
                          "shape mismatch: file has dim " + std::to_string(seq.frames.cols()) +
                              ", expected " + std::to_string(*expected_dim));
  }
  if (seq.frames.cols() == 0) throw ValidationError(path.string(), "cols", "zero embedding dimension");
  normalize_rows(seq.frames, path.string());
  return seq;
}

// ---------------------------------------------------------------------------
// scripts

/// Loads a script document `{class_id: {"domain", "texts", "embedding_file"}}`.
/// Per-class "prompt_style" / "context_augmented" keys override the defaults.
inline ScriptSet load_scripts(const std::filesystem::path& path,
                              PromptStyle default_style = PromptStyle::context_rich,
                              bool default_augmented = false) {
  const auto doc = detail::read_json_file(path);
  if (!doc.is_object()) throw ValidationError(path.string(), "", "expected an object keyed by class id");
  const auto base = path.parent_path();

  ScriptSet scripts;
  for (const auto& [class_id, entry] : doc.items()) {
    const std::string subject = path.string() + " class " + class_id;
    SubActionScript s;
    s.class_id = class_id;
    if (!entry.is_object()) throw ValidationError(subject, "", "expected an object");
    s.domain = detail::optional_field<std::string>(entry, "domain", "", subject);
    s.texts = detail::required_field<std::vector<std::string>>(entry, "texts", subject);
    if (s.texts.empty()) throw ValidationError(subject, "texts", "empty sub-action list");
    s.prompt_style = entry.contains("prompt_style")
                         ? parse_prompt_style(detail::required_field<std::string>(entry, "prompt_style", subject))
                         : default_style;
    s.context_augmented = detail::optional_field<bool>(entry, "context_augmented", default_augmented, subject);
    if (entry.contains("embedding_file")) {
      const auto file =
          detail::resolve_path(base, detail::required_field<std::string>(entry, "embedding_file", subject));
      if (!std::filesystem::exists(file)) {
        throw ValidationError(subject, "embedding_file", "file not found: " + file.string());
      }
      s.embeddings = read_tensor(file);
      if (s.embeddings.rows() != s.texts.size()) {
        throw ValidationError(subject, "embedding_file",
                              "length mismatch: " + std::to_string(s.texts.size()) + " texts vs " +
                                  std::to_string(s.embeddings.rows()) + " embedding rows");
      }
      normalize_rows(s.embeddings, file.string());
    }
    scripts.emplace(class_id, std::move(s));
  }
  return scripts;
}

// ---------------------------------------------------------------------------
// class-name embeddings

/// Loads `{class_id: {"text"?, "embedding_file"}}` where each tensor holds a
/// single row.
inline NameEmbeddings load_name_embeddings(const std::filesystem::path& path) {
  const auto doc = detail::read_json_file(path);
  if (!doc.is_object()) throw ValidationError(path.string(), "", "expected an object keyed by class id");
  const auto base = path.parent_path();

  NameEmbeddings names;
  for (const auto& [class_id, entry] : doc.items()) {
    const std::string subject = path.string() + " class " + class_id;
    const auto file =
        detail::resolve_path(base, detail::required_field<std::string>(entry, "embedding_file", subject));
    if (!std::filesystem::exists(file)) {
      throw ValidationError(subject, "embedding_file", "file not found: " + file.string());
    }
    auto m = read_tensor(file);
    if (m.rows() != 1) {
      throw ValidationError(subject, "embedding_file",
                            "expected exactly one row, found " + std::to_string(m.rows()));
    }
    normalize_rows(m, file.string());
    names.emplace(class_id, ClassNameEmbedding{class_id, {m.row(0).begin(), m.row(0).end()}});
  }
  return names;
}

}  // namespace actalign
