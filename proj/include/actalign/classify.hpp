#pragma once

// Candidate scoring for one video: the alignment classifier and the
// baselines it is compared against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "actalign/affinity.hpp"
#include "actalign/align.hpp"
#include "actalign/corpus.hpp"
#include "actalign/error.hpp"
#include "actalign/seed.hpp"
#include "actalign/signal.hpp"

namespace actalign {

enum class Method {
  actalign,
  mean_pool_name,
  mean_pool_context,
  bag_of_words,
  reversed_order,
  randomized_order,
  random,
};

inline std::string to_string(Method m) {
  switch (m) {
    case Method::actalign: return "actalign";
    case Method::mean_pool_name: return "mean_pool_name";
    case Method::mean_pool_context: return "mean_pool_context";
    case Method::bag_of_words: return "bag_of_words";
    case Method::reversed_order: return "reversed_order";
    case Method::randomized_order: return "randomized_order";
    case Method::random: return "random";
  }
  return "?";
}

/// Accepts both the report spelling and the CLI spelling.
inline Method parse_method(const std::string& s) {
  if (s == "actalign") return Method::actalign;
  if (s == "mean_pool_name" || s == "mean-pool") return Method::mean_pool_name;
  if (s == "mean_pool_context" || s == "mean-pool-context") return Method::mean_pool_context;
  if (s == "bag_of_words" || s == "bag-of-words") return Method::bag_of_words;
  if (s == "reversed_order" || s == "reversed") return Method::reversed_order;
  if (s == "randomized_order" || s == "randomized") return Method::randomized_order;
  if (s == "random") return Method::random;
  throw ValidationError("method", "", "unknown method '" + s + "'");
}

struct ScoredCandidate {
  std::string class_id;
  double score = 0.0;
};

struct VideoPrediction {
  std::string video_id;
  Method method = Method::actalign;
  std::vector<ScoredCandidate> ranked;  // descending score, ties in manifest order
  std::string predicted;

  /// 1-based position of `class_id` in `ranked`; 0 when absent.
  std::size_t rank_of(const std::string& class_id) const {
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      if (ranked[i].class_id == class_id) return i + 1;
    }
    return 0;
  }
};

/// Sorts candidates by descending score. The sort is stable, so equal
/// scores keep the order of `candidates`.
inline VideoPrediction rank_candidates(std::string video_id, Method method,
                                       const std::vector<std::string>& candidates,
                                       const std::vector<double>& scores) {
  if (candidates.empty() || candidates.size() != scores.size()) {
    throw Error("rank_candidates: need one score per candidate");
  }
  VideoPrediction p;
  p.video_id = std::move(video_id);
  p.method = method;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw Error("non-finite score for candidate " + candidates[i] + " of video " + p.video_id);
    }
    p.ranked.push_back({candidates[i], scores[i]});
  }
  std::stable_sort(p.ranked.begin(), p.ranked.end(),
                   [](const ScoredCandidate& a, const ScoredCandidate& b) { return a.score > b.score; });
  p.predicted = p.ranked.front().class_id;
  return p;
}

// ---------------------------------------------------------------------------
// script perturbations

enum class Perturbation { none, reversed, randomized };

inline SubActionScript reorder_script(const SubActionScript& script, const std::vector<std::size_t>& order) {
  SubActionScript out = script;
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.texts[i] = script.texts[order[i]];
    if (script.has_embeddings()) {
      const auto src = script.embeddings.row(order[i]);
      std::copy(src.begin(), src.end(), out.embeddings.row(i).begin());
    }
  }
  return out;
}

/// Reverses the sub-action order, or applies a uniform permutation drawn
/// from `seed`. The class id and all metadata are preserved.
inline SubActionScript perturb_script(const SubActionScript& script, Perturbation mode, std::uint64_t seed = 0) {
  const std::size_t k = script.length();
  switch (mode) {
    case Perturbation::none: return script;
    case Perturbation::reversed: {
      std::vector<std::size_t> order(k);
      for (std::size_t i = 0; i < k; ++i) order[i] = k - 1 - i;
      return reorder_script(script, order);
    }
    case Perturbation::randomized: return reorder_script(script, seeded_permutation(k, seed));
  }
  return script;
}

// ---------------------------------------------------------------------------
// classifiers

struct AlignmentParams {
  CalibrationParams calibration;
  SmoothingConfig smoothing;
  DtwConfig dtw;
};

namespace detail {

inline const SubActionScript& script_for(const ScriptSet& scripts, const std::string& class_id,
                                         const std::string& video_id) {
  const auto it = scripts.find(class_id);
  if (it == scripts.end()) {
    throw ValidationError("video " + video_id, "candidates", "no sub-action script for class '" + class_id + "'");
  }
  return it->second;
}

inline std::vector<double> pooled_unit(const MatrixD& rows) {
  auto v = mean_row(rows);
  normalize_in_place(v);
  return v;
}

}  // namespace detail

/// Scores every candidate by its normalized alignment score. `frames` are the
/// unsmoothed, unit-norm embeddings; smoothing happens once per video here.
/// With a perturbation, each candidate's script is reordered first; the
/// randomized seed is derived from (run_seed, video, class, trial).
inline VideoPrediction classify_actalign(const VideoEntry& video, const EmbeddingSequence& frames,
                                         const ScriptSet& scripts, const AlignmentParams& params,
                                         Perturbation perturbation = Perturbation::none,
                                         std::uint64_t run_seed = 0, std::uint64_t trial = 0) {
  const auto smoothed = smooth(frames, params.smoothing);
  std::vector<double> scores;
  scores.reserve(video.candidates.size());
  for (const auto& class_id : video.candidates) {
    const auto& script = detail::script_for(scripts, class_id, video.video_id);
    if (perturbation == Perturbation::none) {
      scores.push_back(align_smoothed(script, smoothed, params.calibration, params.dtw).normalized_score);
    } else {
      const auto seed = derive_seed(run_seed, video.video_id, class_id, trial);
      const auto perturbed = perturb_script(script, perturbation, seed);
      scores.push_back(align_smoothed(perturbed, smoothed, params.calibration, params.dtw).normalized_score);
    }
  }
  const Method tag = perturbation == Perturbation::reversed     ? Method::reversed_order
                     : perturbation == Perturbation::randomized ? Method::randomized_order
                                                                : Method::actalign;
  return rank_candidates(video.video_id, tag, video.candidates, scores);
}

/// Cosine between the renormalized temporal mean of the frames and each
/// candidate's class-name embedding.
inline VideoPrediction classify_mean_pool(const VideoEntry& video, const EmbeddingSequence& frames,
                                          const NameEmbeddings& names, Method tag = Method::mean_pool_name) {
  const auto pooled = detail::pooled_unit(frames.frames);
  std::vector<double> scores;
  for (const auto& class_id : video.candidates) {
    const auto it = names.find(class_id);
    if (it == names.end()) {
      throw ValidationError("video " + video.video_id, "candidates",
                            "no name embedding for class '" + class_id + "'");
    }
    if (it->second.embedding.size() != pooled.size()) {
      throw ValidationError("name " + class_id, "dim", "dimension mismatch with frame embeddings");
    }
    scores.push_back(cosine(pooled, it->second.embedding));
  }
  return rank_candidates(video.video_id, tag, video.candidates, scores);
}

/// Order-free baseline: mean of the sub-action embeddings against the mean
/// of the frames.
inline VideoPrediction classify_bag_of_words(const VideoEntry& video, const EmbeddingSequence& frames,
                                             const ScriptSet& scripts) {
  const auto pooled = detail::pooled_unit(frames.frames);
  std::vector<double> scores;
  for (const auto& class_id : video.candidates) {
    const auto& script = detail::script_for(scripts, class_id, video.video_id);
    if (!script.has_embeddings()) {
      throw ValidationError("script " + class_id, "embedding_file", "script has no embeddings");
    }
    if (script.embeddings.cols() != pooled.size()) {
      throw ValidationError("script " + class_id, "dim", "dimension mismatch with frame embeddings");
    }
    scores.push_back(cosine(pooled, detail::pooled_unit(script.embeddings)));
  }
  return rank_candidates(video.video_id, Method::bag_of_words, video.candidates, scores);
}

/// Chance baseline: i.i.d. uniform scores per candidate.
inline VideoPrediction classify_random(const VideoEntry& video, std::uint64_t run_seed, std::uint64_t trial) {
  std::vector<double> scores;
  for (const auto& class_id : video.candidates) {
    std::mt19937_64 rng(derive_seed(run_seed, video.video_id, class_id, trial));
    scores.push_back(uniform_unit(rng));
  }
  return rank_candidates(video.video_id, Method::random, video.candidates, scores);
}

}  // namespace actalign
