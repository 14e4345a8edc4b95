#pragma once

// Sub-action x frame similarity and its sigmoid calibration.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>

#include <json.hpp>

#include "actalign/corpus.hpp"
#include "actalign/error.hpp"
#include "actalign/matrix.hpp"

namespace actalign {

/// Logit scale and bias of the image-text encoder.
struct CalibrationParams {
  double alpha = 10.0;
  double beta = 0.0;
  std::string source = "default";
  bool calibrated = false;  // false when the defaults above are in use

  void validate() const {
    if (!std::isfinite(alpha) || alpha <= 0.0) {
      throw ValidationError("calibration", "alpha", "must be finite and > 0");
    }
    if (!std::isfinite(beta)) throw ValidationError("calibration", "beta", "must be finite");
  }
};

inline nlohmann::json to_json(const CalibrationParams& c) {
  return {{"alpha", c.alpha}, {"beta", c.beta}, {"source", c.source}, {"calibrated", c.calibrated}};
}

/// Reads `{"alpha", "beta", "source"}`.
inline CalibrationParams load_calibration(const std::filesystem::path& path) {
  const auto doc = detail::read_json_file(path);
  CalibrationParams c;
  c.alpha = detail::required_field<double>(doc, "alpha", path.string());
  c.beta = detail::required_field<double>(doc, "beta", path.string());
  c.source = detail::optional_field<std::string>(doc, "source", path.string(), path.string());
  c.calibrated = true;
  c.validate();
  return c;
}

/// Logistic function clamped to the open interval (0, 1). Large logits
/// would otherwise round to exactly 0 or 1 in double precision.
inline double sigmoid(double x) noexcept {
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  const double y = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  return std::clamp(y, lo, hi);
}

struct AffinityMatrix {
  std::string class_id;
  std::string video_id;
  MatrixD raw;         // K x T inner products, clamped to [-1, 1]
  MatrixD calibrated;  // K x T, sigmoid(alpha * raw + beta)

  std::size_t sub_actions() const noexcept { return raw.rows(); }
  std::size_t frames() const noexcept { return raw.cols(); }
};

/// Inner products of unit rows `sub_actions` (K x d) against `frames` (T x d).
inline AffinityMatrix build_affinity(const MatrixD& sub_actions, const MatrixD& frames,
                                     const CalibrationParams& cal) {
  if (sub_actions.cols() != frames.cols()) {
    throw ValidationError("affinity", "dim",
                          "dimension mismatch: sub-actions have d=" + std::to_string(sub_actions.cols()) +
                              ", frames have d=" + std::to_string(frames.cols()));
  }
  AffinityMatrix a;
  a.raw = MatrixD(sub_actions.rows(), frames.rows());
  a.calibrated = MatrixD(sub_actions.rows(), frames.rows());
  for (std::size_t k = 0; k < sub_actions.rows(); ++k) {
    const auto u = sub_actions.row(k);
    for (std::size_t t = 0; t < frames.rows(); ++t) {
      const double r = std::clamp(dot(u, frames.row(t)), -1.0, 1.0);
      a.raw(k, t) = r;
      a.calibrated(k, t) = sigmoid(cal.alpha * r + cal.beta);
    }
  }
  return a;
}

inline AffinityMatrix build_affinity(const SubActionScript& script, const EmbeddingSequence& seq,
                                     const CalibrationParams& cal) {
  if (!script.has_embeddings()) {
    throw ValidationError("script " + script.class_id, "embedding_file", "script has no embeddings");
  }
  auto a = build_affinity(script.embeddings, seq.frames, cal);
  a.class_id = script.class_id;
  a.video_id = seq.video_id;
  return a;
}

}  // namespace actalign
