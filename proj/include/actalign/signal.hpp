#pragma once

// Temporal moving-average smoothing of frame embeddings.

#include <cstddef>
#include <string>
#include <vector>

#include "actalign/corpus.hpp"
#include "actalign/error.hpp"

namespace actalign {

/// 1 second at 30 fps.
inline constexpr std::size_t kDefaultSmoothingWindow = 30;

struct SmoothingConfig {
  std::size_t window = 1;  // odd; the filter spans window/2 frames either side
  bool renormalize = true;

  void validate() const {
    if (window < 1) throw ValidationError("smoothing", "window", "must be >= 1");
    if (window % 2 == 0) {
      throw ValidationError("smoothing", "window",
                            "must be odd (got " + std::to_string(window) + ")");
    }
  }
};

/// Maps a requested width onto the symmetric odd window actually applied.
inline std::size_t odd_window(std::size_t requested) noexcept {
  if (requested == 0) return 1;
  return requested % 2 == 0 ? requested + 1 : requested;
}

/// Box filter over time. Rows outside [0, T) count as zero vectors and the
/// divisor is always the full window width, so boundary rows shrink toward
/// zero before renormalization. All-zero output rows stay zero and are
/// listed in `degenerate_rows`.
inline EmbeddingSequence smooth(const EmbeddingSequence& seq, const SmoothingConfig& cfg) {
  cfg.validate();
  if (cfg.window == 1) return seq;

  const std::size_t frames = seq.length();
  const std::size_t dim = seq.dim();
  const std::size_t half = cfg.window / 2;
  const double inv_w = 1.0 / static_cast<double>(cfg.window);

  EmbeddingSequence out;
  out.video_id = seq.video_id;
  out.frames = MatrixD(frames, dim, 0.0);

  // Running window sum: the window of row t covers [t - half, t + half].
  std::vector<double> acc(dim, 0.0);
  auto add_row = [&](std::size_t r, double sign) {
    const auto row = seq.frames.row(r);
    for (std::size_t c = 0; c < dim; ++c) acc[c] += sign * row[c];
  };
  for (std::size_t r = 0; r < frames && r <= half; ++r) add_row(r, 1.0);

  for (std::size_t t = 0; t < frames; ++t) {
    auto dst = out.frames.row(t);
    for (std::size_t c = 0; c < dim; ++c) dst[c] = acc[c] * inv_w;
    if (t + half + 1 < frames) add_row(t + half + 1, 1.0);
    if (t >= half) add_row(t - half, -1.0);
  }

  if (cfg.renormalize) {
    for (std::size_t t = 0; t < frames; ++t) {
      if (!normalize_in_place(out.frames.row(t))) out.degenerate_rows.push_back(t);
    }
  } else {
    for (std::size_t t = 0; t < frames; ++t) {
      if (l2_norm(out.frames.row(t)) == 0.0) out.degenerate_rows.push_back(t);
    }
  }
  return out;
}

}  // namespace actalign
