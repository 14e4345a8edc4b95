#pragma once

// Max-similarity dynamic time warping over a calibrated affinity matrix.
//
// Rows index sub-actions (k), columns index frames (t). A warping path starts
// at (0, 0) and advances by one of
//   diagonal (+1, +1)   up (+1, 0) = next sub-action   left (0, +1) = next frame.

#include <array>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "actalign/affinity.hpp"
#include "actalign/corpus.hpp"
#include "actalign/error.hpp"
#include "actalign/matrix.hpp"
#include "actalign/signal.hpp"

namespace actalign {

enum class Endpoint {
  anchored_end,  // path must finish at (K-1, T-1)
  open_end,      // path finishes at the best cell of the table
};

enum class Step { diagonal, up, left };

using TieBreakOrder = std::array<Step, 3>;

inline constexpr TieBreakOrder kDefaultTieBreak{Step::diagonal, Step::up, Step::left};

struct DtwConfig {
  Endpoint endpoint = Endpoint::anchored_end;
  TieBreakOrder tie_break = kDefaultTieBreak;
};

struct Cell {
  std::size_t k = 0;
  std::size_t t = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct AlignmentResult {
  std::vector<Cell> path;   // from (0, 0) to the end cell
  double raw_score = 0.0;   // sum of calibrated affinities along the path
  double normalized_score = 0.0;  // raw_score / path length
  Cell dp_max_cell;         // argmax of the cumulative table
};

inline std::string to_string(Endpoint e) { return e == Endpoint::anchored_end ? "anchored_end" : "open_end"; }

inline Endpoint parse_endpoint(const std::string& s) {
  if (s == "anchored_end" || s == "anchored") return Endpoint::anchored_end;
  if (s == "open_end" || s == "open") return Endpoint::open_end;
  throw ValidationError("dtw", "endpoint", "unknown endpoint '" + s + "'");
}

inline std::string to_string(Step s) {
  switch (s) {
    case Step::diagonal: return "diagonal";
    case Step::up: return "up";
    case Step::left: return "left";
  }
  return "?";
}

inline Step parse_step(const std::string& s) {
  if (s == "diagonal") return Step::diagonal;
  if (s == "up") return Step::up;
  if (s == "left") return Step::left;
  throw ValidationError("dtw", "tie_break", "unknown step '" + s + "'");
}

inline void validate_tie_break(const TieBreakOrder& order) {
  bool seen[3] = {false, false, false};
  for (const Step s : order) seen[static_cast<int>(s)] = true;
  if (!(seen[0] && seen[1] && seen[2])) {
    throw ValidationError("dtw", "tie_break", "must be a permutation of diagonal, up, left");
  }
}

/// Cumulative table D[k][t] = A[k][t] + max(D[k][t-1], D[k-1][t], D[k-1][t-1]),
/// with out-of-range predecessors at -inf and D[0][0] = A[0][0].
inline MatrixD dtw_table(const MatrixD& affinity) {
  const std::size_t rows = affinity.rows();
  const std::size_t cols = affinity.cols();
  if (rows == 0 || cols == 0) throw Error("dtw_table: empty affinity matrix");

  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  MatrixD d(rows, cols);
  for (std::size_t k = 0; k < rows; ++k) {
    for (std::size_t t = 0; t < cols; ++t) {
      double best = neg_inf;
      if (t > 0) best = std::max(best, d(k, t - 1));
      if (k > 0) best = std::max(best, d(k - 1, t));
      if (k > 0 && t > 0) best = std::max(best, d(k - 1, t - 1));
      d(k, t) = affinity(k, t) + (k == 0 && t == 0 ? 0.0 : best);
    }
  }
  return d;
}

/// Walks back from the end cell, at each step taking the predecessor with the
/// largest cumulative value; exact ties resolve in `cfg.tie_break` order.
inline AlignmentResult backtrack(const MatrixD& table, const MatrixD& affinity, const DtwConfig& cfg) {
  AlignmentResult result;
  const std::size_t rows = table.rows();
  const std::size_t cols = table.cols();

  Cell best{0, 0};
  for (std::size_t k = 0; k < rows; ++k) {
    for (std::size_t t = 0; t < cols; ++t) {
      if (table(k, t) > table(best.k, best.t)) best = {k, t};
    }
  }
  result.dp_max_cell = best;

  Cell cur = cfg.endpoint == Endpoint::anchored_end ? Cell{rows - 1, cols - 1} : best;
  std::vector<Cell> reversed{cur};
  while (cur.k != 0 || cur.t != 0) {
    bool found = false;
    Cell next{};
    double next_value = 0.0;
    for (const Step step : cfg.tie_break) {
      Cell cand{};
      switch (step) {
        case Step::diagonal:
          if (cur.k == 0 || cur.t == 0) continue;
          cand = {cur.k - 1, cur.t - 1};
          break;
        case Step::up:
          if (cur.k == 0) continue;
          cand = {cur.k - 1, cur.t};
          break;
        case Step::left:
          if (cur.t == 0) continue;
          cand = {cur.k, cur.t - 1};
          break;
      }
      const double v = table(cand.k, cand.t);
      if (!found || v > next_value) {
        found = true;
        next = cand;
        next_value = v;
      }
    }
    cur = next;
    reversed.push_back(cur);
  }

  result.path.assign(reversed.rbegin(), reversed.rend());
  for (const Cell& c : result.path) result.raw_score += affinity(c.k, c.t);
  result.normalized_score = result.raw_score / static_cast<double>(result.path.size());
  return result;
}

inline AlignmentResult align_affinity(const MatrixD& calibrated, const DtwConfig& cfg) {
  return backtrack(dtw_table(calibrated), calibrated, cfg);
}

/// Aligns a script against frames that have already been smoothed.
inline AlignmentResult align_smoothed(const SubActionScript& script, const EmbeddingSequence& smoothed,
                                      const CalibrationParams& cal, const DtwConfig& cfg) {
  return align_affinity(build_affinity(script, smoothed, cal).calibrated, cfg);
}

/// smooth -> affinity -> DTW table -> backtrack.
inline AlignmentResult align(const SubActionScript& script, const EmbeddingSequence& seq,
                             const CalibrationParams& cal, const SmoothingConfig& smoothing,
                             const DtwConfig& cfg) {
  return align_smoothed(script, smooth(seq, smoothing), cal, cfg);
}

/// Export record consumed by figure tooling. Path cells are 0-based [k, t].
inline nlohmann::json path_to_json(const std::string& video_id, const std::string& class_id,
                                   const AlignmentResult& r) {
  nlohmann::json path = nlohmann::json::array();
  for (const Cell& c : r.path) path.push_back({c.k, c.t});
  return {{"video_id", video_id},
          {"class_id", class_id},
          {"path", std::move(path)},
          {"gamma", r.raw_score},
          {"gamma_hat", r.normalized_score}};
}

}  // namespace actalign
