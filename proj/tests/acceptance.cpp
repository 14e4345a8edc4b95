// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "actalign/runner.hpp"
#include "actalign/synthetic.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace actalign;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

bool valid_path(const std::vector<Cell>& path, Cell end) {
  if (path.empty() || path.front() != Cell{0, 0} || path.back() != end) return false;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const auto dk = path[i].k - path[i - 1].k;
    const auto dt = path[i].t - path[i - 1].t;
    if (path[i].k < path[i - 1].k || path[i].t < path[i - 1].t || dk > 1 || dt > 1 || dk + dt == 0) return false;
  }
  return true;
}

Outcome dtw_oracle() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<std::size_t> kd(1, 4), td(1, 6);
  const auto start = Clock::now();
  double worst = 0.0;
  std::size_t bad_paths = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = actalign::testing::random_affinity(kd(rng), td(rng), rng);
    const auto anchored = align_affinity(a, {Endpoint::anchored_end, kDefaultTieBreak});
    const auto open = align_affinity(a, {Endpoint::open_end, kDefaultTieBreak});
    const auto table = dtw_table(a);
    const double oracle_anchored = actalign::testing::best_anchored_sum(a);
    const double oracle_open = actalign::testing::best_open_sum(a);
    worst = std::max({worst, std::abs(table(a.rows() - 1, a.cols() - 1) - oracle_anchored),
                      std::abs(anchored.raw_score - oracle_anchored), std::abs(open.raw_score - oracle_open)});
    if (!valid_path(anchored.path, {a.rows() - 1, a.cols() - 1})) ++bad_paths;
    if (!valid_path(open.path, open.dp_max_cell)) ++bad_paths;
  }
  const double elapsed = seconds_since(start);
  char buf[160];
  std::snprintf(buf, sizeof buf, "1000 matrices, max |diff| %.3g, invalid paths %zu, %.3f s", worst, bad_paths,
                elapsed);
  return {worst <= 1e-9 && bad_paths == 0 && elapsed < 10.0, buf};
}

Outcome normalized_bound() {
  std::mt19937_64 rng(1002);
  std::uniform_int_distribution<std::size_t> kd(1, 8), td(1, 40);
  std::uniform_real_distribution<double> ad(0.5, 30.0), bd(-5.0, 5.0);
  std::size_t violations = 0;
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t d = 8;
    const auto u = actalign::testing::random_unit_matrix(kd(rng), d, rng);
    const auto z = actalign::testing::random_unit_matrix(td(rng), d, rng);
    CalibrationParams cal;
    cal.alpha = ad(rng);
    cal.beta = bd(rng);
    const auto aff = build_affinity(u, z, cal);
    const auto endpoint = i % 2 == 0 ? Endpoint::anchored_end : Endpoint::open_end;
    const double g = align_affinity(aff.calibrated, {endpoint, kDefaultTieBreak}).normalized_score;
    if (!(g > 0.0 && g < 1.0)) ++violations;
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "10000 instances, range [%.6g, %.6g], violations %zu", lo, hi, violations);
  return {violations == 0, buf};
}

Outcome smoothing_equivalence() {
  std::mt19937_64 rng(1003);
  std::uniform_int_distribution<std::size_t> td(1, 20), dd(1, 8);
  double worst = 0.0;
  std::size_t identity_failures = 0;
  for (int i = 0; i < 600; ++i) {
    const std::size_t w = std::array<std::size_t, 3>{1, 3, 5}[i % 3];
    EmbeddingSequence seq{"v", actalign::testing::random_matrix(td(rng), dd(rng), rng), {}};
    const auto smoothed = smooth(seq, {w, false});
    const auto expected = actalign::testing::smooth_bruteforce(seq.frames, w);
    for (std::size_t t = 0; t < expected.rows(); ++t) {
      for (std::size_t c = 0; c < expected.cols(); ++c) {
        worst = std::max(worst, std::abs(smoothed.frames(t, c) - expected(t, c)));
      }
    }
    if (w == 1 && !(smoothed.frames == seq.frames)) ++identity_failures;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "600 sequences, max |diff| %.3g, w=1 non-identical %zu", worst, identity_failures);
  return {worst <= 1e-6 && identity_failures == 0, buf};
}

Outcome single_step_degeneracy() {
  std::mt19937_64 rng(1004);
  std::uniform_int_distribution<std::size_t> td(1, 200);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = actalign::testing::random_affinity(1, td(rng), rng);
    double sum = 0.0;
    for (std::size_t t = 0; t < a.cols(); ++t) sum += a(0, t);
    const double mean = sum / static_cast<double>(a.cols());
    worst = std::max(worst, std::abs(align_affinity(a, {}).normalized_score - mean));
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "1000 single-row matrices, max |diff| %.3g", worst);
  return {worst <= 1e-9, buf};
}

DatasetManifest atlas_like_manifest(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.videos = 898;
  spec.classes = 60;
  spec.dim = 8;
  spec.frames_mean = 4;
  spec.frames_spread = 2;
  spec.candidate_sizes = kAtlasLikeCandidateSizes;
  spec.seed = seed;
  return make_synthetic_corpus(spec).manifest;
}

Outcome random_baseline() {
  const auto manifest = atlas_like_manifest(1005);
  double mean_size = 0.0;
  for (const auto& v : manifest.videos) mean_size += static_cast<double>(v.candidates.size());
  mean_size /= static_cast<double>(manifest.videos.size());

  Workspace ws(manifest, [](const VideoEntry& v) -> EmbeddingSequence {
    throw Error("frames requested for " + v.video_id);
  });
  RunConfig cfg;
  cfg.method = Method::random;
  cfg.trials = 10;
  cfg.seed = 2024;
  const auto report = evaluate(ws, cfg);
  const double top1 = 100.0 * report.trials->mean.at(1);
  char buf[160];
  std::snprintf(buf, sizeof buf, "898 videos, mean candidates %.3f, Top-1 %.2f%% +- %.2f over 10 trials (target 20.8 +- 1.0)",
                mean_size, top1, 100.0 * report.trials->stddev.at(1));
  return {std::abs(top1 - 20.8) <= 1.0 && std::abs(mean_size - 5.26) < 0.01, buf};
}

Outcome determinism() {
  actalign::testing::TempDir dir("actalign_accept");
  SyntheticSpec spec;
  spec.videos = 40;
  const auto corpus = make_synthetic_corpus(spec);
  const auto files = write_synthetic_corpus(corpus, dir.path());
  std::size_t mismatches = 0;
  for (const auto method : {Method::actalign, Method::randomized_order, Method::random, Method::mean_pool_name}) {
    auto cfg = files.run_config();
    cfg.method = method;
    cfg.smoothing_window = 5;
    cfg.seed = 11;
    if (method == Method::randomized_order) cfg.scripts = cfg.scripts_short_fixed;
    auto first_cfg = cfg;
    first_cfg.workers = 1;
    auto second_cfg = cfg;
    second_cfg.workers = 4;
    auto ws1 = Workspace::open(first_cfg);
    auto ws2 = Workspace::open(second_cfg);
    const auto a = dump_report(evaluate(ws1, first_cfg), ws1.manifest());
    const auto b = dump_report(evaluate(ws2, second_cfg), ws2.manifest());
    if (a != b) ++mismatches;
  }
  return {mismatches == 0, "4 methods, fresh workspaces, 1 vs 4 workers, mismatching reports " +
                               std::to_string(mismatches)};
}

Outcome throughput() {
  SyntheticSpec spec;
  spec.videos = 898;
  spec.classes = 120;
  spec.dim = 384;
  spec.frames_mean = 173;
  spec.frames_spread = 60;
  spec.sub_actions_min = 4;
  spec.sub_actions_max = 6;
  spec.candidates = 5;
  spec.seed = 1007;
  const auto corpus = make_synthetic_corpus(spec);
  Workspace ws(corpus.manifest, corpus.frame_source());
  ws.add_scripts("scripts", corpus.scripts);
  RunConfig cfg;
  cfg.scripts = "scripts";
  const auto start = Clock::now();
  const auto report = evaluate(ws, cfg);
  const auto text = dump_report(report, ws.manifest());
  const double elapsed = seconds_since(start);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu videos, d=384, %.2f s (limit 60 s), report %zu bytes",
                report.per_video.size(), elapsed, text.size());
  return {elapsed <= 60.0 && report.per_video.size() == 898, buf};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"DTW oracle equivalence", dtw_oracle},
      {"Normalized-score bound", normalized_bound},
      {"Smoothing brute-force equivalence", smoothing_equivalence},
      {"K=1 degeneracy", single_step_degeneracy},
      {"Random-baseline calibration", random_baseline},
      {"Determinism", determinism},
      {"Throughput", throughput},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
