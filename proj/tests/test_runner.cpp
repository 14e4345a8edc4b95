#include <cstdlib>
#include <fstream>

#include <gtest/gtest.h>

#include "actalign/runner.hpp"
#include "actalign/synthetic.hpp"
#include "test_support.hpp"

using namespace actalign;
using actalign::testing::TempDir;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec spec;
  spec.videos = 24;
  spec.classes = 10;
  spec.dim = 16;
  spec.frames_mean = 30;
  return spec;
}

struct DiskCorpus {
  TempDir dir;
  SyntheticCorpus corpus = make_synthetic_corpus(small_spec());
  CorpusFiles files = write_synthetic_corpus(corpus, dir.path());
  RunConfig config() const {
    auto c = files.run_config();
    c.smoothing_window = 5;
    return c;
  }
};

}  // namespace

TEST(RunConfigJson, RoundTrip) {
  RunConfig c;
  c.manifest = "m.json";
  c.scripts = "s.json";
  c.smoothing_window = 21;
  c.renormalize = false;
  c.endpoint = Endpoint::open_end;
  c.tie_break = {Step::left, Step::diagonal, Step::up};
  c.method = Method::randomized_order;
  c.seed = 17;
  c.trials = 3;
  const auto back = run_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  const auto from_report = run_config_from_json(nlohmann::json{{"run_config", to_json(c)}, {"topk", {}}});
  EXPECT_EQ(to_json(from_report), to_json(c));
  EXPECT_EQ(to_json(c).at("effective_smoothing_window"), 21);
  EXPECT_THROW(run_config_from_json(nlohmann::json{{"tie_break", {"up", "up", "left"}}}), ValidationError);
}

TEST(Evaluate, ReportCoversEveryVideoAndIsDeterministic) {
  DiskCorpus dc;
  auto cfg = dc.config();
  auto ws = Workspace::open(cfg);
  cfg.workers = 1;
  const auto a = dump_report(evaluate(ws, cfg), ws.manifest());
  cfg.workers = 4;
  const auto report = evaluate(ws, cfg);
  const auto b = dump_report(report, ws.manifest());
  EXPECT_EQ(a, b);
  EXPECT_EQ(report.per_video.size(), 24u);
  EXPECT_GT(report.topk.at(1), 0.3);  // chance is 0.2
  std::size_t total = 0;
  for (const auto& [d, bd] : report.per_domain) total += bd.samples;
  EXPECT_EQ(total, 24u);
  EXPECT_FALSE(report.trials.has_value());
  EXPECT_EQ(report.run_config.at("resolved_calibration").at("source"), "synthetic");
}

TEST(Evaluate, InMemoryWorkspaceMatchesAcrossRuns) {
  const auto corpus = make_synthetic_corpus(small_spec());
  Workspace ws(corpus.manifest, corpus.frame_source());
  ws.add_scripts("plain", corpus.scripts);
  RunConfig cfg;
  cfg.scripts = "plain";
  cfg.smoothing_window = 3;
  const auto r1 = evaluate(ws, cfg);
  const auto r2 = evaluate(ws, cfg);
  EXPECT_EQ(dump_report(r1, ws.manifest()), dump_report(r2, ws.manifest()));
}

TEST(Evaluate, RandomizedTrialsSummarized) {
  DiskCorpus dc;
  auto cfg = dc.config();
  cfg.scripts = cfg.scripts_short_fixed;
  cfg.method = Method::randomized_order;
  cfg.trials = 5;
  auto ws = Workspace::open(cfg);
  const auto r = evaluate(ws, cfg);
  ASSERT_TRUE(r.trials.has_value());
  EXPECT_EQ(r.trials->per_trial.size(), 5u);
  EXPECT_EQ(r.run_config.at("trials"), 5);
  // Trial 0 drives the headline numbers.
  EXPECT_DOUBLE_EQ(r.topk.at(1), r.trials->per_trial[0].at(1));
  const auto j = to_json(r, ws.manifest());
  EXPECT_EQ(j.at("trials").at("per_trial").size(), 5u);
  EXPECT_TRUE(j.at("trials").contains("std"));
}

TEST(Evaluate, EveryMethodRuns) {
  DiskCorpus dc;
  auto ws = Workspace::open(dc.config());
  for (const auto m : {Method::actalign, Method::mean_pool_name, Method::mean_pool_context, Method::bag_of_words,
                       Method::reversed_order, Method::randomized_order, Method::random}) {
    auto cfg = dc.config();
    cfg.method = m;
    cfg.trials = 2;
    const auto r = evaluate(ws, cfg);
    EXPECT_EQ(r.per_video.size(), 24u) << to_string(m);
    for (const auto& p : r.per_video) EXPECT_EQ(p.method, m);
  }
}

TEST(Evaluate, MissingInputsAreValidationErrors) {
  DiskCorpus dc;
  auto cfg = dc.config();
  cfg.names.clear();
  cfg.method = Method::mean_pool_name;
  auto ws = Workspace::open(cfg);
  EXPECT_THROW(evaluate(ws, cfg), ValidationError);

  std::filesystem::remove(dc.dir / "embeddings/video_0003.aaln");
  try {
    Workspace::open(dc.config());
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("video_0003.aaln"), std::string::npos);
  }
}

TEST(Ablation, SingletonGridEqualsSingleRun) {
  DiskCorpus dc;
  auto cfg = dc.config();
  auto ws = Workspace::open(cfg);
  const auto grid = ablation_grid(ws, {{"only", cfg}});
  ASSERT_EQ(grid.size(), 1u);
  EXPECT_EQ(dump_report(grid[0], ws.manifest()), dump_report(evaluate(ws, cfg, "only"), ws.manifest()));
}

TEST(Ablation, WindowGridDiffersOnlyInSmoothing) {
  DiskCorpus dc;
  auto a = dc.config();
  a.smoothing_window = 1;
  auto b = a;
  b.smoothing_window = 31;
  auto ws = Workspace::open(a);
  const auto reports = ablation_grid(ws, {{"w=1", a}, {"w=31", b}});
  ASSERT_EQ(reports.size(), 2u);
  auto ca = reports[0].run_config, cb = reports[1].run_config;
  EXPECT_NE(ca, cb);
  for (const auto* key : {"smoothing_window", "effective_smoothing_window"}) {
    ca.erase(key);
    cb.erase(key);
  }
  EXPECT_EQ(ca, cb);
}

TEST(Ablation, DefaultGridRows) {
  DiskCorpus dc;
  const auto grid = default_ablation_grid(dc.config());
  std::vector<std::string> labels;
  for (const auto& g : grid) labels.push_back(g.label);
  ASSERT_EQ(labels.size(), 10u);
  EXPECT_EQ(labels[0], "Mean-pool (class names)");
  EXPECT_EQ(grid[0].config.method, Method::mean_pool_name);
  EXPECT_EQ(grid[1].config.smoothing_window, 1u);
  EXPECT_EQ(grid[2].config.scripts, dc.config().scripts_context);
  EXPECT_EQ(grid[3].config.smoothing_window, 5u);
  EXPECT_EQ(grid[4].config.endpoint, Endpoint::open_end);
  EXPECT_EQ(grid[8].config.method, Method::randomized_order);

  RunConfig only_names;
  only_names.names = "n.json";
  EXPECT_EQ(default_ablation_grid(only_names).size(), 1u);

  auto ws = Workspace::open(dc.config());
  const auto reports = ablation_grid(ws, grid);
  const auto table = format_table(reports);
  EXPECT_NE(table.find("+ Signal smoothing"), std::string::npos);
  EXPECT_NE(table.find("+-"), std::string::npos);  // randomized row carries mean +- std
  EXPECT_EQ(ablation_to_json(reports).at("rows").size(), 10u);
}

TEST(Sweep, SingleWindowEqualsClassify) {
  DiskCorpus dc;
  auto cfg = dc.config();
  cfg.smoothing_window = 1;
  auto ws = Workspace::open(cfg);
  const auto rows = sweep_smoothing(ws, cfg, {1});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].report.topk.values, evaluate(ws, cfg).topk.values);
  EXPECT_THROW(sweep_smoothing(ws, cfg, {}), ValidationError);
}

TEST(Sweep, CsvRecordsRequestedAndEffectiveWindows) {
  DiskCorpus dc;
  auto ws = Workspace::open(dc.config());
  const auto rows = sweep_smoothing(ws, dc.config(), {1, 10, 31});
  const auto csv = sweep_to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "window,effective_window,top1,top2,top3");
  EXPECT_NE(csv.find("\n10,11,"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\n31,31,"), std::string::npos) << csv;
  EXPECT_EQ(csv, sweep_to_csv(sweep_smoothing(ws, dc.config(), {1, 10, 31})));
}

TEST(ExportPaths, OneFilePerCandidateWithValidPaths) {
  DiskCorpus dc;
  auto cfg = dc.config();
  auto ws = Workspace::open(cfg);
  const auto report = evaluate(ws, cfg);
  const auto& video = ws.manifest().videos.front();
  TempDir out;
  const auto files = export_paths(ws, cfg, video.video_id, out.path());
  ASSERT_EQ(files.size(), video.candidates.size());

  std::map<std::string, double> gamma_hat;
  for (const auto& f : files) {
    std::ifstream in(f);
    const auto j = nlohmann::json::parse(in);
    const auto& path = j.at("path");
    ASSERT_FALSE(path.empty());
    EXPECT_EQ(path[0], nlohmann::json::array({0, 0}));
    // Independent step checker.
    for (std::size_t i = 1; i < path.size(); ++i) {
      const long dk = path[i][0].get<long>() - path[i - 1][0].get<long>();
      const long dt = path[i][1].get<long>() - path[i - 1][1].get<long>();
      EXPECT_TRUE((dk == 1 && dt == 0) || (dk == 0 && dt == 1) || (dk == 1 && dt == 1));
    }
    gamma_hat[j.at("class_id")] = j.at("gamma_hat").get<double>();
  }
  const auto& pred = report.per_video.front();
  for (const auto& [cls, g] : gamma_hat) EXPECT_LE(g, gamma_hat.at(pred.predicted));
  EXPECT_DOUBLE_EQ(gamma_hat.at(pred.predicted), pred.ranked.front().score);

  EXPECT_THROW(export_paths(ws, cfg, "no_such_video", out.path()), ValidationError);
}

TEST(Validate, CleanCorpusAndDiagnostics) {
  DiskCorpus dc;
  EXPECT_TRUE(validate_inputs(dc.config()).empty());

  // Drop one class from the plain script file.
  std::ifstream in(dc.files.scripts);
  auto doc = nlohmann::json::parse(in);
  in.close();
  const std::string victim = dc.corpus.manifest.videos[0].candidates[0];
  doc.erase(victim);
  std::ofstream(dc.files.scripts) << doc.dump();
  const auto problems = validate_inputs(dc.config());
  ASSERT_FALSE(problems.empty());
  EXPECT_NE(problems[0].find(victim), std::string::npos);

  write_tensor(dc.dir / dc.corpus.manifest.videos[1].embedding_file, MatrixD(2, 16, 1.0));
  bool shape_reported = false;
  for (const auto& p : validate_inputs(dc.config())) shape_reported |= p.find("shape mismatch") != std::string::npos;
  EXPECT_TRUE(shape_reported);
}

TEST(Workers, EnvironmentOverride) {
  ::setenv(kWorkersEnvVar, "3", 1);
  EXPECT_EQ(resolve_worker_count(8), 3u);
  ::setenv(kWorkersEnvVar, "zero", 1);
  EXPECT_THROW(resolve_worker_count(8), ValidationError);
  ::unsetenv(kWorkersEnvVar);
  EXPECT_EQ(resolve_worker_count(8), 8u);
  EXPECT_GE(resolve_worker_count(0), 1u);
}

TEST(Workers, ParallelForPropagatesFirstError) {
  std::vector<int> seen(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { seen[i] = 1; });
  EXPECT_EQ(std::accumulate(seen.begin(), seen.end(), 0), 100);
  EXPECT_THROW(parallel_for(100, 4, [](std::size_t i) {
                 if (i == 17) throw Error("boom");
               }),
               Error);
}
