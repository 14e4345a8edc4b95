#pragma once

// Deterministic synthetic corpora for demos, tests and benchmarks.
//
// Every class owns K prototype directions, one per sub-action. A video of
// class c walks through c's prototypes in order, one contiguous segment per
// sub-action, with isotropic Gaussian noise on every frame. Frames are
// regenerated on demand from a per-video seed, so corpora at benchmark
// scale never need to be held in memory.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "actalign/corpus.hpp"
#include "actalign/matrix.hpp"
#include "actalign/runner.hpp"
#include "actalign/seed.hpp"
#include "actalign/tensor_io.hpp"

namespace actalign {

/// Candidate-set sizes over 898 videos: mean 5.26, population std 1.27.
inline const std::vector<std::pair<std::size_t, std::size_t>> kAtlasLikeCandidateSizes{
    {2, 49}, {3, 32}, {4, 108}, {5, 283}, {6, 310}, {7, 106}, {8, 10}};

struct SyntheticSpec {
  std::size_t videos = 8;
  std::size_t classes = 12;
  std::size_t dim = 32;
  std::size_t frames_mean = 40;
  std::size_t frames_spread = 10;  // frame counts uniform in mean +- spread
  std::size_t sub_actions_min = 3;
  std::size_t sub_actions_max = 6;
  std::size_t candidates = 5;  // used when candidate_sizes is empty
  std::vector<std::pair<std::size_t, std::size_t>> candidate_sizes;  // (size, weight)
  double frame_noise = 8.0;
  double name_noise = 0.8;
  std::vector<std::string> domains{"soccer", "figure_skating"};
  std::uint64_t seed = 7;
};

struct SyntheticVideo {
  std::string class_id;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  SyntheticSpec spec;
  DatasetManifest manifest;
  ScriptSet scripts;          // plain sub-action scripts
  ScriptSet scripts_context;  // lower-noise "augmented" variant
  ScriptSet scripts_short_fixed;
  NameEmbeddings names;
  NameEmbeddings names_context;  // lower-noise "augmented" names
  std::map<std::string, SyntheticVideo> recipes;
  std::map<std::string, MatrixD> prototypes;

  EmbeddingSequence frames(const VideoEntry& v) const;
  FrameSource frame_source() const {
    return [this](const VideoEntry& v) { return frames(v); };
  }
};

namespace detail {

inline double gaussian(std::mt19937_64& rng) {
  // Box-Muller on portable uniforms.
  double u1 = uniform_unit(rng);
  while (u1 <= 0.0) u1 = uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline std::vector<double> noisy_unit(std::span<const double> base, double noise, std::mt19937_64& rng) {
  std::vector<double> v(base.begin(), base.end());
  const double scale = noise / std::sqrt(static_cast<double>(v.size()));
  for (double& x : v) x += scale * gaussian(rng);
  if (!normalize_in_place(v)) v[0] = 1.0;
  return v;
}

inline MatrixD random_unit_rows(std::size_t rows, std::size_t dim, std::mt19937_64& rng) {
  MatrixD m(rows, dim);
  for (std::size_t r = 0; r < rows; ++r) {
    for (double& x : m.row(r)) x = gaussian(rng);
    if (!normalize_in_place(m.row(r))) m(r, 0) = 1.0;
  }
  return m;
}

inline MatrixD perturb_rows(const MatrixD& src, double noise, std::mt19937_64& rng) {
  MatrixD m(src.rows(), src.cols());
  for (std::size_t r = 0; r < src.rows(); ++r) {
    const auto v = noisy_unit(src.row(r), noise, rng);
    std::copy(v.begin(), v.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace detail

inline EmbeddingSequence SyntheticCorpus::frames(const VideoEntry& v) const {
  const auto& recipe = recipes.at(v.video_id);
  const auto& protos = prototypes.at(recipe.class_id);
  std::mt19937_64 rng(recipe.seed);
  const std::size_t frames = v.frame_count;
  const std::size_t k = protos.rows();
  EmbeddingSequence seq;
  seq.video_id = v.video_id;
  seq.frames = MatrixD(frames, spec.dim);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t segment = std::min(k - 1, t * k / frames);
    const auto row = detail::noisy_unit(protos.row(segment), spec.frame_noise, rng);
    std::copy(row.begin(), row.end(), seq.frames.row(t).begin());
  }
  return seq;
}

inline SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec) {
  SyntheticCorpus c;
  c.spec = spec;
  std::mt19937_64 rng(splitmix64(spec.seed));

  std::vector<std::string> class_ids;
  for (std::size_t i = 0; i < spec.classes; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "class_%03zu", i);
    class_ids.emplace_back(buf);
  }
  for (std::size_t i = 0; i < spec.domains.size(); ++i) c.manifest.domains[spec.domains[i]] = spec.domains[i];

  for (std::size_t i = 0; i < spec.classes; ++i) {
    const auto& id = class_ids[i];
    const std::string domain = spec.domains.empty() ? "" : spec.domains[i % spec.domains.size()];
    const std::size_t span = spec.sub_actions_max - spec.sub_actions_min + 1;
    const std::size_t k = spec.sub_actions_min + static_cast<std::size_t>(uniform_below(rng, span));
    MatrixD protos = detail::random_unit_rows(k, spec.dim, rng);

    SubActionScript s;
    s.class_id = id;
    s.domain = domain;
    for (std::size_t j = 0; j < k; ++j) s.texts.push_back(id + " step " + std::to_string(j + 1));
    s.embeddings = detail::perturb_rows(protos, 0.9, rng);
    c.scripts.emplace(id, s);

    SubActionScript ctx = s;
    ctx.context_augmented = true;
    for (auto& t : ctx.texts) t = "This is a video of doing " + id + " in " + domain + " with " + t;
    ctx.embeddings = detail::perturb_rows(protos, 0.5, rng);
    c.scripts_context.emplace(id, std::move(ctx));

    SubActionScript sf = s;
    sf.prompt_style = PromptStyle::short_fixed;
    sf.texts.clear();
    sf.embeddings = MatrixD(10, spec.dim);
    for (std::size_t j = 0; j < 10; ++j) {
      sf.texts.push_back(id + " fixed " + std::to_string(j + 1));
      const auto v = detail::noisy_unit(protos.row(j * k / 10), 0.9, rng);
      std::copy(v.begin(), v.end(), sf.embeddings.row(j).begin());
    }
    c.scripts_short_fixed.emplace(id, std::move(sf));

    const auto mean = mean_row(protos);
    c.names.emplace(id, ClassNameEmbedding{id, detail::noisy_unit(mean, spec.name_noise, rng)});
    c.names_context.emplace(id, ClassNameEmbedding{id, detail::noisy_unit(mean, 0.6 * spec.name_noise, rng)});
    c.prototypes.emplace(id, std::move(protos));
  }

  std::vector<std::size_t> sizes;
  if (spec.candidate_sizes.empty()) {
    sizes.assign(spec.videos, spec.candidates);
  } else {
    std::size_t total = 0;
    for (const auto& [size, weight] : spec.candidate_sizes) total += weight;
    for (std::size_t i = 0; i < spec.videos; ++i) {
      // Deterministic stratified assignment: video i takes the size whose
      // cumulative weight band contains i * total / videos.
      const std::size_t pos = i * total / spec.videos;
      std::size_t acc = 0;
      for (const auto& [size, weight] : spec.candidate_sizes) {
        acc += weight;
        if (pos < acc) {
          sizes.push_back(size);
          break;
        }
      }
    }
  }

  for (std::size_t i = 0; i < spec.videos; ++i) {
    VideoEntry v;
    char buf[32];
    std::snprintf(buf, sizeof buf, "video_%04zu", i);
    v.video_id = buf;
    const std::size_t m = std::min(sizes[i], spec.classes);
    const auto perm = seeded_permutation(spec.classes, rng());
    for (std::size_t j = 0; j < m; ++j) v.candidates.push_back(class_ids[perm[j]]);
    v.ground_truth = v.candidates[uniform_below(rng, m)];
    const std::size_t class_index = std::stoul(v.ground_truth.substr(6));
    v.domain = spec.domains.empty() ? "" : spec.domains[class_index % spec.domains.size()];
    const std::size_t lo = spec.frames_mean > spec.frames_spread ? spec.frames_mean - spec.frames_spread : 1;
    v.frame_count = lo + static_cast<std::size_t>(uniform_below(rng, spec.frames_mean + spec.frames_spread - lo + 1));
    v.embedding_file = std::filesystem::path("embeddings") / (v.video_id + ".aaln");
    c.recipes.emplace(v.video_id, SyntheticVideo{v.ground_truth, rng()});
    c.manifest.videos.push_back(std::move(v));
  }
  return c;
}

namespace detail {

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << j.dump(2) << "\n";
}

inline void write_script_set(const std::filesystem::path& dir, const std::string& name, const ScriptSet& scripts) {
  std::filesystem::create_directories(dir / name);
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [id, s] : scripts) {
    const auto rel = std::filesystem::path(name) / (id + ".aaln");
    write_tensor(dir / rel, s.embeddings);
    doc[id] = {{"domain", s.domain}, {"texts", s.texts}, {"embedding_file", rel.string()}};
  }
  write_json(dir / (name + ".json"), doc);
}

inline void write_name_set(const std::filesystem::path& dir, const std::string& name, const NameEmbeddings& names) {
  std::filesystem::create_directories(dir / name);
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [id, n] : names) {
    const auto rel = std::filesystem::path(name) / (id + ".aaln");
    write_tensor(dir / rel, MatrixD(1, n.embedding.size(), n.embedding));
    doc[id] = {{"text", id}, {"embedding_file", rel.string()}};
  }
  write_json(dir / (name + ".json"), doc);
}

}  // namespace detail

/// Paths of the files written by `write_synthetic_corpus`.
struct CorpusFiles {
  std::filesystem::path manifest, scripts, scripts_context, scripts_short_fixed, names, names_context, calibration;

  RunConfig run_config() const {
    RunConfig c;
    c.manifest = manifest.string();
    c.scripts = scripts.string();
    c.scripts_context = scripts_context.string();
    c.scripts_short_fixed = scripts_short_fixed.string();
    c.names = names.string();
    c.names_context = names_context.string();
    c.calibration = calibration.string();
    return c;
  }
};

/// Materializes a synthetic corpus in the on-disk exchange formats.
inline CorpusFiles write_synthetic_corpus(const SyntheticCorpus& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "embeddings");
  for (const auto& v : c.manifest.videos) write_tensor(dir / v.embedding_file, c.frames(v).frames);
  detail::write_json(dir / "manifest.json", manifest_to_json(c.manifest));

  detail::write_script_set(dir, "scripts", c.scripts);
  detail::write_script_set(dir, "scripts_context", c.scripts_context);
  detail::write_script_set(dir, "scripts_short_fixed", c.scripts_short_fixed);

  detail::write_name_set(dir, "names", c.names);
  detail::write_name_set(dir, "names_context", c.names_context);
  detail::write_json(dir / "calibration.json", {{"alpha", 10.0}, {"beta", 0.0}, {"source", "synthetic"}});

  CorpusFiles files;
  files.manifest = dir / "manifest.json";
  files.scripts = dir / "scripts.json";
  files.scripts_context = dir / "scripts_context.json";
  files.scripts_short_fixed = dir / "scripts_short_fixed.json";
  files.names = dir / "names.json";
  files.names_context = dir / "names_context.json";
  files.calibration = dir / "calibration.json";
  return files;
}

}  // namespace actalign
