// Writes a deterministic synthetic corpus (manifest, embeddings, scripts,
// class names, calibration) for trying the CLI without real data.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "actalign/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic corpus in the engine's exchange formats"};
  actalign::SyntheticSpec spec;
  std::string out_dir;
  bool atlas_sizes = false;
  app.add_option("out_dir", out_dir, "Output directory")->required();
  app.add_option("--videos", spec.videos, "Number of videos");
  app.add_option("--classes", spec.classes, "Number of action classes");
  app.add_option("--dim", spec.dim, "Embedding dimension");
  app.add_option("--frames", spec.frames_mean, "Mean frames per video");
  app.add_option("--candidates", spec.candidates, "Candidates per video");
  app.add_flag("--atlas-sizes", atlas_sizes, "Draw candidate-set sizes from the benchmark-like distribution");
  app.add_option("--noise", spec.frame_noise, "Frame noise level");
  app.add_option("--seed", spec.seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);

  if (atlas_sizes) spec.candidate_sizes = actalign::kAtlasLikeCandidateSizes;
  try {
    const auto corpus = actalign::make_synthetic_corpus(spec);
    const auto files = actalign::write_synthetic_corpus(corpus, out_dir);
    std::cout << actalign::to_json(files.run_config()).dump(2) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
