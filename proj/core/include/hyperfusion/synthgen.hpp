#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "hyperfusion/ingest.hpp"
#include "hyperfusion/rng.hpp"
#include "hyperfusion/types.hpp"

namespace hyperfusion {

// Generator for SMP-like datasets with a known label-generating process.
// Labels are a softplus transform of a weighted latent sum, calibrated so
// the modal histogram bin over 10k default samples lands in [5, 10].
struct SynthConfig {
  std::size_t n_posts = 10000;
  std::size_t n_users = 500;
  std::size_t n_locations = 40;
  std::size_t visual_dim = 64;
  std::size_t text_dim = 64;
  std::size_t tag_vocab = 60;

  double user_effect = 1.0;
  double visual_effect = 0.7;
  double text_effect = 0.5;
  double temporal_effect = 0.3;
  double coherence_effect = 0.4;
  double noise_std = 0.35;

  double label_shift = 4.0;
  double label_scale = 3.2;

  double labeled_fraction = 1.0;
  RngSeed seed{20250607};
};

struct SynthTruth {
  std::vector<double> latent;               // noiseless per-post score
  std::map<std::string, double> user_quality;
  std::map<std::string, std::vector<std::size_t>> planted_columns;
};

struct SynthDataset {
  std::vector<Post> posts;
  std::vector<EmbeddingTable> tables;  // visual_clip, text_clip, tags_glove
  SynthTruth truth;
};

// Deterministic given the config; exactly floor(labeled_fraction * n) posts
// carry labels, the rest carry none at all.
SynthDataset generate(const SynthConfig& config);

// SRC between noiseless latent scores and realized labels: an upper
// reference for any model's achievable SRC on this dataset.
double oracle_src_bound(std::span<const double> latent,
                        std::span<const double> labels);

}  // namespace hyperfusion
