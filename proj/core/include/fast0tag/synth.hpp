#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "fast0tag/dataset.hpp"
#include "fast0tag/embedding.hpp"

namespace f0t {

struct SynthSpec {
  std::size_t num_images = 500;
  int num_seen_tags = 40;
  int num_unseen_tags = 10;
  int feature_dim = 32;
  int embed_dim = 32;
  double margin = 0.15;       // relevance threshold above the per-image median score
  double noise_sigma = 0.0;   // stddev of the additive direction noise
  std::uint64_t seed = 1;
};

struct SynthData {
  EmbeddingTable table;          // unit-norm tag vectors, seen tags first
  TaggedImageSet set;            // ids img00000..., splits 60/20/20
  VocabularyPartition partition; // tags s0000... / u0000...
  Eigen::MatrixXd planted;       // the planted map A*, embed_dim x feature_dim
};

// Plants a linear map A* with unit-norm rows and labels each image with the
// tags whose vectors score at least `margin` above the per-image median along
// A*·x + noise. Images with an empty or full tag set are resampled (bounded
// retries); a margin beyond the attainable score spread raises DataError.
// Bit-identical output for a fixed spec.
SynthData generate(const SynthSpec& spec);

}  // namespace f0t
