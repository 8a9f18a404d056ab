#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "fast0tag/dataset.hpp"
#include "fast0tag/embedding.hpp"
#include "fast0tag/ranksvm.hpp"

namespace f0t {

// Linear feature-to-direction map f(x) = A·x with A of shape
// (word dim D) x (feature dim Dv).
struct LinearDirectionMap {
  Eigen::MatrixXd A;
  double ridge = 0.0;
  double residual_rms = 0.0;  // sqrt(mean over training images of ||w_m - A x_m||^2)
};

// Closed-form ridge regression: A minimizes
//   sum_m ||w_m - A x_m||^2 + ridge·||A||_F^2.
// X holds one feature vector per row (M x Dv), W one target direction per row
// (M x D). With ridge = 0 a rank-deficient normal system raises DataError
// telling the caller to set ridge > 0.
LinearDirectionMap fit_linear(const Eigen::MatrixXd& X, const Eigen::MatrixXd& W,
                              double ridge);

Eigen::VectorXd apply_linear(const LinearDirectionMap& map, const Eigen::VectorXd& x);

struct TwoStageResult {
  LinearDirectionMap map;
  std::size_t images_used = 0;
  std::size_t images_skipped_degenerate = 0;  // empty Y or empty Y̅ under the partition
  std::size_t images_diverged = 0;            // per-image svm raised NumericError
};

// Stage 1 fits one ranking svm per training image on its (Y, Y̅) seen-tag
// vectors; stage 2 regresses from image features to the resulting directions.
// `table` must already be normalized. Per-image fits run on `threads` workers
// with results collected in input order.
TwoStageResult two_stage_train(const TaggedImageSet& set, const EmbeddingTable& table,
                               const VocabularyPartition& partition, double lambda,
                               double ridge, const SvmOptions& svm_opts = {},
                               int threads = 1);

}  // namespace f0t
