#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fast0tag/dataset.hpp"
#include "fast0tag/embedding.hpp"
#include "fast0tag/ranksvm.hpp"
#include "fast0tag/tagger.hpp"

namespace f0t {

struct RankabilityRow {
  std::string embedding_label;
  double lambda = 0.0;
  double miap_seen = 0.0;
  double miap_unseen = 0.0;  // NaN when no rule has unseen-tag ground truth
  std::size_t rules = 0;
};

struct RankabilityReport {
  std::vector<RankabilityRow> rows;
};

// For each (embedding table, lambda): fits one ranking svm per unique visual
// association rule of the val split, ranks the seen vocabulary by the learned
// direction, and averages AP against the rule's own relevant set. The same
// direction is then applied to the unseen vocabulary against the relevant
// unseen tags of the rule's first image. Rules are deduplicated on the sorted
// relevant seen-tag tuple.
RankabilityReport rankability_experiment(
    const TaggedImageSet& set,
    const std::vector<std::pair<std::string, EmbeddingTable>>& tables,
    const VocabularyPartition& partition, const std::vector<double>& lambda_grid,
    const SvmOptions& svm_opts = {}, int threads = 1);

// All |Y|·|Y̅| offsets p - n, p-major then n, one offset per row.
Eigen::MatrixXd compute_offsets(const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg);

struct PcaResult {
  Eigen::MatrixXd components;   // k x dim, orthonormal rows
  Eigen::MatrixXd projections;  // n x k coordinates of the mean-centered input
  Eigen::VectorXd eigenvalues;  // k, non-increasing
};

// Top-k principal components of the rows of `data` via power iteration with
// deflation (tolerance 1e-10, at most 10,000 iterations per component).
// Component signs are fixed so the largest-magnitude entry is positive.
PcaResult pca_project(const Eigen::MatrixXd& data, int k);

// Fits a direction to a seen-tag ranking list (top `top_k_pos` tags as
// positives, the rest as negatives) and scores the candidate vocabulary
// with it.
RankedTagList seen2unseen(const RankedTagList& base_ranking, const EmbeddingTable& table,
                          const EmbeddingTable& candidates, double lambda, int top_k_pos,
                          const SvmOptions& svm_opts = {});

struct OraclePredictions {
  std::vector<std::pair<std::string, RankedTagList>> predictions;  // test-set order
  std::size_t skipped = 0;  // test images with an empty seen-tag rule
};

// Per test image: fits a ranking svm on the ground-truth seen-tag rule and
// scores the unseen vocabulary with the learned direction.
OraclePredictions ranksvm_oracle(const TaggedImageSet& set, const EmbeddingTable& table,
                                 const VocabularyPartition& partition, double lambda = 1.0,
                                 const SvmOptions& svm_opts = {}, int threads = 1);

// CSV: embedding,lambda,miap_seen,miap_unseen,rules
void write_rankability_csv(std::ostream& out, const RankabilityReport& report);

}  // namespace f0t
