#include "fast0tag/linear_map.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fast0tag/errors.hpp"
#include "fast0tag/parallel.hpp"

namespace f0t {

LinearDirectionMap fit_linear(const Eigen::MatrixXd& X, const Eigen::MatrixXd& W,
                              double ridge) {
  if (X.rows() == 0) throw DataError("fit_linear: no training rows");
  if (X.rows() != W.rows()) {
    throw DataError("fit_linear: " + std::to_string(X.rows()) + " features vs " +
                    std::to_string(W.rows()) + " targets");
  }
  if (ridge < 0.0) throw DataError("fit_linear: ridge must be non-negative");

  Eigen::MatrixXd gram = X.transpose() * X;
  gram.diagonal().array() += ridge;

  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    if (ridge == 0.0) {
      throw DataError("fit_linear: normal system is rank-deficient; set ridge > 0");
    }
    throw NumericError("fit_linear: factorization of the normal system failed");
  }

  // A (D x Dv) satisfies A·gram = W^T·X; solve the transposed system column-wise.
  LinearDirectionMap map;
  map.A = llt.solve(X.transpose() * W).transpose();
  map.ridge = ridge;
  if (!map.A.allFinite()) throw NumericError("fit_linear: non-finite solution");

  const Eigen::MatrixXd residual = W - X * map.A.transpose();
  map.residual_rms =
      std::sqrt(residual.squaredNorm() / static_cast<double>(X.rows()));
  return map;
}

Eigen::VectorXd apply_linear(const LinearDirectionMap& map, const Eigen::VectorXd& x) {
  if (x.size() != map.A.cols()) {
    throw DataError("apply_linear: feature has " + std::to_string(x.size()) +
                    " components, map expects " + std::to_string(map.A.cols()));
  }
  return map.A * x;
}

TwoStageResult two_stage_train(const TaggedImageSet& set, const EmbeddingTable& table,
                               const VocabularyPartition& partition, double lambda,
                               double ridge, const SvmOptions& svm_opts, int threads) {
  struct Job {
    std::size_t item_index;
    Eigen::MatrixXd pos;
    Eigen::MatrixXd neg;
  };

  std::vector<Job> jobs;
  TwoStageResult result;
  for (const std::size_t i : set.indices_of_split(Split::train)) {
    const auto [relevant, irrelevant] = derive_rule(set, set.at(i).id, partition);
    if (relevant.empty() || irrelevant.empty()) {
      ++result.images_skipped_degenerate;
      continue;
    }
    jobs.push_back({i, table.rows_for(relevant), table.rows_for(irrelevant)});
  }
  if (jobs.empty()) {
    throw DataError("two_stage_train: no usable training images under the partition");
  }

  std::vector<std::optional<Eigen::VectorXd>> directions(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    try {
      directions[j] = train_rank_svm(jobs[j].pos, jobs[j].neg, lambda, svm_opts).w;
    } catch (const NumericError&) {
      directions[j] = std::nullopt;  // diverged; dropped from the regression
    }
  });

  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (directions[j].has_value()) {
      kept.push_back(j);
    } else {
      ++result.images_diverged;
    }
  }
  if (kept.empty()) {
    throw DataError("two_stage_train: every per-image svm diverged");
  }

  Eigen::MatrixXd X(static_cast<Eigen::Index>(kept.size()), set.feature_dim());
  Eigen::MatrixXd W(static_cast<Eigen::Index>(kept.size()), table.dim());
  for (std::size_t r = 0; r < kept.size(); ++r) {
    X.row(static_cast<Eigen::Index>(r)) = set.at(jobs[kept[r]].item_index).features;
    W.row(static_cast<Eigen::Index>(r)) = *directions[kept[r]];
  }

  result.map = fit_linear(X, W, ridge);
  result.images_used = kept.size();
  return result;
}

}  // namespace f0t
