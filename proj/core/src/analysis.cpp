#include "fast0tag/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "fast0tag/errors.hpp"
#include "fast0tag/eval.hpp"
#include "fast0tag/parallel.hpp"
#include "fast0tag/rng.hpp"

namespace f0t {

namespace {

struct Rule {
  std::vector<std::string> relevant;    // Y in seen order
  std::vector<std::string> irrelevant;  // Y̅ in seen order
  std::size_t first_image = 0;          // representative for unseen ground truth
};

// Unique rules of the validation split, keyed on the sorted relevant tuple.
// Rules with empty Y or Y̅ cannot be fit and are dropped.
std::vector<Rule> unique_rules(const TaggedImageSet& set,
                               const VocabularyPartition& partition) {
  std::vector<Rule> rules;
  std::map<std::vector<std::string>, std::size_t> seen_keys;
  for (const std::size_t i : set.indices_of_split(Split::val)) {
    auto [relevant, irrelevant] = derive_rule(set, set.at(i).id, partition);
    if (relevant.empty() || irrelevant.empty()) continue;
    std::vector<std::string> key = relevant;  // already sorted by seen order; make canonical
    std::sort(key.begin(), key.end());
    if (seen_keys.emplace(std::move(key), rules.size()).second) {
      rules.push_back({std::move(relevant), std::move(irrelevant), i});
    }
  }
  return rules;
}

}  // namespace

RankabilityReport rankability_experiment(
    const TaggedImageSet& set,
    const std::vector<std::pair<std::string, EmbeddingTable>>& tables,
    const VocabularyPartition& partition, const std::vector<double>& lambda_grid,
    const SvmOptions& svm_opts, int threads) {
  if (tables.empty()) throw DataError("rankability_experiment: no embedding tables");
  if (lambda_grid.empty()) throw DataError("rankability_experiment: empty lambda grid");

  const std::vector<Rule> rules = unique_rules(set, partition);
  if (rules.empty()) {
    throw DataError("rankability_experiment: no usable rules in the validation split");
  }

  RankabilityReport report;
  for (const auto& [label, table] : tables) {
    const EmbeddingTable seen_table = table.subset(partition.seen());
    const bool has_unseen = !partition.unseen().empty();
    const EmbeddingTable unseen_table =
        has_unseen ? table.subset(partition.unseen()) : EmbeddingTable();

    for (const double lambda : lambda_grid) {
      std::vector<Eigen::VectorXd> directions(rules.size());
      parallel_for(rules.size(), threads, [&](std::size_t r) {
        directions[r] = train_rank_svm(table.rows_for(rules[r].relevant),
                                       table.rows_for(rules[r].irrelevant), lambda,
                                       svm_opts)
                            .w;
      });

      double seen_sum = 0.0;
      double unseen_sum = 0.0;
      std::size_t unseen_scored = 0;
      for (std::size_t r = 0; r < rules.size(); ++r) {
        const RankedTagList seen_ranking = score_tags(directions[r], seen_table);
        const std::set<std::string> seen_truth(rules[r].relevant.begin(),
                                               rules[r].relevant.end());
        seen_sum += image_average_precision(seen_ranking, seen_truth);

        if (!has_unseen) continue;
        std::set<std::string> unseen_truth;
        for (const auto& tag : set.at(rules[r].first_image).tags) {
          if (partition.is_unseen(tag)) unseen_truth.insert(tag);
        }
        if (unseen_truth.empty()) continue;
        const RankedTagList unseen_ranking = score_tags(directions[r], unseen_table);
        unseen_sum += image_average_precision(unseen_ranking, unseen_truth);
        ++unseen_scored;
      }

      RankabilityRow row;
      row.embedding_label = label;
      row.lambda = lambda;
      row.miap_seen = seen_sum / static_cast<double>(rules.size());
      row.miap_unseen = unseen_scored > 0
                            ? unseen_sum / static_cast<double>(unseen_scored)
                            : std::numeric_limits<double>::quiet_NaN();
      row.rules = rules.size();
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

Eigen::MatrixXd compute_offsets(const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg) {
  if (pos.rows() == 0 || neg.rows() == 0) {
    throw DataError("compute_offsets: empty relevant or irrelevant set");
  }
  if (pos.cols() != neg.cols()) throw DataError("compute_offsets: dimension mismatch");
  Eigen::MatrixXd out(pos.rows() * neg.rows(), pos.cols());
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < pos.rows(); ++i) {
    for (Eigen::Index j = 0; j < neg.rows(); ++j) {
      out.row(row++) = pos.row(i) - neg.row(j);
    }
  }
  return out;
}

PcaResult pca_project(const Eigen::MatrixXd& data, int k) {
  const Eigen::Index n = data.rows();
  const Eigen::Index dim = data.cols();
  if (n < 2) throw DataError("pca_project: need at least 2 vectors");
  if (k < 1 || k > dim) {
    throw DataError("pca_project: k must be in [1, dim=" + std::to_string(dim) + "]");
  }

  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(n - 1);
  if (cov.lpNorm<Eigen::Infinity>() == 0.0) {
    throw DataError("pca_project: degenerate input (all vectors identical)");
  }

  constexpr double kTolerance = 1e-10;
  constexpr int kMaxIterations = 10000;

  PcaResult result;
  result.components.resize(k, dim);
  result.eigenvalues.resize(k);

  for (int comp = 0; comp < k; ++comp) {
    // Deterministic pseudo-random start, orthogonalized against found
    // components.
    Rng rng(derive_seed(0x9ca0u, static_cast<std::uint64_t>(comp)));
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = rng.normal();
    for (int prev = 0; prev < comp; ++prev) {
      v -= result.components.row(prev).dot(v) * result.components.row(prev).transpose();
    }
    if (v.norm() == 0.0) v.setUnit(static_cast<Eigen::Index>(comp) % dim);
    v.normalize();

    for (int it = 0; it < kMaxIterations; ++it) {
      Eigen::VectorXd next = cov * v;
      for (int prev = 0; prev < comp; ++prev) {
        next -= result.components.row(prev).dot(next) *
                result.components.row(prev).transpose();
      }
      const double norm = next.norm();
      if (norm < 1e-300) {
        // Zero eigenvalue: any unit vector orthogonal to the found components
        // completes the basis; keep the current orthogonalized iterate.
        break;
      }
      next /= norm;
      const double delta = (next - v).lpNorm<Eigen::Infinity>();
      v = next;
      if (delta < kTolerance) break;
    }

    // Sign convention: largest-magnitude entry positive.
    Eigen::Index max_idx = 0;
    v.cwiseAbs().maxCoeff(&max_idx);
    if (v(max_idx) < 0.0) v = -v;

    result.eigenvalues(comp) = v.dot(cov * v);
    result.components.row(comp) = v.transpose();
    cov -= result.eigenvalues(comp) * v * v.transpose();
  }

  result.projections = centered * result.components.transpose();
  return result;
}

RankedTagList seen2unseen(const RankedTagList& base_ranking, const EmbeddingTable& table,
                          const EmbeddingTable& candidates, double lambda, int top_k_pos,
                          const SvmOptions& svm_opts) {
  const std::size_t n = base_ranking.entries.size();
  if (n == 0) throw DataError("seen2unseen: empty base ranking");
  if (top_k_pos < 1 || static_cast<std::size_t>(top_k_pos) >= n) {
    throw DataError("seen2unseen: top_k_pos must be in [1, |ranking|)");
  }
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < static_cast<std::size_t>(top_k_pos)) {
      positives.push_back(base_ranking.entries[i].tag);
    } else {
      negatives.push_back(base_ranking.entries[i].tag);
    }
  }
  const RankingDirection direction = train_rank_svm(
      table.rows_for(positives), table.rows_for(negatives), lambda, svm_opts);
  return score_tags(direction.w, candidates);
}

OraclePredictions ranksvm_oracle(const TaggedImageSet& set, const EmbeddingTable& table,
                                 const VocabularyPartition& partition, double lambda,
                                 const SvmOptions& svm_opts, int threads) {
  if (partition.unseen().empty()) throw DataError("ranksvm_oracle: empty unseen vocabulary");
  const EmbeddingTable unseen_table = table.subset(partition.unseen());

  struct Job {
    std::size_t item_index;
    Eigen::MatrixXd pos;
    Eigen::MatrixXd neg;
  };
  std::vector<Job> jobs;
  OraclePredictions out;
  for (const std::size_t i : set.indices_of_split(Split::test)) {
    auto [relevant, irrelevant] = derive_rule(set, set.at(i).id, partition);
    if (relevant.empty() || irrelevant.empty()) {
      ++out.skipped;
      continue;
    }
    jobs.push_back({i, table.rows_for(relevant), table.rows_for(irrelevant)});
  }

  std::vector<RankedTagList> rankings(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const RankingDirection dir = train_rank_svm(jobs[j].pos, jobs[j].neg, lambda, svm_opts);
    rankings[j] = score_tags(dir.w, unseen_table);
  });

  out.predictions.reserve(jobs.size());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    out.predictions.emplace_back(set.at(jobs[j].item_index).id, std::move(rankings[j]));
  }
  return out;
}

void write_rankability_csv(std::ostream& out, const RankabilityReport& report) {
  out << "embedding,lambda,miap_seen,miap_unseen,rules\n";
  std::ostringstream line;
  line << std::setprecision(9);
  for (const auto& row : report.rows) {
    line.str({});
    line << row.embedding_label << ',' << row.lambda << ',' << row.miap_seen << ','
         << row.miap_unseen << ',' << row.rules;
    out << line.str() << '\n';
  }
}

}  // namespace f0t
