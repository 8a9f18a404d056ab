#include "fast0tag/rank_net.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "fast0tag/errors.hpp"
#include "fast0tag/eval.hpp"
#include "fast0tag/parallel.hpp"
#include "fast0tag/tagger.hpp"

namespace f0t {

namespace {

// Substream keys for deriving independent rng streams from the config seed.
constexpr std::uint64_t kInitStream = 0x101;
constexpr std::uint64_t kShuffleStream = 0x202;
constexpr std::uint64_t kMaskStream = 0x303;

inline double softplus(double v) {
  return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
}

inline double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

void check_config(const TrainConfig& c) {
  if (c.batch_size < 1) throw DataError("train config: batch_size must be >= 1");
  if (c.learning_rate <= 0.0) throw DataError("train config: learning_rate must be > 0");
  if (c.max_epochs < 0) throw DataError("train config: max_epochs must be >= 0");
  if (c.patience < 1) throw DataError("train config: patience must be >= 1");
  if (c.dropout_rate < 0.0 || c.dropout_rate >= 1.0) {
    throw DataError("train config: dropout_rate must be in [0, 1)");
  }
  if (c.hidden1 < 0 || c.hidden2 < 0) throw DataError("train config: hidden sizes must be >= 0");
}

}  // namespace

bool MlpParams::all_finite() const {
  return W1.allFinite() && b1.allFinite() && W2.allFinite() && b2.allFinite() &&
         W3.allFinite() && b3.allFinite();
}

MlpParams init_mlp(int feature_dim, int hidden1, int hidden2, int output_dim, Rng& rng) {
  if (feature_dim < 1 || hidden1 < 1 || hidden2 < 1 || output_dim < 1) {
    throw DataError("init_mlp: all layer sizes must be >= 1");
  }
  auto uniform_matrix = [&rng](int rows, int cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = (2.0 * rng.uniform01() - 1.0) * limit;
    }
    return m;
  };
  MlpParams p;
  p.W1 = uniform_matrix(hidden1, feature_dim);
  p.b1 = Eigen::VectorXd::Zero(hidden1);
  p.W2 = uniform_matrix(hidden2, hidden1);
  p.b2 = Eigen::VectorXd::Zero(hidden2);
  p.W3 = uniform_matrix(output_dim, hidden2);
  p.b3 = Eigen::VectorXd::Zero(output_dim);
  return p;
}

Eigen::VectorXd forward_eval(const MlpParams& params, const Eigen::VectorXd& x) {
  if (x.size() != params.W1.cols()) {
    throw DataError("forward: feature has " + std::to_string(x.size()) +
                    " components, network expects " + std::to_string(params.W1.cols()));
  }
  const Eigen::VectorXd a1 = (params.W1 * x + params.b1).cwiseMax(0.0);
  const Eigen::VectorXd a2 = (params.W2 * a1 + params.b2).cwiseMax(0.0);
  Eigen::VectorXd f = params.W3 * a2 + params.b3;
  if (!f.allFinite()) throw NumericError("forward: non-finite activation");
  return f;
}

Eigen::VectorXd forward_train(const MlpParams& params, const Eigen::VectorXd& x,
                              double dropout_rate, Rng& mask_rng, ForwardCache* cache) {
  if (x.size() != params.W1.cols()) {
    throw DataError("forward: feature has " + std::to_string(x.size()) +
                    " components, network expects " + std::to_string(params.W1.cols()));
  }
  ForwardCache local;
  ForwardCache& c = cache != nullptr ? *cache : local;
  c.z1 = params.W1 * x + params.b1;
  c.a1 = c.z1.cwiseMax(0.0);
  c.z2 = params.W2 * c.a1 + params.b2;
  c.a2 = c.z2.cwiseMax(0.0);
  if (dropout_rate > 0.0) {
    c.keep_prob = 1.0 - dropout_rate;
    c.mask.resize(c.a2.size());
    for (Eigen::Index i = 0; i < c.mask.size(); ++i) {
      c.mask(i) = mask_rng.uniform01() >= dropout_rate ? 1.0 : 0.0;
    }
    c.a2_dropped = c.a2.cwiseProduct(c.mask) / c.keep_prob;
  } else {
    c.keep_prob = 1.0;
    c.mask.resize(0);
    c.a2_dropped = c.a2;
  }
  Eigen::VectorXd f = params.W3 * c.a2_dropped + params.b3;
  if (!f.allFinite()) throw NumericError("forward: non-finite activation");
  return f;
}

double per_image_loss(const Eigen::VectorXd& direction, const Eigen::MatrixXd& pos,
                      const Eigen::MatrixXd& neg) {
  if (pos.rows() == 0 || neg.rows() == 0) {
    throw DataError("per_image_loss: empty relevant or irrelevant set");
  }
  if (pos.cols() != direction.size() || neg.cols() != direction.size()) {
    throw DataError("per_image_loss: dimension mismatch");
  }
  const Eigen::VectorXd sp = pos * direction;
  const Eigen::VectorXd sn = neg * direction;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < sp.size(); ++i) {
    for (Eigen::Index j = 0; j < sn.size(); ++j) {
      loss += softplus(sn(j) - sp(i));
    }
  }
  return loss;
}

namespace {

struct ImageWork {
  ForwardCache cache;
  Eigen::VectorXd upstream;  // omega * sum over pairs of sigma(nu)·(n - p)
  double loss = 0.0;         // omega * per-image RankNet loss
};

double omega_for(const TrainConfig& config, Eigen::Index n_pos, Eigen::Index n_neg) {
  if (!config.normalize_per_image) return 1.0;
  return 1.0 / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Pair sweep for one image given its direction scores. `coef` receives the
// per-row weights such that upstream = neg^T coef_n - pos^T coef_p.
ImageWork image_work(const MlpParams& params, const BatchItem& item, double omega,
                     double dropout_rate, Rng mask_rng) {
  ImageWork work;
  const Eigen::VectorXd f =
      forward_train(params, item.x, dropout_rate, mask_rng, &work.cache);
  const Eigen::VectorXd sp = item.pos * f;
  const Eigen::VectorXd sn = item.neg * f;

  Eigen::VectorXd cp = Eigen::VectorXd::Zero(sp.size());
  Eigen::VectorXd cn = Eigen::VectorXd::Zero(sn.size());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < sp.size(); ++i) {
    for (Eigen::Index j = 0; j < sn.size(); ++j) {
      const double nu = sn(j) - sp(i);
      loss += softplus(nu);
      const double s = sigmoid(nu);
      cp(i) += s;
      cn(j) += s;
    }
  }
  work.loss = omega * loss;
  work.upstream = omega * (item.neg.transpose() * cn - item.pos.transpose() * cp);
  return work;
}

void accumulate_backward(const MlpParams& params, const Eigen::VectorXd& x,
                         const ImageWork& work, GradientBundle& grad) {
  const ForwardCache& c = work.cache;
  const Eigen::VectorXd& u = work.upstream;

  grad.W3.noalias() += u * c.a2_dropped.transpose();
  grad.b3 += u;

  Eigen::VectorXd da2 = params.W3.transpose() * u;
  if (c.mask.size() != 0) da2 = da2.cwiseProduct(c.mask) / c.keep_prob;
  const Eigen::VectorXd dz2 =
      (c.z2.array() > 0.0).select(da2, Eigen::VectorXd::Zero(da2.size()));

  grad.W2.noalias() += dz2 * c.a1.transpose();
  grad.b2 += dz2;

  const Eigen::VectorXd da1 = params.W2.transpose() * dz2;
  const Eigen::VectorXd dz1 =
      (c.z1.array() > 0.0).select(da1, Eigen::VectorXd::Zero(da1.size()));

  grad.W1.noalias() += dz1 * x.transpose();
  grad.b1 += dz1;
  grad.loss += work.loss;
}

void check_batch(const std::vector<BatchItem>& batch) {
  if (batch.empty()) throw DataError("empty batch");
  for (const auto& item : batch) {
    if (item.pos.rows() == 0 || item.neg.rows() == 0) {
      throw DataError("batch item with empty relevant or irrelevant set; caller must filter");
    }
  }
}

}  // namespace

GradientBundle GradientBundle::zeros_like(const MlpParams& params) {
  GradientBundle g;
  g.W1 = Eigen::MatrixXd::Zero(params.W1.rows(), params.W1.cols());
  g.b1 = Eigen::VectorXd::Zero(params.b1.size());
  g.W2 = Eigen::MatrixXd::Zero(params.W2.rows(), params.W2.cols());
  g.b2 = Eigen::VectorXd::Zero(params.b2.size());
  g.W3 = Eigen::MatrixXd::Zero(params.W3.rows(), params.W3.cols());
  g.b3 = Eigen::VectorXd::Zero(params.b3.size());
  return g;
}

double batch_loss(const MlpParams& params, const std::vector<BatchItem>& batch,
                  const TrainConfig& config, const MaskSource& masks) {
  check_batch(batch);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& item = batch[i];
    Rng rng = masks.rng_for(i);
    const Eigen::VectorXd f = forward_train(params, item.x, config.dropout_rate, rng);
    total += omega_for(config, item.pos.rows(), item.neg.rows()) *
             per_image_loss(f, item.pos, item.neg);
  }
  return total;
}

GradientBundle gradient(const MlpParams& params, const std::vector<BatchItem>& batch,
                        const TrainConfig& config, const MaskSource& masks, int threads) {
  check_batch(batch);
  std::vector<ImageWork> work(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    const auto& item = batch[i];
    work[i] = image_work(params, item, omega_for(config, item.pos.rows(), item.neg.rows()),
                         config.dropout_rate, masks.rng_for(i));
  });

  GradientBundle grad = GradientBundle::zeros_like(params);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    accumulate_backward(params, batch[i].x, work[i], grad);
  }
  return grad;
}

namespace {

struct IndexedItem {
  std::size_t set_index = 0;       // position in the TaggedImageSet
  std::vector<int> pos_idx;        // rows of the seen matrix
  std::vector<int> neg_idx;
};

// Pair sweep against the shared seen-tag matrix: scores for all seen tags are
// computed once per image and the upstream is assembled as S^T·coef.
ImageWork image_work_indexed(const MlpParams& params, const Eigen::VectorXd& x,
                             const IndexedItem& item, const Eigen::MatrixXd& seen,
                             double omega, double dropout_rate, Rng mask_rng) {
  ImageWork work;
  const Eigen::VectorXd f = forward_train(params, x, dropout_rate, mask_rng, &work.cache);
  const Eigen::VectorXd scores = seen * f;

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(seen.rows());
  double loss = 0.0;
  for (const int i : item.pos_idx) {
    for (const int j : item.neg_idx) {
      const double nu = scores(j) - scores(i);
      loss += softplus(nu);
      const double s = sigmoid(nu);
      coef(j) += s;
      coef(i) -= s;
    }
  }
  work.loss = omega * loss;
  work.upstream = omega * (seen.transpose() * coef);
  return work;
}

}  // namespace

NetTrainResult train_mlp(const TaggedImageSet& set, const EmbeddingTable& table,
                         const VocabularyPartition& partition, const TrainConfig& config,
                         int threads) {
  check_config(config);
  if (partition.seen().empty()) throw DataError("train_mlp: empty seen vocabulary");

  const Eigen::MatrixXd seen = table.rows_for(partition.seen());
  const EmbeddingTable seen_table = table.subset(partition.seen());
  const int word_dim = table.dim();
  const int feature_dim = set.feature_dim();

  // Training items: train-split images with nonempty Y and Y̅.
  std::vector<IndexedItem> items;
  {
    std::unordered_map<std::string, int> seen_pos;
    for (std::size_t i = 0; i < partition.seen().size(); ++i) {
      seen_pos.emplace(partition.seen()[i], static_cast<int>(i));
    }
    for (const std::size_t i : set.indices_of_split(Split::train)) {
      IndexedItem item;
      item.set_index = i;
      for (std::size_t s = 0; s < partition.seen().size(); ++s) {
        if (set.at(i).tags.count(partition.seen()[s]) != 0) {
          item.pos_idx.push_back(static_cast<int>(s));
        } else {
          item.neg_idx.push_back(static_cast<int>(s));
        }
      }
      if (!item.pos_idx.empty() && !item.neg_idx.empty()) items.push_back(std::move(item));
    }
  }
  if (items.empty()) {
    throw DataError("train_mlp: no trainable images (every train image has an empty rule)");
  }

  // Validation items with their seen-tag truth.
  std::vector<std::pair<std::size_t, std::set<std::string>>> val_items;
  for (const std::size_t i : set.indices_of_split(Split::val)) {
    std::set<std::string> truth;
    for (const auto& tag : set.at(i).tags) {
      if (partition.is_seen(tag)) truth.insert(tag);
    }
    if (!truth.empty()) val_items.emplace_back(i, std::move(truth));
  }

  const int h1 = config.hidden1 > 0 ? config.hidden1 : std::max(feature_dim, word_dim);
  const int h2 = config.hidden2 > 0 ? config.hidden2 : std::max(feature_dim, word_dim);
  Rng init_rng(derive_seed(config.seed, kInitStream));
  MlpParams params = init_mlp(feature_dim, h1, h2, word_dim, init_rng);

  NetTrainResult result;
  if (config.max_epochs == 0) {
    result.params = std::move(params);
    return result;
  }
  if (val_items.empty()) {
    throw DataError("train_mlp: validation split has no image with a seen-tag positive");
  }

  auto validation_miap = [&](const MlpParams& p) {
    std::vector<Eigen::VectorXd> dirs(val_items.size());
    parallel_for(val_items.size(), threads, [&](std::size_t v) {
      dirs[v] = forward_eval(p, set.at(val_items[v].first).features);
    });
    double sum = 0.0;
    for (std::size_t v = 0; v < val_items.size(); ++v) {
      const RankedTagList ranking = score_tags(dirs[v], seen_table);
      sum += image_average_precision(ranking, val_items[v].second);
    }
    return sum / static_cast<double>(val_items.size());
  };

  MlpParams best_params = params;
  double best_miap = -std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int epochs_without_gain = 0;

  Rng shuffle_rng(derive_seed(config.seed, kShuffleStream));
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    const MaskSource masks{derive_seed(config.seed, kMaskStream, static_cast<std::uint64_t>(epoch))};

    double epoch_loss = 0.0;
    const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);
    for (std::size_t start = 0, batch_no = 0; start < order.size();
         start += batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      const std::size_t count = end - start;

      std::vector<ImageWork> work(count);
      parallel_for(count, threads, [&](std::size_t k) {
        const IndexedItem& item = items[order[start + k]];
        const double omega = config.normalize_per_image
                                 ? 1.0 / (static_cast<double>(item.pos_idx.size()) *
                                          static_cast<double>(item.neg_idx.size()))
                                 : 1.0;
        // Masks are keyed by the image's stable index so the draw does not
        // depend on batch composition or thread interleaving.
        work[k] = image_work_indexed(params, set.at(item.set_index).features, item, seen,
                                     omega, config.dropout_rate,
                                     masks.rng_for(item.set_index));
      });

      GradientBundle grad = GradientBundle::zeros_like(params);
      for (std::size_t k = 0; k < count; ++k) {
        accumulate_backward(params, set.at(items[order[start + k]].set_index).features,
                            work[k], grad);
      }
      if (!std::isfinite(grad.loss)) {
        throw NumericError("train_mlp: non-finite loss at epoch " + std::to_string(epoch) +
                           " batch " + std::to_string(batch_no));
      }

      const double lr = config.learning_rate;
      params.W1 -= lr * grad.W1;
      params.b1 -= lr * grad.b1;
      params.W2 -= lr * grad.W2;
      params.b2 -= lr * grad.b2;
      params.W3 -= lr * grad.W3;
      params.b3 -= lr * grad.b3;
      if (!params.all_finite()) {
        throw NumericError("train_mlp: non-finite parameters after epoch " +
                           std::to_string(epoch) + " batch " + std::to_string(batch_no));
      }
      epoch_loss += grad.loss;
    }

    const double val = validation_miap(params);
    if (val > best_miap) {
      best_miap = val;
      best_params = params;
      best_epoch = epoch;
      epochs_without_gain = 0;
    } else {
      ++epochs_without_gain;
    }
    result.log.push_back({epoch, epoch_loss, val, best_miap});
    if (epochs_without_gain >= config.patience) break;
  }

  result.params = std::move(best_params);
  result.best_epoch = best_epoch;
  result.best_val_miap = best_miap;
  return result;
}

void write_training_log(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,train_loss,val_miap,best_so_far\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& row : log) {
    line.str({});
    line << row.epoch << ',' << row.train_loss << ',' << row.val_miap << ','
         << row.best_so_far;
    out << line.str() << '\n';
  }
}

}  // namespace f0t
