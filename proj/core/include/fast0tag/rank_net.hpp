#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fast0tag/dataset.hpp"
#include "fast0tag/embedding.hpp"
#include "fast0tag/rng.hpp"

namespace f0t {

// Two ReLU hidden layers followed by a linear output layer:
//   f(x) = W3·relu(W2·relu(W1·x + b1) + b2) + b3.
struct MlpParams {
  Eigen::MatrixXd W1;  // H1 x Dv
  Eigen::VectorXd b1;  // H1
  Eigen::MatrixXd W2;  // H2 x H1
  Eigen::VectorXd b2;  // H2
  Eigen::MatrixXd W3;  // D x H2
  Eigen::VectorXd b3;  // D

  int feature_dim() const { return static_cast<int>(W1.cols()); }
  int hidden1() const { return static_cast<int>(W1.rows()); }
  int hidden2() const { return static_cast<int>(W2.rows()); }
  int output_dim() const { return static_cast<int>(W3.rows()); }
  bool all_finite() const;
};

// Scaled-uniform init: weights uniform in ±sqrt(6/(fan_in+fan_out)), biases
// zero, drawn from `rng` in layer order (W1, W2, W3, row-major).
MlpParams init_mlp(int feature_dim, int hidden1, int hidden2, int output_dim, Rng& rng);

struct TrainConfig {
  int batch_size = 1000;
  double learning_rate = 1e-2;
  int max_epochs = 100;
  int patience = 10;               // epochs without val-MiAP gain before stopping
  double dropout_rate = 0.30;      // on the second hidden activation, train mode only
  bool normalize_per_image = true; // per-image weight 1/(|Y|·|Y̅|)
  std::uint64_t seed = 1;
  int hidden1 = 0;                 // 0 -> max(feature_dim, word dim)
  int hidden2 = 0;
};

struct ForwardCache {
  Eigen::VectorXd z1, a1, z2, a2, a2_dropped;
  Eigen::VectorXd mask;  // 0/1 per hidden-2 unit; empty when dropout skipped
  double keep_prob = 1.0;
};

// Eval-mode forward pass: no dropout.
Eigen::VectorXd forward_eval(const MlpParams& params, const Eigen::VectorXd& x);

// Train-mode forward pass. Dropout uses inverted scaling 1/(1-rate) so eval
// needs no rescale; with rate 0 no mask is drawn and the output equals the
// eval-mode pass exactly.
Eigen::VectorXd forward_train(const MlpParams& params, const Eigen::VectorXd& x,
                              double dropout_rate, Rng& mask_rng,
                              ForwardCache* cache = nullptr);

// sum over (p, n) pairs of log(1 + exp(<f,n> - <f,p>)), overflow-safe.
double per_image_loss(const Eigen::VectorXd& direction, const Eigen::MatrixXd& pos,
                      const Eigen::MatrixXd& neg);

struct BatchItem {
  Eigen::VectorXd x;
  Eigen::MatrixXd pos;  // one relevant-tag vector per row; nonempty
  Eigen::MatrixXd neg;  // one irrelevant-tag vector per row; nonempty
};

// Family of per-image dropout streams. Indexing by image keeps mask draws
// independent of thread scheduling.
struct MaskSource {
  std::uint64_t base = 0;
  Rng rng_for(std::size_t image_index) const {
    return Rng(derive_seed(base, image_index));
  }
};

double batch_loss(const MlpParams& params, const std::vector<BatchItem>& batch,
                  const TrainConfig& config, const MaskSource& masks);

struct GradientBundle {
  Eigen::MatrixXd W1, W2, W3;
  Eigen::VectorXd b1, b2, b3;
  double loss = 0.0;

  static GradientBundle zeros_like(const MlpParams& params);
};

// Exact analytic gradient of batch_loss via reverse-mode accumulation; the
// per-pair sigmoid weights collapse into one upstream vector per image before
// backprop. Per-image work may run on `threads` workers; accumulation is in
// image order, so the result is independent of the thread count.
GradientBundle gradient(const MlpParams& params, const std::vector<BatchItem>& batch,
                        const TrainConfig& config, const MaskSource& masks,
                        int threads = 1);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_miap = 0.0;
  double best_so_far = 0.0;
};

struct NetTrainResult {
  MlpParams params;            // parameters of the best validation epoch
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_val_miap = 0.0;
};

// Mini-batch gradient descent with constant learning rate, per-epoch
// shuffling from the seeded stream, validation MiAP early stopping.
// `table` must already be normalized. Bit-reproducible for a fixed config,
// including across thread counts.
NetTrainResult train_mlp(const TaggedImageSet& set, const EmbeddingTable& table,
                         const VocabularyPartition& partition, const TrainConfig& config,
                         int threads = 1);

// CSV: epoch,train_loss,val_miap,best_so_far
void write_training_log(std::ostream& out, const std::vector<EpochLog>& log);

}  // namespace f0t
