#include "fast0tag/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "fast0tag/errors.hpp"
#include "fast0tag/rng.hpp"

namespace f0t {

namespace {

constexpr std::uint64_t kTagStream = 0x11;
constexpr std::uint64_t kPlantedStream = 0x22;
constexpr std::uint64_t kImageStream = 0x33;
constexpr std::uint64_t kSplitStream = 0x44;
constexpr int kMaxAttemptsPerImage = 100;

Eigen::VectorXd unit_sphere(int dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    for (int i = 0; i < dim; ++i) v(i) = rng.normal();
    norm = v.norm();
  }
  return v / norm;
}

std::string padded_name(char prefix, int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%c%04d", prefix, index);
  return buf;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

SynthData generate(const SynthSpec& spec) {
  if (spec.margin <= 0.0) throw DataError("synth: margin must be positive");
  if (spec.noise_sigma < 0.0) throw DataError("synth: noise_sigma must be non-negative");
  if (spec.feature_dim < 2 || spec.embed_dim < 2) {
    throw DataError("synth: dimensions must be at least 2");
  }
  if (spec.num_seen_tags < 2 || spec.num_unseen_tags < 2) {
    throw DataError("synth: tag counts must be at least 2");
  }
  if (spec.num_images < 1) throw DataError("synth: need at least one image");

  const int total_tags = spec.num_seen_tags + spec.num_unseen_tags;

  // Tag vectors on the unit sphere, seen tags first.
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(total_tags));
  for (int i = 0; i < spec.num_seen_tags; ++i) names.push_back(padded_name('s', i));
  for (int i = 0; i < spec.num_unseen_tags; ++i) names.push_back(padded_name('u', i));

  Rng tag_rng(derive_seed(spec.seed, kTagStream));
  Eigen::MatrixXd tag_vectors(total_tags, spec.embed_dim);
  for (int i = 0; i < total_tags; ++i) {
    tag_vectors.row(i) = unit_sphere(spec.embed_dim, tag_rng).transpose();
  }

  // Planted map with unit-norm rows.
  Rng planted_rng(derive_seed(spec.seed, kPlantedStream));
  Eigen::MatrixXd planted(spec.embed_dim, spec.feature_dim);
  for (int i = 0; i < spec.embed_dim; ++i) {
    for (int j = 0; j < spec.feature_dim; ++j) planted(i, j) = planted_rng.normal();
    const double norm = planted.row(i).norm();
    if (norm > 0.0) planted.row(i) /= norm;
  }

  Rng image_rng(derive_seed(spec.seed, kImageStream));
  std::vector<TaggedImage> items;
  items.reserve(spec.num_images);
  for (std::size_t m = 0; m < spec.num_images; ++m) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttemptsPerImage; ++attempt) {
      const Eigen::VectorXd x = unit_sphere(spec.feature_dim, image_rng);
      Eigen::VectorXd direction = planted * x;
      if (spec.noise_sigma > 0.0) {
        for (int i = 0; i < spec.embed_dim; ++i) {
          direction(i) += spec.noise_sigma * image_rng.normal();
        }
      }
      const Eigen::VectorXd scores = tag_vectors * direction;
      std::vector<double> score_values(scores.data(), scores.data() + scores.size());
      const double threshold = median(std::move(score_values)) + spec.margin;

      std::set<std::string> tags;
      for (int t = 0; t < total_tags; ++t) {
        if (scores(t) >= threshold) tags.insert(names[static_cast<std::size_t>(t)]);
      }
      if (tags.empty() || static_cast<int>(tags.size()) == total_tags) continue;

      TaggedImage item;
      char id[16];
      std::snprintf(id, sizeof(id), "img%05zu", m);
      item.id = id;
      item.features = x;
      item.tags = std::move(tags);
      items.push_back(std::move(item));
      placed = true;
      break;
    }
    if (!placed) {
      throw DataError("synth: resampling budget exhausted; margin " +
                      std::to_string(spec.margin) + " looks infeasible for this spec");
    }
  }

  // Splits 60/20/20 over a shuffled order.
  {
    Rng split_rng(derive_seed(spec.seed, kSplitStream));
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    split_rng.shuffle(order);
    const std::size_t n_train = items.size() * 6 / 10;
    const std::size_t n_val = items.size() * 2 / 10;
    for (std::size_t r = 0; r < order.size(); ++r) {
      items[order[r]].split =
          r < n_train ? Split::train : (r < n_train + n_val ? Split::val : Split::test);
    }
  }

  SynthData out;
  out.table = EmbeddingTable(spec.embed_dim, names, std::move(tag_vectors));
  out.set = TaggedImageSet(spec.feature_dim, std::move(items));
  std::vector<std::string> seen(names.begin(), names.begin() + spec.num_seen_tags);
  std::vector<std::string> unseen(names.begin() + spec.num_seen_tags, names.end());
  out.partition = VocabularyPartition(std::move(seen), std::move(unseen));
  out.planted = std::move(planted);
  return out;
}

}  // namespace f0t
