#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fast0tag/embedding.hpp"

namespace f0t {

enum class Split { train, val, test };

const char* split_name(Split s);
Split parse_split(const std::string& s);  // throws DataError on anything else

struct TaggedImage {
  std::string id;
  Eigen::VectorXd features;       // unit L2 norm after construction
  std::set<std::string> tags;     // relevant tags Y_m; may be empty
  Split split = Split::train;
};

// Image features joined with annotations and split labels. Features are
// L2-normalized at construction; zero-feature images are rejected.
// Immutable after load and shareable read-only.
class TaggedImageSet {
 public:
  TaggedImageSet() = default;
  TaggedImageSet(int feature_dim, std::vector<TaggedImage> items);

  int feature_dim() const { return feature_dim_; }
  std::size_t size() const { return items_.size(); }
  const std::vector<TaggedImage>& items() const { return items_; }
  const TaggedImage& at(std::size_t i) const { return items_[i]; }

  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  const TaggedImage& by_id(const std::string& id) const;  // DataError if unknown

  std::vector<std::size_t> indices_of_split(Split s) const;

 private:
  int feature_dim_ = 0;
  std::vector<TaggedImage> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Seen/unseen tag vocabularies, in file order. Disjointness is enforced when
// loading from files (make_partition); the type itself accepts any pair of
// internally-unique lists so diagnostics can probe degenerate overlaps.
class VocabularyPartition {
 public:
  VocabularyPartition() = default;
  VocabularyPartition(std::vector<std::string> seen, std::vector<std::string> unseen);

  const std::vector<std::string>& seen() const { return seen_; }
  const std::vector<std::string>& unseen() const { return unseen_; }
  bool is_seen(const std::string& tag) const { return seen_set_.count(tag) != 0; }
  bool is_unseen(const std::string& tag) const { return unseen_set_.count(tag) != 0; }

 private:
  std::vector<std::string> seen_;
  std::vector<std::string> unseen_;
  std::unordered_set<std::string> seen_set_;
  std::unordered_set<std::string> unseen_set_;
};

// Joins features, annotations, and splits into one set. The features stream
// may be either the TSV text format or the F0TG binary format (sniffed by
// magic bytes). Images absent from the annotations get an empty tag set;
// every image must carry a split label.
TaggedImageSet load_dataset(std::istream& features, std::istream& annotations,
                            std::istream& splits);

// Features alone, for consumers that need no labels (prediction): every image
// gets an empty tag set and the train split label.
TaggedImageSet load_features(std::istream& features);

// The visual association rule of one image under a partition:
// Y = relevant ∩ seen and Y̅ = seen \ Y, both in seen-vocabulary order.
std::pair<std::vector<std::string>, std::vector<std::string>> derive_rule(
    const TaggedImageSet& set, const std::string& image_id,
    const VocabularyPartition& partition);

// One tag per line per file. Rejects tags appearing in both files and tags
// missing from the embedding table.
VocabularyPartition make_partition(std::istream& seen_file, std::istream& unseen_file,
                                   const EmbeddingTable& table);

// Writers for the dataset file formats (used by the synthetic generator and
// the CLI so that synthetic and real data flow identically).
void save_features_text(const TaggedImageSet& set, std::ostream& out, int digits = 9);
void save_features_binary(const TaggedImageSet& set, std::ostream& out);
void save_annotations(const TaggedImageSet& set, std::ostream& out);
void save_splits(const TaggedImageSet& set, std::ostream& out);

}  // namespace f0t
