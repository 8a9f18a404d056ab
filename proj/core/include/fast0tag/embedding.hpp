#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace f0t {

// Ordered table of tag name -> word vector. Immutable after construction and
// safe to share across threads. Vectors are stored as rows of a dense matrix
// so that scoring a whole vocabulary is a single matrix-vector product.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  // Takes ownership of names and vectors (one row per name). Validates that
  // names are unique and every row is finite with exactly `dim` components.
  EmbeddingTable(int dim, std::vector<std::string> names, Eigen::MatrixXd vectors);

  int dim() const { return dim_; }
  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }

  const std::vector<std::string>& names() const { return names_; }
  const Eigen::MatrixXd& vectors() const { return vectors_; }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t index_of(const std::string& name) const;  // throws DataError if absent
  Eigen::VectorXd vector_of(const std::string& name) const;

  // Every vector divided by its L2 norm; order and names preserved.
  // Throws DataError naming the first zero-vector entry.
  EmbeddingTable normalized() const;

  // Table restricted to exactly `names`, in the given order; dim unchanged.
  // Throws DataError listing every missing name.
  EmbeddingTable subset(const std::vector<std::string>& names) const;

  // Rows for the given names, in order.
  Eigen::MatrixXd rows_for(const std::vector<std::string>& names) const;

 private:
  int dim_ = 0;
  std::vector<std::string> names_;
  Eigen::MatrixXd vectors_;  // size() x dim
  std::unordered_map<std::string, std::size_t> index_;
};

// Parses the line-oriented text format `token v1 v2 ... vD` with single-space
// separators; the first line fixes D. Vectors are not normalized here.
// LF line endings, with or without a trailing newline; CR is rejected.
EmbeddingTable load_embeddings(std::istream& in);

// Writes the same text format, values at `digits` significant digits.
// The default of 9 round-trips float32-precision sources exactly.
void save_embeddings(const EmbeddingTable& table, std::ostream& out, int digits = 9);

}  // namespace f0t
