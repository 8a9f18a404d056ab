#include "fast0tag/embedding.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "fast0tag/errors.hpp"

namespace f0t {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

double parse_double(const std::string& token, std::size_t line_no) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw DataError("embeddings line " + std::to_string(line_no) +
                    ": non-numeric field '" + token + "'");
  }
  return value;
}

}  // namespace

EmbeddingTable::EmbeddingTable(int dim, std::vector<std::string> names,
                               Eigen::MatrixXd vectors)
    : dim_(dim), names_(std::move(names)), vectors_(std::move(vectors)) {
  if (dim_ <= 0) throw DataError("embedding dimension must be positive");
  if (static_cast<std::size_t>(vectors_.rows()) != names_.size() ||
      vectors_.cols() != dim_) {
    throw DataError("embedding table shape does not match names/dim");
  }
  if (!vectors_.allFinite()) throw DataError("embedding table contains non-finite values");
  index_.reserve(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw DataError("empty tag name in embedding table");
    if (!index_.emplace(names_[i], i).second) {
      throw DataError("duplicate tag '" + names_[i] + "' in embedding table");
    }
  }
}

std::size_t EmbeddingTable::index_of(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw DataError("tag '" + name + "' not in embedding table");
  return it->second;
}

Eigen::VectorXd EmbeddingTable::vector_of(const std::string& name) const {
  return vectors_.row(static_cast<Eigen::Index>(index_of(name))).transpose();
}

EmbeddingTable EmbeddingTable::normalized() const {
  Eigen::MatrixXd out = vectors_;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm == 0.0) {
      throw DataError("cannot normalize zero vector for tag '" +
                      names_[static_cast<std::size_t>(i)] + "'");
    }
    out.row(i) /= norm;
  }
  return EmbeddingTable(dim_, names_, std::move(out));
}

EmbeddingTable EmbeddingTable::subset(const std::vector<std::string>& names) const {
  std::vector<std::string> missing;
  for (const auto& name : names) {
    if (!contains(name)) missing.push_back(name);
  }
  if (!missing.empty()) {
    std::string msg = "tags not in embedding table:";
    for (const auto& name : missing) msg += " " + name;
    throw DataError(msg);
  }
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(names.size()), dim_);
  for (std::size_t i = 0; i < names.size(); ++i) {
    rows.row(static_cast<Eigen::Index>(i)) =
        vectors_.row(static_cast<Eigen::Index>(index_.at(names[i])));
  }
  return EmbeddingTable(dim_, names, std::move(rows));
}

Eigen::MatrixXd EmbeddingTable::rows_for(const std::vector<std::string>& names) const {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(names.size()), dim_);
  for (std::size_t i = 0; i < names.size(); ++i) {
    rows.row(static_cast<Eigen::Index>(i)) =
        vectors_.row(static_cast<Eigen::Index>(index_of(names[i])));
  }
  return rows;
}

EmbeddingTable load_embeddings(std::istream& in) {
  std::vector<std::string> names;
  std::vector<double> values;
  int dim = 0;
  std::size_t line_no = 0;
  std::string line;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find('\r') != std::string::npos) {
      throw DataError("embeddings line " + std::to_string(line_no) +
                      ": CR character; only LF line endings are accepted");
    }
    const auto fields = split(line, ' ');
    if (fields.size() < 2) {
      throw DataError("embeddings line " + std::to_string(line_no) + ": malformed line");
    }
    for (const auto& f : fields) {
      if (f.empty()) {
        throw DataError("embeddings line " + std::to_string(line_no) +
                        ": empty field (double space?)");
      }
    }
    const std::string& token = fields.front();
    const int line_dim = static_cast<int>(fields.size()) - 1;
    if (dim == 0) {
      dim = line_dim;
    } else if (line_dim != dim) {
      throw DataError("embeddings line " + std::to_string(line_no) + ": token '" + token +
                      "' has " + std::to_string(line_dim) + " components, expected " +
                      std::to_string(dim));
    }
    names.push_back(token);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      values.push_back(parse_double(fields[i], line_no));
    }
  }

  if (names.empty()) throw DataError("empty embeddings stream");

  Eigen::MatrixXd mat(static_cast<Eigen::Index>(names.size()), dim);
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (int j = 0; j < dim; ++j) {
      mat(static_cast<Eigen::Index>(i), j) = values[i * static_cast<std::size_t>(dim) +
                                                    static_cast<std::size_t>(j)];
    }
  }
  try {
    return EmbeddingTable(dim, std::move(names), std::move(mat));
  } catch (const DataError& e) {
    throw DataError(std::string("embeddings: ") + e.what());
  }
}

void save_embeddings(const EmbeddingTable& table, std::ostream& out, int digits) {
  std::ostringstream line;
  line << std::setprecision(digits);
  for (std::size_t i = 0; i < table.size(); ++i) {
    line.str({});
    line << table.names()[i];
    for (int j = 0; j < table.dim(); ++j) {
      line << ' ' << table.vectors()(static_cast<Eigen::Index>(i), j);
    }
    out << line.str() << '\n';
  }
}

}  // namespace f0t
