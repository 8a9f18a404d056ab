#include "fast0tag/dataset.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "fast0tag/errors.hpp"
#include "text_util.hpp"

namespace f0t {

namespace {

constexpr char kFeatureMagic[4] = {'F', '0', 'T', 'G'};

struct RawFeatures {
  int dim = 0;
  std::vector<std::string> ids;
  std::vector<Eigen::VectorXd> rows;
};

RawFeatures parse_features_text(std::istream& in, const std::string& first_chunk) {
  RawFeatures out;
  std::size_t line_no = 0;
  std::string line;
  bool first = true;

  auto handle_line = [&](const std::string& l) {
    ++line_no;
    const std::string context = "features line " + std::to_string(line_no);
    detail::reject_cr(l, context);
    const auto fields = detail::split(l, '\t');
    if (fields.size() < 2 || fields.front().empty()) {
      throw DataError(context + ": malformed line");
    }
    const int line_dim = static_cast<int>(fields.size()) - 1;
    if (out.dim == 0) {
      out.dim = line_dim;
    } else if (line_dim != out.dim) {
      throw DataError(context + ": id '" + fields.front() + "' has " +
                      std::to_string(line_dim) + " components, expected " +
                      std::to_string(out.dim));
    }
    Eigen::VectorXd x(out.dim);
    for (int j = 0; j < out.dim; ++j) {
      x(j) = detail::parse_double(fields[static_cast<std::size_t>(j) + 1], context);
    }
    out.ids.push_back(fields.front());
    out.rows.push_back(std::move(x));
  };

  while (true) {
    std::string full;
    if (first) {
      // The caller consumed up to four bytes while sniffing for the binary
      // magic; re-attach them to the first line.
      first = false;
      const auto nl = first_chunk.find('\n');
      if (nl != std::string::npos) {
        handle_line(first_chunk.substr(0, nl));
        // Anything after the newline inside the sniffed chunk (at most three
        // bytes) becomes the prefix of the next line.
        full = first_chunk.substr(nl + 1);
        if (!std::getline(in, line)) {
          if (!full.empty()) handle_line(full);
          break;
        }
        handle_line(full + line);
        continue;
      }
      if (!std::getline(in, line)) {
        if (!first_chunk.empty()) handle_line(first_chunk);
        break;
      }
      handle_line(first_chunk + line);
      continue;
    }
    if (!std::getline(in, line)) break;
    handle_line(line);
  }

  if (out.ids.empty()) throw DataError("empty features stream");
  return out;
}

RawFeatures parse_features_binary(std::istream& in) {
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  detail::ByteReader r(reinterpret_cast<const unsigned char*>(body.data()), body.size(),
                       "features binary");
  const std::uint32_t count = r.u32();
  const std::uint32_t dim = r.u32();
  if (count == 0 || dim == 0) throw DataError("features binary: empty table");
  const std::uint32_t id_count = r.u32();
  if (id_count != count) {
    throw DataError("features binary: id table count " + std::to_string(id_count) +
                    " does not match row count " + std::to_string(count));
  }
  RawFeatures out;
  out.dim = static_cast<int>(dim);
  out.ids.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = r.u16();
    if (len == 0) throw DataError("features binary: empty image id");
    out.ids.push_back(r.bytes(len));
  }
  out.rows.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Eigen::VectorXd x(out.dim);
    for (std::uint32_t j = 0; j < dim; ++j) x(static_cast<int>(j)) = r.f32();
    if (!x.allFinite()) {
      throw DataError("features binary: non-finite value for id '" + out.ids[i] + "'");
    }
    out.rows.push_back(std::move(x));
  }
  if (r.remaining() != 0) throw DataError("features binary: trailing bytes");
  return out;
}

RawFeatures parse_features(std::istream& in) {
  char head[4] = {};
  in.read(head, 4);
  const std::size_t got = static_cast<std::size_t>(in.gcount());
  if (got == 4 && std::equal(head, head + 4, kFeatureMagic)) {
    return parse_features_binary(in);
  }
  in.clear();
  return parse_features_text(in, std::string(head, got));
}

}  // namespace

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw DataError("unknown split label '" + s + "' (expected train|val|test)");
}

TaggedImageSet::TaggedImageSet(int feature_dim, std::vector<TaggedImage> items)
    : feature_dim_(feature_dim), items_(std::move(items)) {
  if (feature_dim_ <= 0) throw DataError("feature dimension must be positive");
  index_.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    auto& item = items_[i];
    if (item.id.empty()) throw DataError("empty image id");
    if (item.features.size() != feature_dim_) {
      throw DataError("image '" + item.id + "' has " +
                      std::to_string(item.features.size()) + " feature components, expected " +
                      std::to_string(feature_dim_));
    }
    if (!item.features.allFinite()) {
      throw DataError("image '" + item.id + "' has non-finite features");
    }
    const double norm = item.features.norm();
    if (norm == 0.0) throw DataError("image '" + item.id + "' has all-zero features");
    item.features /= norm;
    if (!index_.emplace(item.id, i).second) {
      throw DataError("duplicate image id '" + item.id + "'");
    }
  }
}

const TaggedImage& TaggedImageSet::by_id(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw DataError("unknown image id '" + id + "'");
  return items_[it->second];
}

std::vector<std::size_t> TaggedImageSet::indices_of_split(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (items_[i].split == s) out.push_back(i);
  }
  return out;
}

VocabularyPartition::VocabularyPartition(std::vector<std::string> seen,
                                         std::vector<std::string> unseen)
    : seen_(std::move(seen)), unseen_(std::move(unseen)) {
  for (const auto& t : seen_) {
    if (!seen_set_.insert(t).second) throw DataError("duplicate seen tag '" + t + "'");
  }
  for (const auto& t : unseen_) {
    if (!unseen_set_.insert(t).second) throw DataError("duplicate unseen tag '" + t + "'");
  }
}

TaggedImageSet load_dataset(std::istream& features, std::istream& annotations,
                            std::istream& splits) {
  RawFeatures raw = parse_features(features);

  std::unordered_map<std::string, std::size_t> index;
  index.reserve(raw.ids.size());
  for (std::size_t i = 0; i < raw.ids.size(); ++i) {
    if (!index.emplace(raw.ids[i], i).second) {
      throw DataError("duplicate image id '" + raw.ids[i] + "' in features");
    }
  }

  std::vector<TaggedImage> items(raw.ids.size());
  for (std::size_t i = 0; i < raw.ids.size(); ++i) {
    items[i].id = raw.ids[i];
    items[i].features = std::move(raw.rows[i]);
  }

  // Annotations: image_id<TAB>tag1,tag2,...
  {
    std::unordered_set<std::string> annotated;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(annotations, line)) {
      ++line_no;
      const std::string context = "annotations line " + std::to_string(line_no);
      detail::reject_cr(line, context);
      if (line.empty()) continue;
      const auto fields = detail::split(line, '\t');
      if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
        throw DataError(context + ": malformed line");
      }
      const auto it = index.find(fields[0]);
      if (it == index.end()) {
        throw DataError(context + ": id '" + fields[0] + "' not present in features");
      }
      if (!annotated.insert(fields[0]).second) {
        throw DataError(context + ": duplicate annotation for id '" + fields[0] + "'");
      }
      auto& tags = items[it->second].tags;
      for (const auto& tag : detail::split(fields[1], ',')) {
        if (tag.empty()) throw DataError(context + ": empty tag");
        tags.insert(tag);
      }
    }
  }

  // Splits: image_id<TAB>{train|val|test}; required for every image.
  {
    std::unordered_set<std::string> assigned;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(splits, line)) {
      ++line_no;
      const std::string context = "splits line " + std::to_string(line_no);
      detail::reject_cr(line, context);
      if (line.empty()) continue;
      const auto fields = detail::split(line, '\t');
      if (fields.size() != 2 || fields[0].empty()) {
        throw DataError(context + ": malformed line");
      }
      const auto it = index.find(fields[0]);
      if (it == index.end()) {
        throw DataError(context + ": id '" + fields[0] + "' not present in features");
      }
      if (!assigned.insert(fields[0]).second) {
        throw DataError(context + ": duplicate split for id '" + fields[0] + "'");
      }
      items[it->second].split = parse_split(fields[1]);
    }
    for (const auto& item : items) {
      if (assigned.count(item.id) == 0) {
        throw DataError("image '" + item.id + "' has no split assignment");
      }
    }
  }

  return TaggedImageSet(raw.dim, std::move(items));
}

TaggedImageSet load_features(std::istream& features) {
  RawFeatures raw = parse_features(features);
  std::vector<TaggedImage> items(raw.ids.size());
  for (std::size_t i = 0; i < raw.ids.size(); ++i) {
    items[i].id = raw.ids[i];
    items[i].features = std::move(raw.rows[i]);
  }
  return TaggedImageSet(raw.dim, std::move(items));
}

std::pair<std::vector<std::string>, std::vector<std::string>> derive_rule(
    const TaggedImageSet& set, const std::string& image_id,
    const VocabularyPartition& partition) {
  const TaggedImage& image = set.by_id(image_id);
  std::vector<std::string> relevant;
  std::vector<std::string> irrelevant;
  for (const auto& tag : partition.seen()) {
    if (image.tags.count(tag) != 0) {
      relevant.push_back(tag);
    } else {
      irrelevant.push_back(tag);
    }
  }
  return {std::move(relevant), std::move(irrelevant)};
}

namespace {

std::vector<std::string> read_tag_lines(std::istream& in, const std::string& label) {
  std::vector<std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string context = label + " line " + std::to_string(line_no);
    detail::reject_cr(line, context);
    if (line.empty()) continue;
    if (line.find(' ') != std::string::npos || line.find('\t') != std::string::npos) {
      throw DataError(context + ": tag names must not contain whitespace");
    }
    out.push_back(line);
  }
  return out;
}

}  // namespace

VocabularyPartition make_partition(std::istream& seen_file, std::istream& unseen_file,
                                   const EmbeddingTable& table) {
  auto seen = read_tag_lines(seen_file, "seen vocabulary");
  auto unseen = read_tag_lines(unseen_file, "unseen vocabulary");

  std::unordered_set<std::string> seen_set(seen.begin(), seen.end());
  if (seen_set.size() != seen.size()) {
    // Report the first duplicate by name.
    std::unordered_set<std::string> check;
    for (const auto& t : seen) {
      if (!check.insert(t).second) throw DataError("duplicate tag '" + t + "' in seen vocabulary");
    }
  }
  {
    std::unordered_set<std::string> check;
    for (const auto& t : unseen) {
      if (!check.insert(t).second) {
        throw DataError("duplicate tag '" + t + "' in unseen vocabulary");
      }
    }
  }

  std::vector<std::string> overlap;
  for (const auto& t : unseen) {
    if (seen_set.count(t) != 0) overlap.push_back(t);
  }
  if (!overlap.empty()) {
    std::string msg = "tags in both seen and unseen vocabularies:";
    for (const auto& t : overlap) msg += " " + t;
    throw DataError(msg);
  }

  std::vector<std::string> missing;
  for (const auto& t : seen) {
    if (!table.contains(t)) missing.push_back(t);
  }
  for (const auto& t : unseen) {
    if (!table.contains(t)) missing.push_back(t);
  }
  if (!missing.empty()) {
    std::string msg = "vocabulary tags not in embedding table:";
    for (const auto& t : missing) msg += " " + t;
    throw DataError(msg);
  }

  return VocabularyPartition(std::move(seen), std::move(unseen));
}

void save_features_text(const TaggedImageSet& set, std::ostream& out, int digits) {
  std::ostringstream line;
  line << std::setprecision(digits);
  for (const auto& item : set.items()) {
    line.str({});
    line << item.id;
    for (Eigen::Index j = 0; j < item.features.size(); ++j) line << '\t' << item.features(j);
    out << line.str() << '\n';
  }
}

void save_features_binary(const TaggedImageSet& set, std::ostream& out) {
  std::string buf;
  buf.append(kFeatureMagic, 4);
  detail::put_u32(buf, static_cast<std::uint32_t>(set.size()));
  detail::put_u32(buf, static_cast<std::uint32_t>(set.feature_dim()));
  detail::put_u32(buf, static_cast<std::uint32_t>(set.size()));
  for (const auto& item : set.items()) {
    if (item.id.size() > 0xffff) throw DataError("image id too long for binary format");
    detail::put_u16(buf, static_cast<std::uint16_t>(item.id.size()));
    buf.append(item.id);
  }
  for (const auto& item : set.items()) {
    for (Eigen::Index j = 0; j < item.features.size(); ++j) {
      detail::put_f32(buf, static_cast<float>(item.features(j)));
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void save_annotations(const TaggedImageSet& set, std::ostream& out) {
  for (const auto& item : set.items()) {
    if (item.tags.empty()) continue;
    out << item.id << '\t';
    bool first = true;
    for (const auto& tag : item.tags) {
      if (!first) out << ',';
      out << tag;
      first = false;
    }
    out << '\n';
  }
}

void save_splits(const TaggedImageSet& set, std::ostream& out) {
  for (const auto& item : set.items()) {
    out << item.id << '\t' << split_name(item.split) << '\n';
  }
}

}  // namespace f0t
