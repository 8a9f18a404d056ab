#include "fast0tag/tagger.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "fast0tag/errors.hpp"
#include "text_util.hpp"

namespace f0t {

RankedTagList score_tags(const Eigen::VectorXd& direction, const EmbeddingTable& candidates) {
  if (candidates.empty()) throw DataError("score_tags: empty candidate vocabulary");
  if (candidates.dim() != direction.size()) {
    throw DataError("score_tags: direction has " + std::to_string(direction.size()) +
                    " components, candidates have dim " + std::to_string(candidates.dim()));
  }
  const Eigen::VectorXd scores = candidates.vectors() * direction;
  RankedTagList out;
  out.entries.resize(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.entries[i] = {candidates.names()[i], scores(static_cast<Eigen::Index>(i))};
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const RankedEntry& a, const RankedEntry& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.tag < b.tag;
            });
  return out;
}

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::conventional: return "conventional";
    case Scenario::zero_shot: return "zeroshot";
    case Scenario::seen_unseen: return "mixed";
  }
  return "?";
}

Scenario parse_scenario(const std::string& s) {
  if (s == "conventional") return Scenario::conventional;
  if (s == "zeroshot") return Scenario::zero_shot;
  if (s == "mixed") return Scenario::seen_unseen;
  throw DataError("unknown scenario '" + s + "' (expected conventional|zeroshot|mixed)");
}

Eigen::VectorXd model_direction(const AnyModel& model, const Eigen::VectorXd& x) {
  if (const auto* linear = std::get_if<LinearDirectionMap>(&model)) {
    return apply_linear(*linear, x);
  }
  return forward_eval(std::get<MlpParams>(model), x);
}

RankedTagList tag_image(const AnyModel& model, const Eigen::VectorXd& x,
                        const EmbeddingTable& table, const VocabularyPartition& partition,
                        Scenario scenario) {
  std::vector<std::string> candidates;
  switch (scenario) {
    case Scenario::conventional:
      candidates = partition.seen();
      break;
    case Scenario::zero_shot:
      candidates = partition.unseen();
      break;
    case Scenario::seen_unseen:
      candidates = partition.seen();
      candidates.insert(candidates.end(), partition.unseen().begin(),
                        partition.unseen().end());
      break;
  }
  if (candidates.empty()) {
    throw DataError(std::string("tag_image: empty candidate vocabulary for scenario ") +
                    scenario_name(scenario));
  }
  return score_tags(model_direction(model, x), table.subset(candidates));
}

void write_predictions(std::ostream& out,
                       const std::vector<std::pair<std::string, RankedTagList>>& predictions,
                       int top) {
  std::ostringstream line;
  line << std::setprecision(6);
  for (const auto& [id, ranking] : predictions) {
    line.str({});
    line << id << '\t';
    const std::size_t limit = top > 0
                                  ? std::min(ranking.entries.size(), static_cast<std::size_t>(top))
                                  : ranking.entries.size();
    for (std::size_t i = 0; i < limit; ++i) {
      if (i != 0) line << ',';
      line << ranking.entries[i].tag << ':' << ranking.entries[i].score;
    }
    out << line.str() << '\n';
  }
}

std::vector<std::pair<std::string, RankedTagList>> read_predictions(std::istream& in) {
  std::vector<std::pair<std::string, RankedTagList>> out;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string context = "predictions line " + std::to_string(line_no);
    detail::reject_cr(line, context);
    if (line.empty()) continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw DataError(context + ": malformed line");
    }
    if (!ids.insert(fields[0]).second) {
      throw DataError(context + ": duplicate image id '" + fields[0] + "'");
    }
    RankedTagList ranking;
    std::unordered_set<std::string> tags;
    for (const auto& pair : detail::split(fields[1], ',')) {
      const auto colon = pair.rfind(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == pair.size()) {
        throw DataError(context + ": malformed tag:score entry '" + pair + "'");
      }
      RankedEntry entry;
      entry.tag = pair.substr(0, colon);
      entry.score = detail::parse_double(pair.substr(colon + 1), context);
      if (!tags.insert(entry.tag).second) {
        throw DataError(context + ": duplicate tag '" + entry.tag + "'");
      }
      if (!ranking.entries.empty() && entry.score > ranking.entries.back().score) {
        throw DataError(context + ": scores not non-increasing");
      }
      ranking.entries.push_back(std::move(entry));
    }
    out.emplace_back(fields[0], std::move(ranking));
  }
  return out;
}

}  // namespace f0t
