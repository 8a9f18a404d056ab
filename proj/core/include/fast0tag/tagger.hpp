#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fast0tag/dataset.hpp"
#include "fast0tag/embedding.hpp"
#include "fast0tag/linear_map.hpp"
#include "fast0tag/rank_net.hpp"

namespace f0t {

struct RankedEntry {
  std::string tag;
  double score = 0.0;
};

// Full ranking of a candidate vocabulary: scores non-increasing, ties broken
// by ascending tag name, no duplicates.
struct RankedTagList {
  std::vector<RankedEntry> entries;
};

// Scores every candidate tag by its inner product with the direction.
RankedTagList score_tags(const Eigen::VectorXd& direction, const EmbeddingTable& candidates);

enum class Scenario { conventional, zero_shot, seen_unseen };

const char* scenario_name(Scenario s);
Scenario parse_scenario(const std::string& s);  // conventional|zeroshot|mixed

using AnyModel = std::variant<LinearDirectionMap, MlpParams>;

// The direction in word-vector space a model assigns to an image feature
// (eval-mode forward for the network).
Eigen::VectorXd model_direction(const AnyModel& model, const Eigen::VectorXd& x);

// Candidate vocabulary is S, U, or S then U depending on the scenario; the
// table must be normalized and cover every vocabulary tag.
RankedTagList tag_image(const AnyModel& model, const Eigen::VectorXd& x,
                        const EmbeddingTable& table, const VocabularyPartition& partition,
                        Scenario scenario);

// Prediction rows: image_id<TAB>tag1:score1,tag2:score2,... with scores at
// 6 significant digits. top = 0 writes the full ranking.
void write_predictions(std::ostream& out,
                       const std::vector<std::pair<std::string, RankedTagList>>& predictions,
                       int top = 0);

std::vector<std::pair<std::string, RankedTagList>> read_predictions(std::istream& in);

}  // namespace f0t
