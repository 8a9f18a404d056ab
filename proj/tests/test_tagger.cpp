#include <doctest.h>

#include <sstream>

#include "fast0tag/errors.hpp"
#include "fast0tag/tagger.hpp"
#include "support.hpp"

using f0t::DataError;
using f0t::RankedTagList;
using f0t::Scenario;
using f0t::score_tags;
using oracle::make_table;
using oracle::make_vector;
using oracle::ranking_tags;

TEST_SUITE_BEGIN("tagger");

TEST_CASE("score_tags orders by inner product") {
  const auto table = make_table({"t1", "t2", "t3"}, {{0.8, 0.6}, {0.0, 1.0}, {-1.0, 0.0}});
  const RankedTagList list = score_tags(make_vector({1.0, 0.0}), table);
  REQUIRE(list.entries.size() == 3);
  CHECK(list.entries[0].tag == "t1");
  CHECK(list.entries[0].score == doctest::Approx(0.8));
  CHECK(list.entries[1].tag == "t2");
  CHECK(list.entries[1].score == doctest::Approx(0.0));
  CHECK(list.entries[2].tag == "t3");
  CHECK(list.entries[2].score == doctest::Approx(-1.0));
}

TEST_CASE("zero direction exposes the lexicographic tie-break") {
  const auto table = make_table({"pear", "apple", "fig"},
                                {{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}});
  const RankedTagList list = score_tags(make_vector({0.0, 0.0}), table);
  CHECK(ranking_tags(list) == std::vector<std::string>{"apple", "fig", "pear"});
}

TEST_CASE("single candidate and error paths") {
  const auto table = make_table({"only"}, {{1.0, 0.0}});
  CHECK(score_tags(make_vector({0.3, 0.4}), table).entries.size() == 1);
  CHECK_THROWS_AS(score_tags(make_vector({1.0}), table), DataError);
  CHECK_THROWS_AS(score_tags(make_vector({1.0, 0.0}), f0t::EmbeddingTable()), DataError);
}

TEST_CASE("candidate insertion order does not matter") {
  const auto a = make_table({"x", "y", "z"}, {{1.0, 0.0}, {0.0, 1.0}, {0.7, 0.7}});
  const auto b = make_table({"z", "x", "y"}, {{0.7, 0.7}, {1.0, 0.0}, {0.0, 1.0}});
  const auto direction = make_vector({0.2, 0.9});
  CHECK(ranking_tags(score_tags(direction, a)) == ranking_tags(score_tags(direction, b)));
}

TEST_CASE("tag_image honours the scenario vocabularies") {
  const auto table = make_table({"s1", "s2", "s3", "u1", "u2"},
                                {{1.0, 0.0},
                                 {0.0, 1.0},
                                 {0.6, 0.8},
                                 {-1.0, 0.0},
                                 {0.0, -1.0}})
                         .normalized();
  const f0t::VocabularyPartition partition({"s1", "s2", "s3"}, {"u1", "u2"});
  f0t::LinearDirectionMap map;
  map.A = oracle::make_matrix({{0.9, 0.1}, {-0.2, 0.8}});
  const f0t::AnyModel model = map;
  const auto x = make_vector({0.6, 0.8});

  const RankedTagList conventional =
      tag_image(model, x, table, partition, Scenario::conventional);
  CHECK(conventional.entries.size() == 3);

  const RankedTagList zero_shot = tag_image(model, x, table, partition, Scenario::zero_shot);
  CHECK(zero_shot.entries.size() == 2);

  const RankedTagList mixed = tag_image(model, x, table, partition, Scenario::seen_unseen);
  CHECK(mixed.entries.size() == 5);
  std::set<std::string> seen_tags;
  for (const auto& e : mixed.entries) seen_tags.insert(e.tag);
  CHECK(seen_tags.size() == 5);

  // The relative order of the unseen tags is the same in both protocols.
  std::vector<std::string> unseen_in_mixed;
  for (const auto& e : mixed.entries) {
    if (partition.is_unseen(e.tag)) unseen_in_mixed.push_back(e.tag);
  }
  CHECK(unseen_in_mixed == ranking_tags(zero_shot));
}

TEST_CASE("tag_image rejects an empty scenario vocabulary") {
  const auto table = make_table({"s1"}, {{1.0, 0.0}});
  const f0t::VocabularyPartition partition({"s1"}, {});
  f0t::LinearDirectionMap map;
  map.A = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(tag_image(map, make_vector({1.0, 0.0}), table, partition,
                            Scenario::zero_shot),
                  DataError);
}

TEST_CASE("prediction files round-trip and honour --top") {
  std::vector<std::pair<std::string, RankedTagList>> predictions;
  RankedTagList first;
  first.entries = {{"b", 0.75}, {"a", 0.5}, {"c", -0.25}};
  RankedTagList second;
  second.entries = {{"a", 1.0}, {"c", 0.0}, {"b", -1.0}};
  predictions.emplace_back("img1", first);
  predictions.emplace_back("img2", second);

  std::ostringstream full;
  f0t::write_predictions(full, predictions);
  std::istringstream full_in(full.str());
  const auto again = f0t::read_predictions(full_in);
  REQUIRE(again.size() == 2);
  CHECK(again[0].first == "img1");
  CHECK(ranking_tags(again[0].second) == std::vector<std::string>{"b", "a", "c"});
  CHECK(again[1].second.entries[0].score == doctest::Approx(1.0));

  std::ostringstream truncated;
  f0t::write_predictions(truncated, predictions, 2);
  std::istringstream reread(truncated.str());
  const auto top2 = f0t::read_predictions(reread);
  CHECK(top2[0].second.entries.size() == 2);
}

TEST_CASE("malformed prediction files are rejected") {
  std::istringstream missing_score("img1\ta:0.5,b\n");
  CHECK_THROWS_AS(f0t::read_predictions(missing_score), DataError);
  std::istringstream increasing("img1\ta:0.5,b:0.9\n");
  CHECK_THROWS_WITH_AS(f0t::read_predictions(increasing),
                       doctest::Contains("non-increasing"), DataError);
  std::istringstream duplicate("img1\ta:0.5\nimg1\tb:0.5\n");
  CHECK_THROWS_AS(f0t::read_predictions(duplicate), DataError);
}

TEST_SUITE_END();
