#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fast0tag/embedding.hpp"
#include "fast0tag/errors.hpp"
#include "support.hpp"

using f0t::DataError;
using f0t::EmbeddingTable;
using f0t::load_embeddings;
using f0t::save_embeddings;

TEST_SUITE_BEGIN("embedding");

TEST_CASE("load parses a two-entry stream") {
  std::istringstream in("cat 1 2 3\ndog 0.5 -1 2.25\n");
  const EmbeddingTable table = load_embeddings(in);
  CHECK(table.size() == 2);
  CHECK(table.dim() == 3);
  CHECK(table.names()[0] == "cat");
  CHECK(table.names()[1] == "dog");
  CHECK(table.vector_of("dog")(1) == -1.0);
}

TEST_CASE("load keeps insertion order and verbatim case") {
  std::istringstream in("Zebra 1 0\nalpha 0 1\nZEBRA 1 1\n");
  const EmbeddingTable table = load_embeddings(in);
  CHECK(table.names() == std::vector<std::string>{"Zebra", "alpha", "ZEBRA"});
}

TEST_CASE("load rejects dimension mismatch") {
  std::istringstream in("cat 1 2\ndog 1 2 3\n");
  CHECK_THROWS_AS(load_embeddings(in), DataError);
}

TEST_CASE("load rejects duplicate tokens") {
  std::istringstream in("cat 1 2\ncat 3 4\n");
  CHECK_THROWS_WITH_AS(load_embeddings(in), doctest::Contains("duplicate"), DataError);
}

TEST_CASE("load rejects non-numeric fields, empty streams, CR bytes") {
  std::istringstream bad_field("cat 1 two\n");
  CHECK_THROWS_AS(load_embeddings(bad_field), DataError);
  std::istringstream empty("");
  CHECK_THROWS_AS(load_embeddings(empty), DataError);
  std::istringstream crlf("cat 1 2\r\n");
  CHECK_THROWS_WITH_AS(load_embeddings(crlf), doctest::Contains("CR"), DataError);
}

TEST_CASE("load accepts a final line without trailing newline") {
  std::istringstream in("cat 1 2\ndog 3 4");
  CHECK(load_embeddings(in).size() == 2);
}

TEST_CASE("normalize scales the 3-4-5 triangle and keeps unit vectors") {
  const auto table = oracle::make_table({"a", "b"}, {{3.0, 4.0}, {1.0, 0.0}});
  const EmbeddingTable normalized = table.normalized();
  CHECK(normalized.vector_of("a")(0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(normalized.vector_of("a")(1) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(normalized.vector_of("b")(0) == 1.0);
  CHECK(normalized.vector_of("b")(1) == 0.0);
}

TEST_CASE("normalize rejects the zero vector and names the tag") {
  const auto table = oracle::make_table({"ok", "zero"}, {{1.0, 1.0}, {0.0, 0.0}});
  CHECK_THROWS_WITH_AS(table.normalized(), doctest::Contains("zero"), DataError);
}

TEST_CASE("normalize is idempotent") {
  f0t::Rng rng(7);
  std::vector<std::vector<double>> rows;
  std::vector<std::string> names;
  for (int i = 0; i < 20; ++i) {
    names.push_back("t" + std::to_string(i));
    rows.push_back({rng.normal(), rng.normal(), rng.normal(), rng.normal()});
  }
  const auto once = oracle::make_table(names, rows).normalized();
  const auto twice = once.normalized();
  CHECK((once.vectors() - twice.vectors()).lpNorm<Eigen::Infinity>() <= 1e-12);
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(once.vectors().row(static_cast<Eigen::Index>(i)).norm() ==
          doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("subset selects in requested order") {
  const auto table =
      oracle::make_table({"a", "b", "c"}, {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}});
  const EmbeddingTable sub = table.subset({"c", "a"});
  CHECK(sub.size() == 2);
  CHECK(sub.dim() == 2);
  CHECK(sub.names() == std::vector<std::string>{"c", "a"});
  CHECK(sub.vector_of("c")(0) == 1.0);
}

TEST_CASE("subset of nothing keeps the dimension") {
  const auto table = oracle::make_table({"a"}, {{1.0, 2.0, 3.0}});
  const EmbeddingTable sub = table.subset({});
  CHECK(sub.empty());
  CHECK(sub.dim() == 3);
}

TEST_CASE("subset reports every missing name") {
  const auto table = oracle::make_table({"a"}, {{1.0, 0.0}});
  CHECK_THROWS_WITH_AS(table.subset({"x", "a", "y"}), doctest::Contains("x"), DataError);
  try {
    table.subset({"x", "a", "y"});
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("y") != std::string::npos);
  }
}

TEST_CASE("subset then normalize equals normalize then subset") {
  const auto table =
      oracle::make_table({"a", "b", "c"}, {{3.0, 4.0}, {1.0, 2.0}, {-2.0, 5.0}});
  const auto route1 = table.subset({"c", "b"}).normalized();
  const auto route2 = table.normalized().subset({"c", "b"});
  CHECK(route1.vectors() == route2.vectors());
  CHECK(route1.names() == route2.names());
}

TEST_CASE("save/load round-trips 9-significant-digit values bit-for-bit") {
  std::istringstream source("cat 0.123456789 -42.4242424\ndog 1e-05 3.14159265\n");
  const EmbeddingTable table = load_embeddings(source);

  std::ostringstream serialized;
  save_embeddings(table, serialized, 9);
  std::istringstream reread(serialized.str());
  const EmbeddingTable again = load_embeddings(reread);

  REQUIRE(again.size() == table.size());
  for (Eigen::Index i = 0; i < table.vectors().rows(); ++i) {
    for (Eigen::Index j = 0; j < table.vectors().cols(); ++j) {
      CHECK(table.vectors()(i, j) == again.vectors()(i, j));
    }
  }
}

TEST_SUITE_END();
