#include <doctest.h>

#include <cstring>
#include <sstream>

#include "hyrank/embedding.hpp"
#include "hyrank/rng.hpp"

using namespace hyrank;

namespace {

EmbeddingTable from_text(const std::string& text) {
  std::istringstream in(text);
  return load_word_embeddings(in);
}

EmbeddingTable sense_from_text(const std::string& text) {
  std::istringstream in(text);
  return load_sense_embeddings(in);
}

}  // namespace

TEST_CASE("word loader parses the plain text format") {
  EmbeddingTable table = from_text("a 1.0 0.0\nb 0.0 1.0\n");
  CHECK(table.dim() == 2);
  CHECK(table.size() == 2);
  auto a = table.find("a");
  REQUIRE(a.size() == 2);
  CHECK(a[0] == 1.0);
  CHECK(a[1] == 0.0);
  auto b = table.find("b");
  CHECK(b[0] == 0.0);
  CHECK(b[1] == 1.0);
  CHECK(table.find("missing").empty());
}

TEST_CASE("word loader rejects bad input") {
  CHECK_THROWS_WITH_AS(from_text("a 1 2\nb 3\n"), doctest::Contains("line 2"), ParseError);
  CHECK_THROWS_WITH_AS(from_text(""), doctest::Contains("no embeddings"), ParseError);
  CHECK_THROWS_AS(from_text("a 1.0 oops\n"), ParseError);
  CHECK_THROWS_AS(from_text("lonely\n"), ParseError);
  std::istringstream in("a 1 2\n");
  CHECK_THROWS_AS(load_word_embeddings(in, 3), ParseError);
}

TEST_CASE("duplicate tokens: last one wins") {
  EmbeddingTable table = from_text("a 1 2\na 3 4\n");
  CHECK(table.size() == 1);
  CHECK(table.find("a")[0] == 3.0);
  CHECK(table.find("a")[1] == 4.0);
}

TEST_CASE("separators: tabs and repeated spaces") {
  EmbeddingTable table = from_text("a\t1.0\t 2.0\nb  3   4\n");
  CHECK(table.find("a")[1] == 2.0);
  CHECK(table.find("b")[0] == 3.0);
}

TEST_CASE("1000x300 file round-trips bit-exactly") {
  Rng rng(99);
  EmbeddingTable original(300);
  Vec v(300);
  for (int i = 0; i < 1000; ++i) {
    for (double& x : v) x = rng.uniform(-5.0, 5.0);
    original.insert("tok" + std::to_string(i), v);
  }
  std::ostringstream first;
  write_word_embeddings(first, original);
  std::istringstream in(first.str());
  EmbeddingTable reloaded = load_word_embeddings(in, 300);
  REQUIRE(reloaded.size() == 1000);
  for (const auto& token : original.tokens()) {
    auto a = original.find(token);
    auto b = reloaded.find(token);
    REQUIRE(b.size() == 300);
    CHECK(std::memcmp(a.data(), b.data(), 300 * sizeof(double)) == 0);
  }
  std::ostringstream second;
  write_word_embeddings(second, reloaded);
  CHECK(first.str() == second.str());
}

TEST_CASE("sense loader averages senses per base word") {
  EmbeddingTable table = sense_from_text("bank#0 1 0\nbank#1 0 1\n");
  CHECK(table.size() == 1);
  CHECK(table.find("bank")[0] == 0.5);
  CHECK(table.find("bank")[1] == 0.5);

  EmbeddingTable single = sense_from_text("cat#0 2 4\n");
  CHECK(single.find("cat")[0] == 2.0);
  CHECK(single.find("cat")[1] == 4.0);

  CHECK_THROWS_WITH_AS(sense_from_text("#1 1 2\n"), doctest::Contains("empty base word"),
                       ParseError);
}

TEST_CASE("sense mean matches a brute-force accumulation") {
  Rng rng(7);
  for (int round = 0; round < 20; ++round) {
    std::size_t k = 1 + rng.index(6);
    std::size_t dim = 1 + rng.index(8);
    std::ostringstream text;
    text.precision(17);
    std::vector<Vec> senses;
    for (std::size_t s = 0; s < k; ++s) {
      Vec v(dim);
      text << "word#" << s;
      for (double& x : v) {
        x = rng.uniform(-3.0, 3.0);
        text << ' ' << x;
      }
      text << '\n';
      senses.push_back(v);
    }
    EmbeddingTable table = sense_from_text(text.str());
    auto got = table.find("word");
    for (std::size_t d = 0; d < dim; ++d) {
      double sum = 0.0;
      for (const Vec& s : senses) sum += s[d];
      CHECK(got[d] == doctest::Approx(sum / static_cast<double>(k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("single-sense file equals the word loader on the stripped file") {
  std::string sense_text = "dog#0 1 2 3\ncat#4 4 5 6\nfish 7 8 9\n";
  std::string word_text = "dog 1 2 3\ncat 4 5 6\nfish 7 8 9\n";
  EmbeddingTable s = sense_from_text(sense_text);
  EmbeddingTable w = from_text(word_text);
  REQUIRE(s.size() == w.size());
  for (const auto& token : w.tokens()) {
    auto a = s.find(token);
    auto b = w.find(token);
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("lookup_term tokenizes, lowercases and masks OOV") {
  EmbeddingTable table = from_text("dog 1 0\nvideo 2 0\ngame 0 2\n");

  TermSequence dog = lookup_term(table, "dog");
  CHECK(dog.length() == 1);
  CHECK(dog.vectors[0][0] == 1.0);
  CHECK(dog.oov_mask[0] == 0);

  TermSequence vg = lookup_term(table, "video_game");
  REQUIRE(vg.length() == 2);
  CHECK(vg.tokens[0] == "video");
  CHECK(vg.tokens[1] == "game");

  TermSequence spaced = lookup_term(table, "Video  GAME");
  CHECK(spaced.length() == 2);
  CHECK(spaced.vectors[0][0] == 2.0);

  TermSequence partial = lookup_term(table, "dog qzx");
  REQUIRE(partial.length() == 2);
  CHECK(partial.oov_mask[0] == 0);
  CHECK(partial.oov_mask[1] == 1);
  CHECK(partial.vectors[1][0] == 0.0);
  CHECK(partial.vectors[1][1] == 0.0);

  CHECK_THROWS_WITH_AS(lookup_term(table, "qzx qzy"), doctest::Contains("unrepresentable"),
                       NumericError);
  CHECK_THROWS_AS(lookup_term(table, "   "), ParseError);
}

TEST_CASE("lookup_term is pure and dimension-consistent") {
  EmbeddingTable table = from_text("a 1 2 3\nb 4 5 6\n");
  TermSequence first = lookup_term(table, "a_b qzx");
  TermSequence second = lookup_term(table, "a_b qzx");
  REQUIRE(first.length() == second.length());
  for (std::size_t t = 0; t < first.length(); ++t) {
    CHECK(first.tokens[t] == second.tokens[t]);
    CHECK(first.vectors[t] == second.vectors[t]);
    CHECK(first.vectors[t].size() == table.dim());
  }
}
