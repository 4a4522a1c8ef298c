#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "biobridge/bioembed.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace biobridge;

namespace {

std::string small_table_text() {
  return "2 4\n"
         "fever 0.5 -0.25 1 2\n"
         "cough -1 0 0.125 3.5\n";
}

BridgedInput make_seq(const std::vector<std::tuple<std::string, Lang, int>>& toks) {
  BridgedInput tok;
  tok.ids.push_back(2);
  tok.tokens.push_back("[CLS]");
  tok.lang.push_back(Lang::CLS);
  tok.word_id.push_back(-1);
  tok.attn_mask.push_back(1);
  int id = 10;
  for (const auto& [surface, lang, wid] : toks) {
    tok.ids.push_back(id++);
    tok.tokens.push_back(surface);
    tok.lang.push_back(lang);
    tok.word_id.push_back(wid);
    tok.attn_mask.push_back(1);
  }
  tok.ids.push_back(3);
  tok.tokens.push_back("[SEP]");
  tok.lang.push_back(Lang::SEP);
  tok.word_id.push_back(-1);
  tok.attn_mask.push_back(1);
  return tok;
}

}  // namespace

TEST_CASE("embedding table parses header and rows") {
  testutil::TempDir tmp("embed");
  testutil::write_file(tmp.file("t.txt"), small_table_text());
  const auto table = EmbeddingTable::load(tmp.file("t.txt"));
  CHECK(table.word_count() == 2);
  CHECK(table.dim() == 4);
  REQUIRE(table.lookup("fever") != nullptr);
  CHECK((*table.lookup("fever"))[0] == 0.5);
}

TEST_CASE("embedding table load errors carry line numbers") {
  testutil::TempDir tmp("embed");
  testutil::write_file(tmp.file("short.txt"), "1 4\nfever 0.5 1 2\n");
  CHECK_THROWS_WITH_AS(EmbeddingTable::load(tmp.file("short.txt")),
                       "embedding table line 2: expected 4 values",
                       std::runtime_error);
  testutil::write_file(tmp.file("dup.txt"),
                       "2 2\nfever 1 2\nFEVER 3 4\n");
  CHECK_THROWS_AS(EmbeddingTable::load(tmp.file("dup.txt")),
                  std::runtime_error);
}

TEST_CASE("lookups are case-folded") {
  testutil::TempDir tmp("embed");
  testutil::write_file(tmp.file("t.txt"), small_table_text());
  const auto table = EmbeddingTable::load(tmp.file("t.txt"));
  REQUIRE(table.lookup("Vomiting") == nullptr);
  REQUIRE(table.lookup("Fever") != nullptr);
  CHECK(*table.lookup("FEVER") == *table.lookup("fever"));
}

TEST_CASE("save/load round-trip is byte-exact") {
  testutil::TempDir tmp("embed");
  const auto terms = build_reserved_terms(5, 20);
  const auto table = EmbeddingTable::build_synthetic(terms, 8, 5);
  table.save(tmp.file("a.txt"));
  const auto loaded = EmbeddingTable::load(tmp.file("a.txt"));
  loaded.save(tmp.file("b.txt"));
  CHECK(testutil::read_file(tmp.file("a.txt")) ==
        testutil::read_file(tmp.file("b.txt")));
}

TEST_CASE("word reconstruction joins subword pieces") {
  const auto tok = make_seq({{"vomit", Lang::ENG, 0}, {"##ing", Lang::ENG, 0}});
  const auto spans = reconstruct_words(tok);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].word == "vomiting");
  CHECK(spans[0].token_start == 1);
  CHECK(spans[0].token_end == 3);

  const auto single = reconstruct_words(make_seq({{"cough", Lang::ENG, 0}}));
  REQUIRE(single.size() == 1);
  CHECK(single[0].word == "cough");

  const auto none = reconstruct_words(make_seq({{"가", Lang::KOR, 0}}));
  CHECK(none.empty());
}

TEST_CASE("feature extraction zeroes OOV rows") {
  testutil::TempDir tmp("embed");
  testutil::write_file(tmp.file("t.txt"), small_table_text());
  const auto table = EmbeddingTable::load(tmp.file("t.txt"));

  std::vector<EnglishWordSpan> spans = {{"fever", 1, 2}, {"qqqxyz", 2, 3}};
  const auto raw = extract_bio_features(spans, table);
  CHECK(raw.hits == std::vector<int>{1, 0});
  CHECK(raw.rows.row(0)[3] == 2.0);
  CHECK(raw.rows.row(1).isZero());

  const auto empty = extract_bio_features({}, table);
  CHECK(empty.rows.rows() == 0);
  CHECK(empty.rows.cols() == 4);
}

TEST_CASE("mapper applies affine map and masks OOV rows") {
  LinearMapper mapper;
  mapper.weight = Mat::Identity(4, 4);
  mapper.bias = Vec::Zero(4);

  RawBioFeatures raw;
  raw.rows = Mat::Random(3, 4);
  raw.hits = {1, 1, 1};
  CHECK((map_features(raw, mapper) - raw.rows).norm() == 0.0);

  mapper.bias = Vec::Ones(4);
  raw.hits = {1, 0, 1};
  const Mat mapped = map_features(raw, mapper);
  CHECK(mapped.row(1).isZero());
  CHECK(!mapped.row(0).isZero());

  // hand-computed single row
  LinearMapper m2;
  m2.weight.resize(2, 3);
  m2.weight << 1, 2, 3, 4, 5, 6;
  m2.bias.resize(3);
  m2.bias << 0.5, -0.5, 0.25;
  RawBioFeatures r2;
  r2.rows.resize(1, 2);
  r2.rows << 2, -1;
  r2.hits = {1};
  const Mat out = map_features(r2, m2);
  CHECK(std::abs(out(0, 0) - (2 * 1 + -1 * 4 + 0.5)) < 1e-12);
  CHECK(std::abs(out(0, 1) - (2 * 2 + -1 * 5 - 0.5)) < 1e-12);
  CHECK(std::abs(out(0, 2) - (2 * 3 + -1 * 6 + 0.25)) < 1e-12);

  RawBioFeatures bad;
  bad.rows = Mat::Zero(1, 3);
  bad.hits = {1};
  CHECK_THROWS_AS(map_features(bad, m2), std::invalid_argument);
}

TEST_CASE("fuse adds span rows to covered positions only") {
  const Mat base = Mat::Random(8, 4);
  Mat mapped(1, 4);
  mapped << 1, 2, 3, 4;
  std::vector<EnglishWordSpan> spans = {{"w", 4, 6}};
  std::vector<int> mask;
  const Mat out = fuse(base, mapped, spans, &mask);
  for (Eigen::Index r = 0; r < 8; ++r) {
    if (r == 4 || r == 5) {
      CHECK((out.row(r) - base.row(r) - mapped.row(0)).norm() == 0.0);
      CHECK(mask[static_cast<std::size_t>(r)] == 1);
    } else {
      CHECK(out.row(r) == base.row(r));
      CHECK(mask[static_cast<std::size_t>(r)] == 0);
    }
  }

  const Mat zero_out = fuse(base, Mat::Zero(1, 4), spans, nullptr);
  CHECK((zero_out - base).norm() == 0.0);

  std::vector<EnglishWordSpan> overlap = {{"a", 2, 4}, {"b", 3, 5}};
  CHECK_THROWS_AS(fuse(base, Mat::Zero(2, 4), overlap, nullptr),
                  std::invalid_argument);
}

TEST_CASE("disjoint spans fuse order-independently") {
  std::mt19937_64 rng(8);
  const Mat base = Mat::Random(10, 4);
  Mat mapped = Mat::Random(2, 4);
  std::vector<EnglishWordSpan> ab = {{"a", 1, 3}, {"b", 6, 9}};
  std::vector<EnglishWordSpan> ba = {{"b", 6, 9}, {"a", 1, 3}};
  Mat swapped(2, 4);
  swapped.row(0) = mapped.row(1);
  swapped.row(1) = mapped.row(0);
  CHECK((fuse(base, mapped, ab, nullptr) - fuse(base, swapped, ba, nullptr))
            .norm() == 0.0);
}

TEST_CASE("fusion locality over random instances") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t len = 4 + rng() % 20;
    const Mat base = Mat::Random(static_cast<Eigen::Index>(len), 4);
    std::vector<EnglishWordSpan> spans;
    std::size_t pos = 1;
    while (pos + 1 < len - 1 && rng() % 2) {
      const std::size_t span_len = 1 + rng() % 2;
      const std::size_t end = std::min(pos + span_len, len - 1);
      spans.push_back({"w", pos, end});
      pos = end + 1 + rng() % 2;
    }
    const Mat mapped = Mat::Random(static_cast<Eigen::Index>(spans.size()), 4);
    std::vector<int> mask;
    const Mat out = fuse(base, mapped, spans, &mask);
    for (std::size_t r = 0; r < len; ++r)
      if (!mask[r])
        REQUIRE(out.row(static_cast<Eigen::Index>(r)) ==
                base.row(static_cast<Eigen::Index>(r)));
  }
}
