#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>

#include "biobridge/corpus.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace biobridge;

TEST_CASE("load_jsonl reads records in file order") {
  testutil::TempDir tmp("corpus");
  testutil::write_file(tmp.file("c.jsonl"),
                       R"({"id":"a","text":"fever","label":1})"
                       "\n"
                       R"({"id":"b","text":"cough","label":0})"
                       "\n"
                       R"({"id":"c","text":"rash","label":0})"
                       "\n");
  const auto recs = load_jsonl(tmp.file("c.jsonl"));
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].id == "a");
  CHECK(recs[1].text == "cough");
  CHECK(recs[2].label == 0);
}

TEST_CASE("load_jsonl rejects bad labels with the line number") {
  testutil::TempDir tmp("corpus");
  testutil::write_file(tmp.file("c.jsonl"),
                       R"({"id":"a","text":"fever","label":2})"
                       "\n");
  CHECK_THROWS_WITH_AS(load_jsonl(tmp.file("c.jsonl")),
                       "label out of range at line 1", std::runtime_error);
}

TEST_CASE("load_jsonl rejects duplicates, malformed lines, empty text") {
  testutil::TempDir tmp("corpus");
  testutil::write_file(tmp.file("dup.jsonl"),
                       R"({"id":"a","text":"x","label":0})"
                       "\n"
                       R"({"id":"a","text":"y","label":1})"
                       "\n");
  CHECK_THROWS_AS(load_jsonl(tmp.file("dup.jsonl")), std::runtime_error);

  testutil::write_file(tmp.file("bad.jsonl"), "{not json\n");
  CHECK_THROWS_AS(load_jsonl(tmp.file("bad.jsonl")), std::runtime_error);

  testutil::write_file(tmp.file("empty_text.jsonl"),
                       R"({"id":"a","text":"","label":0})"
                       "\n");
  CHECK_THROWS_AS(load_jsonl(tmp.file("empty_text.jsonl")),
                  std::runtime_error);

  testutil::write_file(tmp.file("none.jsonl"), "");
  CHECK(load_jsonl(tmp.file("none.jsonl")).empty());
}

TEST_CASE("save/load round-trip is identity") {
  testutil::TempDir tmp("corpus");
  std::vector<PIRecord> recs = {{"a", "열 fever 있음", 1}, {"b", "cough", 0}};
  save_jsonl(recs, tmp.file("c.jsonl"));
  const auto loaded = load_jsonl(tmp.file("c.jsonl"));
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].text == recs[0].text);
  CHECK(loaded[1].label == 0);
}

namespace {

std::vector<PIRecord> make_records(std::size_t n) {
  std::vector<PIRecord> recs;
  for (std::size_t i = 0; i < n; ++i)
    recs.push_back({"r" + std::to_string(i), "text " + std::to_string(i),
                    static_cast<int>(i % 3 == 0)});
  return recs;
}

}  // namespace

TEST_CASE("split sizes follow floor-with-remainder-to-train") {
  const auto recs = make_records(10);
  const auto split = split_corpus(recs, 0.64, 0.16, 0.20, 42);
  CHECK(split.train.size() == 7);  // floor gives 6/1/2, remainder to train
  CHECK(split.dev.size() == 1);
  CHECK(split.test.size() == 2);
}

TEST_CASE("paper-scale split sizes") {
  const auto recs = make_records(87759);
  const auto split = split_corpus(recs, 0.64, 0.16, 0.20, 7);
  CHECK(split.dev.size() == 14041);   // floor(87759*0.16)
  CHECK(split.test.size() == 17551);  // floor(87759*0.20)
  CHECK(split.train.size() == 87759 - 14041 - 17551);
  CHECK(split.train.size() >= 56165 - 1);
  CHECK(split.train.size() <= 56165 + 2);
}

TEST_CASE("split is a deterministic partition") {
  const auto recs = make_records(101);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto a = split_corpus(recs, 0.64, 0.16, 0.20, seed);
    const auto b = split_corpus(recs, 0.64, 0.16, 0.20, seed);
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i)
      REQUIRE(a.train[i].id == b.train[i].id);
    for (std::size_t i = 0; i < a.dev.size(); ++i)
      REQUIRE(a.dev[i].id == b.dev[i].id);
    for (std::size_t i = 0; i < a.test.size(); ++i)
      REQUIRE(a.test[i].id == b.test[i].id);

    std::set<std::string> ids;
    for (const auto& r : a.train) ids.insert(r.id);
    for (const auto& r : a.dev) ids.insert(r.id);
    for (const auto& r : a.test) ids.insert(r.id);
    REQUIRE(ids.size() == recs.size());
  }
}

TEST_CASE("split rejects bad inputs") {
  const auto recs = make_records(10);
  CHECK_THROWS_AS(split_corpus(recs, 0.5, 0.2, 0.2, 0), std::invalid_argument);
  CHECK_THROWS_AS(split_corpus(make_records(2), 0.64, 0.16, 0.20, 0),
                  std::invalid_argument);
}

TEST_CASE("char stats count classes by codepoint") {
  const auto s = char_stats("BT 39.2!");
  CHECK(s.english == 2);
  CHECK(s.numeric == 3);
  CHECK(s.special == 2);
  CHECK(s.total == 8);

  const auto empty = char_stats("");
  CHECK(empty.total == 0);

  const auto kor = char_stats("가나다");
  CHECK(kor.korean == 3);
  CHECK(kor.english == 0);
  CHECK(kor.total == 3);
}

TEST_CASE("corpus stats are additive") {
  const auto recs = make_records(20);
  std::vector<PIRecord> a(recs.begin(), recs.begin() + 7);
  std::vector<PIRecord> b(recs.begin() + 7, recs.end());
  auto sa = corpus_stats(a);
  const auto sb = corpus_stats(b);
  const auto all = corpus_stats(recs);
  sa += sb;
  CHECK(sa.total == all.total);
  CHECK(sa.korean == all.korean);
  CHECK(sa.english == all.english);
  CHECK(sa.numeric == all.numeric);
  CHECK(sa.special == all.special);
}

namespace {

SynthConfig synth_config(std::uint64_t seed, std::size_t n) {
  SynthConfig cfg;
  cfg.n_records = n;
  cfg.emergency_rate = 0.5;
  cfg.seed = seed;
  cfg.symptom_lexicon_path = testutil::data_dir() + "/symptoms.tsv";
  cfg.korean_phrase_path = testutil::data_dir() + "/korean_phrases.txt";
  cfg.label_noise = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("synthetic generator hits the target rate and is deterministic") {
  const auto cfg = synth_config(7, 1000);
  const auto recs = generate_synthetic(cfg);
  REQUIRE(recs.size() == 1000);
  double mean = 0.0;
  for (const auto& r : recs) mean += r.label;
  mean /= 1000.0;
  CHECK(mean > 0.4);
  CHECK(mean < 0.6);

  const auto again = generate_synthetic(cfg);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    REQUIRE(recs[i].text == again[i].text);
    REQUIRE(recs[i].label == again[i].label);
  }
}

TEST_CASE("generator label frequency converges to the generative mean") {
  auto cfg = synth_config(11, 10000);
  SynthReport report;
  const auto recs = generate_synthetic(cfg, &report);
  double mean = 0.0;
  for (const auto& r : recs) mean += r.label;
  mean /= static_cast<double>(recs.size());
  CHECK(std::abs(mean - report.achieved_rate) < 0.02);
}

TEST_CASE("reserved terms appear in text but not in the vocab corpus") {
  auto cfg = synth_config(3, 400);
  const auto recs = generate_synthetic(cfg);
  const auto plain = generate_vocab_corpus(cfg);
  const auto reserved = build_reserved_terms(cfg.seed, cfg.reserved_pool_size);

  std::size_t hits = 0;
  for (const auto& r : recs)
    for (const auto& t : reserved)
      if (r.text.find(t.term) != std::string::npos) ++hits;
  CHECK(hits > 50);

  for (const auto& r : plain)
    for (const auto& t : reserved)
      CHECK(r.text.find(t.term) == std::string::npos);
}

TEST_CASE("generator validates config ranges") {
  auto cfg = synth_config(1, 10);
  cfg.emergency_rate = 1.5;
  CHECK_THROWS_AS(generate_synthetic(cfg), std::invalid_argument);
  cfg = synth_config(1, 10);
  cfg.label_noise = 0.7;
  CHECK_THROWS_AS(generate_synthetic(cfg), std::invalid_argument);
  cfg = synth_config(1, 10);
  cfg.symptom_lexicon_path = "/nonexistent.tsv";
  CHECK_THROWS_AS(generate_synthetic(cfg), std::runtime_error);
}
