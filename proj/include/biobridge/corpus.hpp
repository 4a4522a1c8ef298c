#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace biobridge {

// One Present Illness note with its binary emergency label.
struct PIRecord {
  std::string id;
  std::string text;
  int label = 0;  // 1 = emergency
};

struct CorpusSplit {
  std::vector<PIRecord> train;
  std::vector<PIRecord> dev;
  std::vector<PIRecord> test;
};

struct CharStats {
  std::uint64_t total = 0;
  std::uint64_t korean = 0;
  std::uint64_t english = 0;
  std::uint64_t numeric = 0;
  std::uint64_t special = 0;

  CharStats& operator+=(const CharStats& o) {
    total += o.total;
    korean += o.korean;
    english += o.english;
    numeric += o.numeric;
    special += o.special;
    return *this;
  }
};

struct SynthConfig {
  std::size_t n_records = 1000;
  double emergency_rate = 0.5;
  std::uint64_t seed = 0;
  std::string symptom_lexicon_path;
  std::string korean_phrase_path;
  double label_noise = 0.0;
  // Fraction of symptom mentions drawn from the reserved (tokenizer-unseen)
  // pool; the generator enforces a floor of 0.2.
  double reserved_fraction = 0.35;
  std::size_t reserved_pool_size = 800;
};

struct SynthReport {
  double achieved_rate = 0.0;
  double bias = 0.0;
  std::vector<std::string> warnings;
};

struct WeightedTerm {
  std::string term;
  double weight = 0.0;
};

std::vector<PIRecord> load_jsonl(const std::string& path);
void save_jsonl(const std::vector<PIRecord>& records, const std::string& path);

// Seeded shuffle then contiguous slices; floor(N*r) for dev/test, remainder
// goes to train. stratified keeps the label ratio per slice.
CorpusSplit split_corpus(const std::vector<PIRecord>& records,
                         double train_ratio, double dev_ratio,
                         double test_ratio, std::uint64_t seed,
                         bool stratified = false);

CharStats corpus_stats(const std::vector<PIRecord>& records);
CharStats char_stats(const std::string& text);

// Symptom lexicon: `term<TAB>weight` lines, weight in [-3, 3].
std::vector<WeightedTerm> load_symptom_lexicon(const std::string& path);
std::vector<std::string> load_phrase_list(const std::string& path);

// Pseudo-words with severity weights, absent from the symptom lexicon and
// from any natural text; they stand in for clinic-specific terms the
// tokenizer never saw. Deterministic in (seed, count).
std::vector<WeightedTerm> build_reserved_terms(std::uint64_t seed,
                                               std::size_t count);

std::vector<PIRecord> generate_synthetic(const SynthConfig& config,
                                         SynthReport* report = nullptr);

// The same generator with reserved terms disabled; used as tokenizer
// training text so reserved terms stay out of the learned vocabulary.
std::vector<PIRecord> generate_vocab_corpus(const SynthConfig& config);

}  // namespace biobridge
