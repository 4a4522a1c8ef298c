#include "biobridge/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "biobridge/charclass.hpp"
#include "biobridge/utf8.hpp"
#include "json.hpp"

namespace biobridge {

namespace {

using json = nlohmann::json;

// Portable draws; std distributions vary across standard libraries.
double rnd01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t rnd_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::vector<PIRecord> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<PIRecord> records;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("malformed JSON at line " +
                               std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("id") || !j.contains("text") || !j.contains("label"))
      throw std::runtime_error("missing field at line " +
                               std::to_string(line_no));
    PIRecord rec;
    rec.id = j.at("id").get<std::string>();
    rec.text = j.at("text").get<std::string>();
    if (!j.at("label").is_number_integer())
      throw std::runtime_error("label not an integer at line " +
                               std::to_string(line_no));
    rec.label = j.at("label").get<int>();
    if (rec.label != 0 && rec.label != 1)
      throw std::runtime_error("label out of range at line " +
                               std::to_string(line_no));
    if (rec.text.empty())
      throw std::runtime_error("empty text at line " + std::to_string(line_no));
    if (!seen_ids.insert(rec.id).second)
      throw std::runtime_error("duplicate id '" + rec.id + "' at line " +
                               std::to_string(line_no));
    records.push_back(std::move(rec));
  }
  return records;
}

void save_jsonl(const std::vector<PIRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  for (const auto& rec : records) {
    json j;
    j["id"] = rec.id;
    j["text"] = rec.text;
    j["label"] = rec.label;
    out << j.dump() << "\n";
  }
}

CorpusSplit split_corpus(const std::vector<PIRecord>& records,
                         double train_ratio, double dev_ratio,
                         double test_ratio, std::uint64_t seed,
                         bool stratified) {
  if (train_ratio <= 0 || dev_ratio <= 0 || test_ratio <= 0)
    throw std::invalid_argument("split ratios must be positive");
  if (std::abs(train_ratio + dev_ratio + test_ratio - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must sum to 1");
  if (records.size() < 3)
    throw std::invalid_argument("need at least 3 records to split");

  auto slice = [&](std::vector<PIRecord> pool, CorpusSplit& out) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = pool.size(); i > 1; --i)
      std::swap(pool[i - 1], pool[rnd_index(rng, i)]);
    const std::size_t n = pool.size();
    const auto n_dev = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * dev_ratio));
    const auto n_test = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * test_ratio));
    const std::size_t n_train = n - n_dev - n_test;  // remainder to train
    out.train.insert(out.train.end(), pool.begin(), pool.begin() + n_train);
    out.dev.insert(out.dev.end(), pool.begin() + n_train,
                   pool.begin() + n_train + n_dev);
    out.test.insert(out.test.end(), pool.begin() + n_train + n_dev,
                    pool.end());
  };

  CorpusSplit split;
  if (!stratified) {
    slice(records, split);
  } else {
    std::vector<PIRecord> neg, pos;
    for (const auto& r : records) (r.label ? pos : neg).push_back(r);
    slice(neg, split);
    slice(pos, split);
  }
  return split;
}

CharStats char_stats(const std::string& text) {
  CharStats s;
  for (char32_t cp : utf8::decode(text)) {
    ++s.total;
    switch (classify(cp)) {
      case CharClass::KOR: ++s.korean; break;
      case CharClass::ENG: ++s.english; break;
      case CharClass::NUM: ++s.numeric; break;
      case CharClass::SPECIAL: ++s.special; break;
      case CharClass::SPACE: break;
    }
  }
  return s;
}

CharStats corpus_stats(const std::vector<PIRecord>& records) {
  CharStats s;
  for (const auto& r : records) s += char_stats(r.text);
  return s;
}

std::vector<WeightedTerm> load_symptom_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open symptom lexicon: " + path);
  std::vector<WeightedTerm> terms;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("symptom lexicon line " +
                               std::to_string(line_no) + ": expected TAB");
    WeightedTerm t;
    t.term = line.substr(0, tab);
    t.weight = std::stod(line.substr(tab + 1));
    if (t.weight < -3.0 || t.weight > 3.0)
      throw std::runtime_error("symptom weight out of [-3,3] at line " +
                               std::to_string(line_no));
    terms.push_back(std::move(t));
  }
  if (terms.empty()) throw std::runtime_error("symptom lexicon is empty");
  return terms;
}

std::vector<std::string> load_phrase_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open phrase list: " + path);
  std::vector<std::string> phrases;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) phrases.push_back(line);
  if (phrases.empty()) throw std::runtime_error("phrase list is empty");
  return phrases;
}

std::vector<WeightedTerm> build_reserved_terms(std::uint64_t seed,
                                               std::size_t count) {
  static const char* kSyllables[] = {
      "zor", "vax", "qin", "plo", "dex", "mur",  "tev", "blix", "gorn",
      "xel", "fra", "nuv", "kip", "sarn", "tiq", "wob", "juv",  "hax",
      "cyl", "drom", "fex", "glin", "prux", "stav"};
  constexpr std::size_t kNumSyllables = std::size(kSyllables);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::set<std::string> used;
  std::vector<WeightedTerm> terms;
  terms.reserve(count);
  while (terms.size() < count) {
    const std::size_t parts = 3 + rnd_index(rng, 2);
    std::string word;
    for (std::size_t p = 0; p < parts; ++p)
      word += kSyllables[rnd_index(rng, kNumSyllables)];
    if (!used.insert(word).second) continue;
    WeightedTerm t;
    t.term = std::move(word);
    const double magnitude = 1.5 + 1.5 * rnd01(rng);
    t.weight = (terms.size() % 2 == 0) ? magnitude : -magnitude;
    terms.push_back(std::move(t));
  }
  return terms;
}

namespace {

struct DraftRecord {
  std::string text;
  double weight_sum = 0.0;
};

std::vector<PIRecord> generate_impl(const SynthConfig& config,
                                    SynthReport* report,
                                    bool allow_reserved) {
  if (config.emergency_rate <= 0.0 || config.emergency_rate >= 1.0)
    throw std::invalid_argument("emergency_rate must lie in (0,1)");
  if (config.label_noise < 0.0 || config.label_noise >= 0.5)
    throw std::invalid_argument("label_noise must lie in [0,0.5)");

  const auto symptoms = load_symptom_lexicon(config.symptom_lexicon_path);
  const auto phrases = load_phrase_list(config.korean_phrase_path);
  const auto reserved =
      build_reserved_terms(config.seed, config.reserved_pool_size);
  const double reserved_frac =
      allow_reserved ? std::max(0.2, config.reserved_fraction) : 0.0;

  // Symbol surfaces mirroring data/abbreviations.tsv; kept raw so the
  // preprocessing stage has real work to do.
  static const char* kSymbols[] = {"C/S/R", "N/V", "BT", "HR", "RR", "SpO2"};

  std::mt19937_64 rng(config.seed);
  std::vector<DraftRecord> drafts;
  drafts.reserve(config.n_records);

  for (std::size_t i = 0; i < config.n_records; ++i) {
    DraftRecord d;
    std::vector<std::string> parts;
    parts.push_back(phrases[rnd_index(rng, phrases.size())]);

    const std::size_t n_sym = 1 + rnd_index(rng, 3);
    for (std::size_t k = 0; k < n_sym; ++k) {
      const WeightedTerm* term;
      if (rnd01(rng) < reserved_frac)
        term = &reserved[rnd_index(rng, reserved.size())];
      else
        term = &symptoms[rnd_index(rng, symptoms.size())];
      d.weight_sum += term->weight;
      // Sometimes glue the Korean connective straight onto the English
      // term, as the raw notes do.
      if (rnd01(rng) < 0.35)
        parts.push_back(term->term + phrases[rnd_index(rng, phrases.size())]);
      else
        parts.push_back(term->term);
      if (rnd01(rng) < 0.4)
        parts.push_back(phrases[rnd_index(rng, phrases.size())]);
    }

    if (rnd01(rng) < 0.4) {
      const int whole = 36 + static_cast<int>(rnd_index(rng, 5));
      const int frac = static_cast<int>(rnd_index(rng, 10));
      std::string vital = "BT";
      if (rnd01(rng) < 0.5) vital += " ";
      vital += std::to_string(whole) + "." + std::to_string(frac);
      parts.push_back(vital);
    }
    if (rnd01(rng) < 0.3)
      parts.push_back(kSymbols[rnd_index(rng, std::size(kSymbols))]);
    if (rnd01(rng) < 0.3)
      parts.push_back(std::to_string(1 + rnd_index(rng, 7)) + "일전부터");
    parts.push_back(rnd01(rng) < 0.5 ? "있음" : "호소함");
    if (rnd01(rng) < 0.5) parts.push_back(".");

    std::string text;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      if (p > 0 && !(rnd01(rng) < 0.1)) text += " ";
      text += parts[p];
    }
    d.text = std::move(text);
    drafts.push_back(std::move(d));
  }

  // Pick the bias so the mean generative probability hits emergency_rate.
  double lo = -20.0, hi = 20.0, bias = 0.0;
  for (int it = 0; it < 200; ++it) {
    bias = 0.5 * (lo + hi);
    double mean = 0.0;
    for (const auto& d : drafts) mean += sigmoid(d.weight_sum + bias);
    mean /= static_cast<double>(drafts.size());
    if (mean < config.emergency_rate)
      lo = bias;
    else
      hi = bias;
  }
  double achieved = 0.0;
  for (const auto& d : drafts) achieved += sigmoid(d.weight_sum + bias);
  achieved /= static_cast<double>(drafts.size());

  if (report) {
    report->bias = bias;
    report->achieved_rate = achieved;
    if (std::abs(achieved - config.emergency_rate) > 0.02)
      report->warnings.push_back(
          "emergency_rate " + std::to_string(config.emergency_rate) +
          " unreachable with current symptom weights; achieved " +
          std::to_string(achieved));
  }

  std::mt19937_64 label_rng(config.seed + 1);
  std::vector<PIRecord> records;
  records.reserve(drafts.size());
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    PIRecord rec;
    rec.id = "synth-" + std::to_string(config.seed) + "-" + std::to_string(i);
    rec.text = std::move(drafts[i].text);
    const double p = sigmoid(drafts[i].weight_sum + bias);
    rec.label = rnd01(label_rng) < p ? 1 : 0;
    if (config.label_noise > 0.0 && rnd01(label_rng) < config.label_noise)
      rec.label = 1 - rec.label;
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

std::vector<PIRecord> generate_synthetic(const SynthConfig& config,
                                         SynthReport* report) {
  return generate_impl(config, report, /*allow_reserved=*/true);
}

std::vector<PIRecord> generate_vocab_corpus(const SynthConfig& config) {
  return generate_impl(config, nullptr, /*allow_reserved=*/false);
}

}  // namespace biobridge
