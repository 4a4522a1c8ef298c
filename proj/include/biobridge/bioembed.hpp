#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "biobridge/corpus.hpp"
#include "biobridge/tokenizer.hpp"

namespace biobridge {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Frozen word -> vector map; lookups are case-folded. Never receives
// gradients.
class EmbeddingTable {
 public:
  static EmbeddingTable load(const std::string& path);
  void save(const std::string& path) const;

  static EmbeddingTable build_synthetic(
      const std::vector<WeightedTerm>& terms, std::size_t dim,
      std::uint64_t seed);

  std::size_t dim() const { return dim_; }
  std::size_t word_count() const { return words_.size(); }

  // nullptr when the word is absent. Counts every query.
  const Vec* lookup(const std::string& word) const;

  std::uint64_t lookup_count() const { return lookup_count_; }
  void reset_lookup_count() const { lookup_count_ = 0; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> words_;  // insertion order, for save()
  std::unordered_map<std::string, Vec> vectors_;
  mutable std::uint64_t lookup_count_ = 0;
};

struct EnglishWordSpan {
  std::string word;
  std::size_t token_start = 0;
  std::size_t token_end = 0;  // exclusive
};

struct BioFeatures {
  Mat features;           // seq_len x h_M, zero where mask is 0
  std::vector<int> mask;  // 1 where a medical feature was injected
};

struct LinearMapper {
  Mat weight;  // h_B x h_M
  Vec bias;    // h_M
};

// Groups consecutive ENG tokens sharing a word_id; strips "##".
std::vector<EnglishWordSpan> reconstruct_words(const BridgedInput& tok);

struct RawBioFeatures {
  Mat rows;               // m x h_B
  std::vector<int> hits;  // 1 when the word was found in the table
};

RawBioFeatures extract_bio_features(const std::vector<EnglishWordSpan>& spans,
                                    const EmbeddingTable& table);

// rows * W + b per row; miss rows stay exactly zero (no bias leak).
Mat map_features(const RawBioFeatures& raw, const LinearMapper& mapper);

// Adds each span's mapped row to every token position it covers.
Mat fuse(const Mat& token_embeddings, const Mat& mapped,
         const std::vector<EnglishWordSpan>& spans, std::vector<int>* mask_out);

// Full per-sequence bio pipeline: spans -> lookup -> map -> seq-shaped
// features, plus bookkeeping needed for the backward pass.
struct BioPipelineOut {
  std::vector<EnglishWordSpan> spans;
  RawBioFeatures raw;
  BioFeatures seq_features;  // mapped and broadcast to token positions
};

BioPipelineOut run_bio_pipeline(const BridgedInput& tok,
                                const EmbeddingTable& table,
                                const LinearMapper& mapper);

}  // namespace biobridge
