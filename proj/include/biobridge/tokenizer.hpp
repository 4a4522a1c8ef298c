#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "biobridge/corpus.hpp"

namespace biobridge {

enum class Lang : std::uint8_t { KOR, ENG, SEG, CLS, SEP, PAD };

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kBriKor = 4;  // [B-K]
  static constexpr int kBriEng = 5;  // [B-E]
  static constexpr int kNumSpecials = 6;

  static Vocab train(const std::vector<PIRecord>& corpus,
                     std::size_t vocab_size, std::uint64_t seed);

  static Vocab load(const std::string& path);
  void save(const std::string& path) const;

  std::size_t size() const { return tokens_.size(); }
  const std::string& surface(int id) const { return tokens_.at(id); }
  // -1 when absent. Specials are never matched as subword pieces.
  int piece_id(const std::string& piece) const;

 private:
  Vocab() = default;
  void index();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct TokenizedInput {
  std::vector<int> ids;
  std::vector<std::string> tokens;  // surface forms
  std::vector<Lang> lang;
  std::vector<int> word_id;  // -1 for specials
  std::vector<int> attn_mask;

  std::size_t size() const { return ids.size(); }
};

struct BridgedInput : TokenizedInput {
  int segment_count = 0;  // s in the (n+s) accounting
};

TokenizedInput tokenize(const std::string& text, const Vocab& vocab);

// Prepends [B-K]/[B-E] before every maximal same-language run. Idempotent.
BridgedInput insert_bridging_tokens(const TokenizedInput& tok);

// Wraps without inserting segment tokens (s = 0); the bridging-off path.
BridgedInput as_bridged(const TokenizedInput& tok);

BridgedInput truncate_pad(const BridgedInput& tok, std::size_t max_len);

// Strips specials, joins subwords, restores single spaces between words.
std::string detokenize(const TokenizedInput& tok);

}  // namespace biobridge
