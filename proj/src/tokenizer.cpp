#include "biobridge/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "biobridge/charclass.hpp"
#include "biobridge/utf8.hpp"

namespace biobridge {

namespace {

const char* kSpecialSurfaces[Vocab::kNumSpecials] = {"[PAD]", "[UNK]", "[CLS]",
                                                     "[SEP]", "[B-K]", "[B-E]"};

std::vector<std::string> whitespace_split(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (in >> w) words.push_back(std::move(w));
  return words;
}

std::string strip_continuation(const std::string& piece) {
  if (piece.size() > 2 && piece[0] == '#' && piece[1] == '#')
    return piece.substr(2);
  return piece;
}

// Dominant KOR/ENG class of a surface; SEG/CLS/... callers handle specials.
bool dominant_class(const std::string& surface, Lang* out) {
  std::size_t kor = 0, eng = 0;
  for (char32_t cp : utf8::decode(strip_continuation(surface))) {
    const CharClass c = classify(cp);
    if (c == CharClass::KOR) ++kor;
    if (c == CharClass::ENG) ++eng;
  }
  if (kor == 0 && eng == 0) return false;
  *out = kor >= eng ? Lang::KOR : Lang::ENG;
  if (kor == eng) {
    for (char32_t cp : utf8::decode(strip_continuation(surface))) {
      const CharClass c = classify(cp);
      if (c == CharClass::KOR) { *out = Lang::KOR; break; }
      if (c == CharClass::ENG) { *out = Lang::ENG; break; }
    }
  }
  return true;
}

}  // namespace

void Vocab::index() {
  ids_.clear();
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    ids_.emplace(tokens_[i], static_cast<int>(i));
  if (ids_.size() != tokens_.size())
    throw std::runtime_error("vocab contains duplicate tokens");
}

int Vocab::piece_id(const std::string& piece) const {
  const auto it = ids_.find(piece);
  if (it == ids_.end()) return -1;
  return it->second < kNumSpecials ? -1 : it->second;
}

Vocab Vocab::train(const std::vector<PIRecord>& corpus, std::size_t vocab_size,
                   std::uint64_t seed) {
  (void)seed;  // training is frequency-driven and already deterministic
  if (corpus.empty()) throw std::invalid_argument("vocab corpus is empty");

  // Word counts over whitespace-split text.
  std::map<std::string, std::size_t> word_counts;
  for (const auto& rec : corpus)
    for (auto& w : whitespace_split(rec.text)) ++word_counts[w];

  // Each word starts as one symbol per codepoint, continuations ##-prefixed.
  struct Word {
    std::vector<std::string> symbols;
    std::size_t count;
  };
  std::vector<Word> words;
  std::map<std::string, std::size_t> base_symbols;
  for (const auto& [w, c] : word_counts) {
    Word word;
    word.count = c;
    const auto cps = utf8::decode(w);
    for (std::size_t i = 0; i < cps.size(); ++i) {
      std::string sym = i == 0 ? "" : "##";
      utf8::append(cps[i], sym);
      ++base_symbols[sym];
      word.symbols.push_back(std::move(sym));
    }
    words.push_back(std::move(word));
  }

  Vocab v;
  for (const char* s : kSpecialSurfaces) v.tokens_.emplace_back(s);
  for (const auto& [sym, cnt] : base_symbols) v.tokens_.push_back(sym);
  if (vocab_size < v.tokens_.size())
    throw std::invalid_argument(
        "vocab_size too small: need at least " +
        std::to_string(v.tokens_.size()) +
        " for specials plus distinct codepoints");

  std::map<std::string, int> known;
  for (const auto& t : v.tokens_) known.emplace(t, 1);

  while (v.tokens_.size() < vocab_size) {
    std::map<std::pair<std::string, std::string>, std::size_t> pair_counts;
    for (const auto& word : words)
      for (std::size_t i = 0; i + 1 < word.symbols.size(); ++i)
        pair_counts[{word.symbols[i], word.symbols[i + 1]}] += word.count;
    if (pair_counts.empty()) break;

    // Highest count wins; the std::map order breaks ties lexicographically.
    auto best = pair_counts.begin();
    for (auto it = pair_counts.begin(); it != pair_counts.end(); ++it)
      if (it->second > best->second) best = it;

    const auto& [left, right] = best->first;
    const std::string merged = left + strip_continuation(right);
    for (auto& word : words) {
      std::vector<std::string> out;
      out.reserve(word.symbols.size());
      for (std::size_t i = 0; i < word.symbols.size(); ++i) {
        if (i + 1 < word.symbols.size() && word.symbols[i] == left &&
            word.symbols[i + 1] == right) {
          out.push_back(merged);
          ++i;
        } else {
          out.push_back(word.symbols[i]);
        }
      }
      word.symbols = std::move(out);
    }
    if (known.emplace(merged, 1).second) v.tokens_.push_back(merged);
  }
  v.index();
  return v;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocab file: " + path);
  for (const auto& t : tokens_) out << t << "\n";
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocab file: " + path);
  Vocab v;
  std::string line;
  while (std::getline(in, line)) v.tokens_.push_back(line);
  if (v.tokens_.size() < kNumSpecials)
    throw std::runtime_error("vocab file too short: " + path);
  for (int i = 0; i < kNumSpecials; ++i)
    if (v.tokens_[i] != kSpecialSurfaces[i])
      throw std::runtime_error("vocab file missing special token " +
                               std::string(kSpecialSurfaces[i]));
  v.index();
  return v;
}

TokenizedInput tokenize(const std::string& text, const Vocab& vocab) {
  TokenizedInput out;
  auto push = [&out](int id, std::string surface, Lang lang, int word_id,
                     int mask) {
    out.ids.push_back(id);
    out.tokens.push_back(std::move(surface));
    out.lang.push_back(lang);
    out.word_id.push_back(word_id);
    out.attn_mask.push_back(mask);
  };

  push(Vocab::kCls, "[CLS]", Lang::CLS, -1, 1);

  const auto words = whitespace_split(text);
  for (std::size_t wi = 0; wi < words.size(); ++wi) {
    const auto cps = utf8::decode(words[wi]);
    std::vector<std::string> pieces;
    bool bad = false;
    std::size_t start = 0;
    while (start < cps.size()) {
      std::size_t end = cps.size();
      std::string found;
      while (start < end) {
        std::string piece = start > 0 ? "##" : "";
        for (std::size_t k = start; k < end; ++k) utf8::append(cps[k], piece);
        if (vocab.piece_id(piece) >= 0) {
          found = std::move(piece);
          break;
        }
        --end;
      }
      if (found.empty()) {
        bad = true;
        break;
      }
      pieces.push_back(std::move(found));
      start = end;
    }

    Lang word_lang = Lang::PAD;
    dominant_class(words[wi], &word_lang);

    if (bad) {
      push(Vocab::kUnk, "[UNK]", word_lang, static_cast<int>(wi), 1);
      continue;
    }
    for (auto& piece : pieces) {
      Lang piece_lang = Lang::PAD;
      if (!dominant_class(piece, &piece_lang)) piece_lang = word_lang;
      const int pid = vocab.piece_id(piece);
      push(pid, piece, piece_lang, static_cast<int>(wi), 1);
    }
  }

  push(Vocab::kSep, "[SEP]", Lang::SEP, -1, 1);

  // NUM/SPECIAL-only tokens inherit the preceding KOR/ENG modality;
  // a leading run inherits the following one; all-unresolved falls to ENG.
  Lang prev = Lang::PAD;
  for (std::size_t i = 1; i + 1 < out.size(); ++i) {
    if (out.lang[i] == Lang::KOR || out.lang[i] == Lang::ENG)
      prev = out.lang[i];
    else if (prev != Lang::PAD)
      out.lang[i] = prev;
  }
  Lang next = Lang::PAD;
  for (std::size_t i = out.size(); i-- > 1;) {
    if (i == out.size() - 1) continue;  // [SEP]
    if (out.lang[i] == Lang::KOR || out.lang[i] == Lang::ENG)
      next = out.lang[i];
    else if (next != Lang::PAD)
      out.lang[i] = next;
    else
      out.lang[i] = Lang::ENG;
  }
  return out;
}

BridgedInput as_bridged(const TokenizedInput& tok) {
  BridgedInput out;
  static_cast<TokenizedInput&>(out) = tok;
  out.segment_count = 0;
  return out;
}

BridgedInput insert_bridging_tokens(const TokenizedInput& tok) {
  BridgedInput out;
  out.segment_count = 0;
  auto push = [&out](int id, std::string surface, Lang lang, int word_id,
                     int mask) {
    out.ids.push_back(id);
    out.tokens.push_back(std::move(surface));
    out.lang.push_back(lang);
    out.word_id.push_back(word_id);
    out.attn_mask.push_back(mask);
  };

  Lang current = Lang::PAD;  // no modality seen yet
  for (std::size_t i = 0; i < tok.size(); ++i) {
    if (tok.lang[i] == Lang::SEG) {
      current = tok.ids[i] == Vocab::kBriKor ? Lang::KOR : Lang::ENG;
    } else if (tok.lang[i] == Lang::KOR || tok.lang[i] == Lang::ENG) {
      if (tok.lang[i] != current) {
        current = tok.lang[i];
        const bool kor = current == Lang::KOR;
        push(kor ? Vocab::kBriKor : Vocab::kBriEng, kor ? "[B-K]" : "[B-E]",
             Lang::SEG, -1, 1);
        ++out.segment_count;
      }
    }
    push(tok.ids[i], tok.tokens[i], tok.lang[i], tok.word_id[i],
         tok.attn_mask[i]);
  }
  return out;
}

BridgedInput truncate_pad(const BridgedInput& tok, std::size_t max_len) {
  if (max_len < 2) throw std::invalid_argument("max_len must be >= 2");
  BridgedInput out = tok;
  auto resize_all = [&out](std::size_t n) {
    out.ids.resize(n);
    out.tokens.resize(n);
    out.lang.resize(n);
    out.word_id.resize(n);
    out.attn_mask.resize(n);
  };

  if (out.size() > max_len) {
    resize_all(max_len - 1);
    out.ids.push_back(Vocab::kSep);
    out.tokens.push_back("[SEP]");
    out.lang.push_back(Lang::SEP);
    out.word_id.push_back(-1);
    out.attn_mask.push_back(1);
  }
  // Drop a segment token left dangling right before [SEP].
  while (out.size() >= 2 && out.lang[out.size() - 2] == Lang::SEG) {
    const std::size_t i = out.size() - 2;
    out.ids.erase(out.ids.begin() + i);
    out.tokens.erase(out.tokens.begin() + i);
    out.lang.erase(out.lang.begin() + i);
    out.word_id.erase(out.word_id.begin() + i);
    out.attn_mask.erase(out.attn_mask.begin() + i);
    --out.segment_count;
  }
  while (out.size() < max_len) {
    out.ids.push_back(Vocab::kPad);
    out.tokens.push_back("[PAD]");
    out.lang.push_back(Lang::PAD);
    out.word_id.push_back(-1);
    out.attn_mask.push_back(0);
  }
  return out;
}

std::string detokenize(const TokenizedInput& tok) {
  std::string out;
  int last_word = -1;
  for (std::size_t i = 0; i < tok.size(); ++i) {
    if (tok.word_id[i] < 0) continue;
    if (tok.word_id[i] != last_word && !out.empty()) out += " ";
    last_word = tok.word_id[i];
    out += strip_continuation(tok.tokens[i]);
  }
  return out;
}

}  // namespace biobridge
