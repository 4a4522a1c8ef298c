#pragma once

#include <string>
#include <vector>

#include "biobridge/charclass.hpp"
#include "biobridge/corpus.hpp"

namespace biobridge {

enum class MatchMode { WordBoundary, ExactSymbol };

struct AbbrevEntry {
  std::string surface;
  std::string expansion;
  MatchMode mode = MatchMode::WordBoundary;
};

// Entries kept longest-surface-first for greedy matching.
class AbbrevLexicon {
 public:
  AbbrevLexicon() = default;
  explicit AbbrevLexicon(std::vector<AbbrevEntry> entries);

  static AbbrevLexicon load(const std::string& path);

  const std::vector<AbbrevEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<AbbrevEntry> entries_;
};

struct LanguageSpan {
  std::size_t start = 0;  // codepoint offsets, end exclusive
  std::size_t end = 0;
  CharClass cls = CharClass::SPECIAL;

  bool operator==(const LanguageSpan&) const = default;
};

// Greedy longest-match replacement, left to right, single pass; expansions
// are never re-scanned. Word-boundary entries match only when flanked by
// non-letter characters.
std::string decode_abbreviations(const std::string& text,
                                 const AbbrevLexicon& lexicon);

// Inserts one space at every KOR/ENG/NUM/SPECIAL class boundary, collapses
// whitespace runs, trims.
std::string normalize_spacing(const std::string& text);

std::vector<LanguageSpan> segment_language_spans(const std::string& text);

// decode -> normalize; id and label preserved.
PIRecord preprocess_record(const PIRecord& record, const AbbrevLexicon& lexicon);

}  // namespace biobridge
