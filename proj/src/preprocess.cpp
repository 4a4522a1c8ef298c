#include "biobridge/preprocess.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include "biobridge/utf8.hpp"

namespace biobridge {

namespace {

bool is_letter(char32_t cp) {
  const CharClass c = classify(cp);
  return c == CharClass::KOR || c == CharClass::ENG;
}

}  // namespace

AbbrevLexicon::AbbrevLexicon(std::vector<AbbrevEntry> entries)
    : entries_(std::move(entries)) {
  std::map<std::string, std::string> seen;
  for (const auto& e : entries_) {
    if (e.surface.empty())
      throw std::invalid_argument("abbreviation lexicon: empty surface form");
    auto [it, inserted] = seen.emplace(e.surface, e.expansion);
    if (!inserted && it->second != e.expansion)
      throw std::invalid_argument("abbreviation lexicon: surface '" +
                                  e.surface + "' has conflicting expansions");
  }
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const AbbrevEntry& a, const AbbrevEntry& b) {
                     return a.surface.size() > b.surface.size();
                   });
}

AbbrevLexicon AbbrevLexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open abbreviation lexicon: " + path);
  std::vector<AbbrevEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw std::runtime_error("abbreviation lexicon line " +
                               std::to_string(line_no) +
                               ": expected surface<TAB>expansion<TAB>mode");
    AbbrevEntry e;
    e.surface = line.substr(0, t1);
    e.expansion = line.substr(t1 + 1, t2 - t1 - 1);
    const std::string mode = line.substr(t2 + 1);
    if (mode == "word")
      e.mode = MatchMode::WordBoundary;
    else if (mode == "symbol")
      e.mode = MatchMode::ExactSymbol;
    else
      throw std::runtime_error("abbreviation lexicon line " +
                               std::to_string(line_no) + ": unknown mode '" +
                               mode + "'");
    entries.push_back(std::move(e));
  }
  return AbbrevLexicon(std::move(entries));
}

std::string decode_abbreviations(const std::string& text,
                                 const AbbrevLexicon& lexicon) {
  if (lexicon.empty()) return text;
  const auto cps = utf8::decode(text);

  struct DecodedEntry {
    std::vector<char32_t> surface;
    const AbbrevEntry* entry;
  };
  std::vector<DecodedEntry> decoded;
  decoded.reserve(lexicon.size());
  for (const auto& e : lexicon.entries())
    decoded.push_back({utf8::decode(e.surface), &e});

  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  const std::size_t n = cps.size();
  while (i < n) {
    bool matched = false;
    for (const auto& d : decoded) {
      const std::size_t len = d.surface.size();
      if (len == 0 || i + len > n) continue;
      if (!std::equal(d.surface.begin(), d.surface.end(), cps.begin() + i))
        continue;
      if (d.entry->mode == MatchMode::WordBoundary) {
        const bool left_ok = i == 0 || !is_letter(cps[i - 1]);
        const bool right_ok = i + len == n || !is_letter(cps[i + len]);
        if (!left_ok || !right_ok) continue;
      }
      out += d.entry->expansion;
      i += len;
      matched = true;
      break;
    }
    if (!matched) {
      utf8::append(cps[i], out);
      ++i;
    }
  }
  return out;
}

std::string normalize_spacing(const std::string& text) {
  const auto cps = utf8::decode(text);
  std::string out;
  out.reserve(text.size() * 2);
  CharClass prev = CharClass::SPACE;
  bool pending_space = false;
  for (char32_t cp : cps) {
    const CharClass cls = classify(cp);
    if (cls == CharClass::SPACE) {
      if (!out.empty()) pending_space = true;
      prev = CharClass::SPACE;
      continue;
    }
    if (pending_space || (prev != CharClass::SPACE && prev != cls)) {
      if (!out.empty()) out.push_back(' ');
      pending_space = false;
    }
    utf8::append(cp, out);
    prev = cls;
  }
  return out;
}

std::vector<LanguageSpan> segment_language_spans(const std::string& text) {
  const auto cps = utf8::decode(text);
  std::vector<LanguageSpan> spans;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const CharClass cls = classify(cps[i]);
    if (cls == CharClass::SPACE) continue;
    if (!spans.empty() && spans.back().end == i && spans.back().cls == cls)
      spans.back().end = i + 1;
    else
      spans.push_back({i, i + 1, cls});
  }
  return spans;
}

PIRecord preprocess_record(const PIRecord& record,
                           const AbbrevLexicon& lexicon) {
  PIRecord out = record;
  out.text = normalize_spacing(decode_abbreviations(record.text, lexicon));
  if (out.text.empty())
    throw std::runtime_error("record '" + record.id +
                             "' is empty after preprocessing");
  return out;
}

}  // namespace biobridge
