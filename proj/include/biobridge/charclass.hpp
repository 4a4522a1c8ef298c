#pragma once

#include <cstdint>

namespace biobridge {

enum class CharClass : std::uint8_t { KOR, ENG, NUM, SPECIAL, SPACE };

inline CharClass classify(char32_t cp) {
  if (cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
      cp == U'\v')
    return CharClass::SPACE;
  if ((cp >= 0xAC00 && cp <= 0xD7A3) || (cp >= 0x1100 && cp <= 0x11FF))
    return CharClass::KOR;
  if ((cp >= U'A' && cp <= U'Z') || (cp >= U'a' && cp <= U'z'))
    return CharClass::ENG;
  if (cp >= U'0' && cp <= U'9') return CharClass::NUM;
  return CharClass::SPECIAL;
}

}  // namespace biobridge
