#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace biobridge::utf8 {

// Decodes a UTF-8 string into codepoints. Invalid bytes decode to U+FFFD.
std::vector<char32_t> decode(std::string_view text);

// Encodes a single codepoint as UTF-8 and appends it to out.
void append(std::u32string_view cps, std::string& out);
void append(char32_t cp, std::string& out);

std::string encode(const std::vector<char32_t>& cps);

}  // namespace biobridge::utf8
