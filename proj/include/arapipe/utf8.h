#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace arapipe::utf8 {

/// Decodes `text`, throwing OffsetError at the first malformed sequence
/// (overlong forms, surrogates and values above U+10FFFF are rejected).
std::u32string Decode(std::string_view text);

/// Throws like Decode, without materialising the code points.
void Validate(std::string_view text);

void Append(std::string& out, char32_t cp);
std::string Encode(std::u32string_view cps);

/// Byte offsets of each code point start in valid UTF-8, followed by
/// text.size() as a sentinel. Result has CodePointCount(text) + 1 entries.
std::vector<std::size_t> Boundaries(std::string_view text);

std::size_t CodePointCount(std::string_view text);

// Character classes used throughout the pipeline.
bool IsSpace(char32_t cp);
bool IsAsciiAlnum(char32_t cp);
bool IsArabicLetter(char32_t cp);
bool IsArabicDiacritic(char32_t cp);  // U+064B..U+0652
inline constexpr char32_t kTatweel = 0x0640;

/// Splits on runs of whitespace; no empty tokens are produced.
std::vector<std::string_view> SplitWhitespace(std::string_view text);

}  // namespace arapipe::utf8
