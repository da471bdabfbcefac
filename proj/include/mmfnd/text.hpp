#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mmfnd {

/// Decodes UTF-8 into code points. Invalid or overlong sequences are skipped
/// byte by byte, so the result is always valid Unicode scalar values.
std::vector<char32_t> decode_utf8(std::string_view s);
std::string encode_utf8(const std::vector<char32_t>& cps);
void append_utf8(std::string& out, char32_t cp);

bool is_emoji_codepoint(char32_t cp) noexcept;
/// Control, format and zero-width characters (excluding whitespace).
bool is_invisible_codepoint(char32_t cp) noexcept;
bool is_unicode_whitespace(char32_t cp) noexcept;

/// Normalizes scraped article text:
///  - drops control, format and zero-width characters, emoji and invalid bytes,
///  - removes URL tokens (`http://`, `https://`, `www.` up to the next whitespace),
///  - collapses whitespace runs into one ASCII space and trims both ends.
/// Total and idempotent.
std::string clean_text(std::string_view raw);

}  // namespace mmfnd
