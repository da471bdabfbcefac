#pragma once

// Curated clean_text cases; expected outputs worked out by hand from the
// cleaning rules.

#include <array>
#include <string_view>

namespace golden {

struct CleanCase {
  std::string_view name;
  std::string_view input;
  std::string_view expected;
};

inline constexpr std::array<CleanCase, 20> kCleanText = {{
    {"devanagari whitespace", "  नमस्ते   दुनिया  ",
     "नमस्ते दुनिया"},
    {"emoji and url", "Breaking \U0001F600 news https://t.co/abc", "Breaking news"},
    {"empty", "", ""},
    {"zero width space", "hello\u200Bworld", "helloworld"},
    {"tabs and newlines", "a\tb\nc\r\nd", "a b c d"},
    {"www url", "visit www.example.com today", "visit today"},
    {"uppercase scheme", "HTTP://EXAMPLE.COM/X end", "end"},
    {"nbsp and ideographic space", "\u00A0lead and trail\u3000", "lead and trail"},
    {"skin tone modifier", "বাংলা \U0001F44D\U0001F3FD খবর",
     "বাংলা খবর"},
    {"zwj sequence", "family \U0001F468\u200D\U0001F469\u200D\U0001F467 end", "family end"},
    {"variation selector", "heart \u2764\uFE0F love", "heart love"},
    {"bell control", "ctrl\x07" "chars", "ctrlchars"},
    {"only a url", "https://a.b/c?d=e", ""},
    {"url inside parenthesis", "text(https://x.y) more", "text( more"},
    {"gurmukhi zwnj", "ਪੰਜਾਬੀ\u200C ਖ਼ਬਰ",
     "ਪੰਜਾਬੀ ਖ਼ਬਰ"},
    {"byte order mark", "\uFEFFBOM start", "BOM start"},
    {"mixed unicode spaces", "mixed\u2003em\u2009thin\u202Fnarrow", "mixed em thin narrow"},
    {"blank lines", "multi\n\n\nline   text", "multi line text"},
    {"invalid utf8 byte", "ab\xFF" "cd", "abcd"},
    {"tamil with flag", "தமிழ் \U0001F1EE\U0001F1F3 செய்தி",
     "தமிழ் செய்தி"},
}};

}  // namespace golden
