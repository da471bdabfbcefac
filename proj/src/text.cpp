#include "mmfnd/text.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace mmfnd {

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  const auto* p = reinterpret_cast<const unsigned char*>(s.data());
  const std::size_t n = s.size();
  std::size_t i = 0;
  while (i < n) {
    const unsigned char c = p[i];
    if (c < 0x80) {
      out.push_back(c);
      ++i;
      continue;
    }
    int len = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((c & 0xE0) == 0xC0) {
      len = 2, cp = c & 0x1F, min = 0x80;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3, cp = c & 0x0F, min = 0x800;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4, cp = c & 0x07, min = 0x10000;
    } else {
      ++i;
      continue;
    }
    if (i + len > n) {
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      const unsigned char cc = p[i + k];
      if ((cc & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok || cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode_utf8(const std::vector<char32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append_utf8(out, cp);
  return out;
}

namespace {

struct Range {
  char32_t lo, hi;
};

// Emoji and pictograph blocks, plus the joiners/selectors used to compose them.
constexpr std::array kEmojiRanges{
    Range{0x200D, 0x200D},    // zero width joiner
    Range{0x20E3, 0x20E3},    // combining enclosing keycap
    Range{0x231A, 0x231B},    Range{0x2328, 0x2328},  Range{0x23CF, 0x23CF},
    Range{0x23E9, 0x23F3},    Range{0x23F8, 0x23FA},  Range{0x24C2, 0x24C2},
    Range{0x25AA, 0x25AB},    Range{0x25B6, 0x25B6},  Range{0x25C0, 0x25C0},
    Range{0x25FB, 0x25FE},
    Range{0x2600, 0x27BF},    // misc symbols, dingbats
    Range{0x2934, 0x2935},    Range{0x2B05, 0x2B07},  Range{0x2B1B, 0x2B1C},
    Range{0x2B50, 0x2B50},    Range{0x2B55, 0x2B55},  Range{0x3030, 0x3030},
    Range{0x303D, 0x303D},    Range{0x3297, 0x3297},  Range{0x3299, 0x3299},
    Range{0xFE00, 0xFE0F},    // variation selectors
    Range{0x1F000, 0x1FAFF},  // mahjong .. symbols & pictographs extended-A
    Range{0xE0020, 0xE007F},  // tag sequences (flags)
    Range{0xE0100, 0xE01EF},  // variation selectors supplement
};

constexpr std::array kInvisibleRanges{
    Range{0x0000, 0x0008}, Range{0x000E, 0x001F}, Range{0x007F, 0x0084},
    Range{0x0086, 0x009F}, Range{0x00AD, 0x00AD}, Range{0x034F, 0x034F},
    Range{0x061C, 0x061C}, Range{0x115F, 0x1160}, Range{0x17B4, 0x17B5},
    Range{0x180B, 0x180F}, Range{0x200B, 0x200F}, Range{0x202A, 0x202E},
    Range{0x2060, 0x206F}, Range{0x3164, 0x3164}, Range{0xFEFF, 0xFEFF},
    Range{0xFFA0, 0xFFA0}, Range{0xFFF0, 0xFFFD}, Range{0x1D173, 0x1D17A},
    Range{0xE0000, 0xE001F}, Range{0xF0000, 0x10FFFF},
};

template <std::size_t N>
bool in_ranges(const std::array<Range, N>& ranges, char32_t cp) noexcept {
  return std::any_of(ranges.begin(), ranges.end(),
                     [cp](const Range& r) { return cp >= r.lo && cp <= r.hi; });
}

bool starts_with_ci(const std::vector<char32_t>& s, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    char32_t c = s[pos + k];
    if (c >= 'A' && c <= 'Z') c = c - 'A' + 'a';
    if (c != static_cast<unsigned char>(prefix[k])) return false;
  }
  return true;
}

}  // namespace

bool is_emoji_codepoint(char32_t cp) noexcept { return in_ranges(kEmojiRanges, cp); }

bool is_invisible_codepoint(char32_t cp) noexcept {
  if (is_unicode_whitespace(cp)) return false;
  return in_ranges(kInvisibleRanges, cp);
}

bool is_unicode_whitespace(char32_t cp) noexcept {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

std::string clean_text(std::string_view raw) {
  std::vector<char32_t> cps = decode_utf8(raw);

  std::erase_if(cps, [](char32_t cp) { return is_emoji_codepoint(cp) || is_invisible_codepoint(cp); });

  std::vector<char32_t> no_urls;
  no_urls.reserve(cps.size());
  for (std::size_t i = 0; i < cps.size();) {
    if (starts_with_ci(cps, i, "http://") || starts_with_ci(cps, i, "https://") ||
        starts_with_ci(cps, i, "www.")) {
      while (i < cps.size() && !is_unicode_whitespace(cps[i])) ++i;
      continue;
    }
    no_urls.push_back(cps[i++]);
  }

  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char32_t cp : no_urls) {
    if (is_unicode_whitespace(cp)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    append_utf8(out, cp);
  }
  return out;
}

}  // namespace mmfnd
