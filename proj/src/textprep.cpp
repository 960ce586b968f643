#include "prelearn/textprep.hpp"

#include <clocale>
#include <cctype>
#include <cwctype>
#include <locale.h>

#include <algorithm>
#include <cstdint>
#include <optional>

namespace prelearn::text {
namespace {

struct Decoded {
  char32_t cp;
  std::size_t len;  // 0 on invalid sequence
};

Decoded decode_utf8(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1};
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {0, 0};
  }
  if (i + len > s.size()) return {0, 0};
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return {0, 0};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, len};
}

void encode_utf8(char32_t cp, std::string& out) {
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

locale_t utf8_locale() {
  static const locale_t loc = [] {
    locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(0));
    if (!l) l = newlocale(LC_CTYPE_MASK, "C.utf8", static_cast<locale_t>(0));
    return l;
  }();
  return loc;
}

char32_t lower_cp(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
  if (locale_t loc = utf8_locale()) {
    return static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), loc));
  }
  // Latin-1 supplement fallback when no UTF-8 locale is installed.
  if ((cp >= 0xC0 && cp <= 0xDE) && cp != 0xD7) return cp + 0x20;
  return cp;
}

bool is_space_cp(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' || cp == '\f' ||
         cp == 0xA0;
}

bool is_punct_cp(char32_t cp) {
  if (cp < 0x80) return cp != '_' && std::ispunct(static_cast<int>(cp));
  switch (cp) {
    case 0xAB: case 0xBB:                          // guillemets
    case 0x2018: case 0x2019: case 0x201C: case 0x201D:
    case 0x2013: case 0x2014: case 0x2026:         // dashes, ellipsis
    case 0xB7: case 0xBF: case 0xA1:
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string utf8_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const Decoded d = decode_utf8(s, i);
    if (d.len == 0) {
      out.push_back(s[i]);
      ++i;
      continue;
    }
    encode_utf8(lower_cp(d.cp), out);
    i += d.len;
  }
  return out;
}

NormalizedText preprocess(std::string_view raw) {
  const std::string lowered = utf8_lower(raw);
  std::string out;
  out.reserve(lowered.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < lowered.size();) {
    const Decoded d = decode_utf8(lowered, i);
    const std::size_t len = d.len ? d.len : 1;
    if (d.len && is_space_cp(d.cp)) {
      pending_space = true;
    } else {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.append(lowered, i, len);
    }
    i += len;
  }
  return NormalizedText(std::move(out));
}

std::vector<std::string> tokenize(const NormalizedText& t) {
  std::vector<std::string> tokens;
  const std::string& s = t.str();
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t end = s.find(' ', pos);
    if (end == std::string::npos) end = s.size();
    std::string_view word(s.data() + pos, end - pos);
    pos = end + 1;

    // Strip trailing then leading punctuation, one code point at a time.
    while (!word.empty()) {
      std::size_t start = word.size() - 1;
      while (start > 0 && (static_cast<unsigned char>(word[start]) & 0xC0) == 0x80) --start;
      const Decoded d = decode_utf8(word, start);
      if (d.len == 0 || !is_punct_cp(d.cp)) break;
      word.remove_suffix(word.size() - start);
    }
    while (!word.empty()) {
      const Decoded d = decode_utf8(word, 0);
      if (d.len == 0 || !is_punct_cp(d.cp)) break;
      word.remove_prefix(d.len);
    }
    if (!word.empty()) tokens.emplace_back(word);
  }
  return tokens;
}

bool is_formula_token(std::string_view token) {
  constexpr std::string_view prefix = "formula_";
  if (token.size() <= prefix.size() || !token.starts_with(prefix)) return false;
  return std::all_of(token.begin() + prefix.size(), token.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

std::size_t count_formula_tokens(const std::vector<std::string>& tokens) {
  return static_cast<std::size_t>(std::count_if(
      tokens.begin(), tokens.end(), [](const std::string& t) { return is_formula_token(t); }));
}

bool contains_substring(const NormalizedText& needle, const NormalizedText& haystack) {
  if (needle.empty()) return false;
  return haystack.str().find(needle.str()) != std::string::npos;
}

}  // namespace prelearn::text
