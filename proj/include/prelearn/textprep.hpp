#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace prelearn::text {

/// Lowercased text with line breaks folded to single spaces, whitespace
/// collapsed and trimmed. Only `preprocess` constructs one.
class NormalizedText {
 public:
  NormalizedText() = default;
  const std::string& str() const { return text_; }
  bool empty() const { return text_.empty(); }
  friend bool operator==(const NormalizedText&, const NormalizedText&) = default;

 private:
  friend NormalizedText preprocess(std::string_view raw);
  explicit NormalizedText(std::string s) : text_(std::move(s)) {}
  std::string text_;
};

/// UTF-8 aware lowercase. Invalid byte sequences are copied through unchanged.
std::string utf8_lower(std::string_view s);

NormalizedText preprocess(std::string_view raw);

/// Whitespace split, then leading/trailing punctuation stripped from each
/// token. Tokens that become empty are dropped.
std::vector<std::string> tokenize(const NormalizedText& t);

bool is_formula_token(std::string_view token);
std::size_t count_formula_tokens(const std::vector<std::string>& tokens);

/// Literal character containment. An empty needle never matches.
bool contains_substring(const NormalizedText& needle, const NormalizedText& haystack);

}  // namespace prelearn::text
