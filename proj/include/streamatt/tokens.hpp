#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace streamatt {

struct TokenRecord {
  std::int64_t token_id = 0;
  std::string surface;
  bool begins_word = false;
  bool is_eos = false;

  friend bool operator==(const TokenRecord&, const TokenRecord&) = default;
};

using TokenList = std::vector<TokenRecord>;

// A word is one or more consecutive tokens; a new word starts at begins_word.
using Word = TokenList;
using WordList = std::vector<Word>;

// Medium-strong marks used as sentence-boundary proxies.
inline constexpr std::string_view kStrongMarks = ".!?;:";
// Marks reported by the punctuation profile and stripped for matching.
inline constexpr std::string_view kProfileMarks = ".!?:;,";

inline WordList group_words(const TokenList& tokens) {
  WordList words;
  for (const auto& t : tokens) {
    if (t.is_eos) continue;
    if (words.empty() || t.begins_word) words.emplace_back();
    words.back().push_back(t);
  }
  return words;
}

inline TokenList flatten(const WordList& words) {
  TokenList out;
  for (const auto& w : words) out.insert(out.end(), w.begin(), w.end());
  return out;
}

inline std::size_t token_count(const WordList& words) {
  std::size_t n = 0;
  for (const auto& w : words) n += w.size();
  return n;
}

inline std::string word_surface(const Word& word) {
  std::string s;
  for (const auto& t : word) s += t.surface;
  return s;
}

// Words joined by single spaces.
inline std::string detokenize(const TokenList& tokens) {
  std::string out;
  bool first = true;
  for (const auto& w : group_words(tokens)) {
    if (!first) out += ' ';
    out += word_surface(w);
    first = false;
  }
  return out;
}

inline bool ends_with_strong_mark(std::string_view surface) {
  return !surface.empty() && kStrongMarks.find(surface.back()) != std::string_view::npos;
}

inline std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace streamatt
