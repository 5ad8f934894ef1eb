#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "twqp/error.hpp"
#include "twqp/porter_stemmer.hpp"

namespace twqp {

enum class Stemmer { none, porter };

/// The classic 33-word English stopword list (the same set Lucene's
/// StandardAnalyzer historically shipped as ENGLISH_STOP_WORDS_SET).
inline const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = {
      "a",    "an",    "and",   "are",  "as",   "at",   "be",    "but",  "by",
      "for",  "if",    "in",    "into", "is",   "it",   "no",    "not",  "of",
      "on",   "or",    "such",  "that", "the",  "their", "then", "there", "these",
      "they", "this",  "to",    "was",  "will", "with"};
  return words;
}

/// Token pipeline settings. Tokens are maximal runs of letters and digits;
/// lowercasing happens first, stopword removal second, stemming last.
struct AnalyzerConfig {
  bool lowercase = true;
  std::set<std::string> stopwords = default_stopwords();
  Stemmer stemmer = Stemmer::porter;

  friend bool operator==(const AnalyzerConfig&, const AnalyzerConfig&) = default;
};

inline std::string_view to_string(Stemmer s) { return s == Stemmer::porter ? "porter" : "none"; }

inline Stemmer parse_stemmer(std::string_view name) {
  if (name == "porter") return Stemmer::porter;
  if (name == "none") return Stemmer::none;
  throw Error("unknown stemmer '" + std::string(name) + "' (expected porter or none)");
}

namespace detail {

// Decodes one UTF-8 sequence starting at text[pos]. Malformed input yields
// U+FFFD and consumes a single byte.
inline char32_t decode_utf8(std::string_view text, std::size_t& pos) {
  const auto lead = static_cast<unsigned char>(text[pos]);
  if (lead < 0x80) {
    ++pos;
    return lead;
  }
  int extra = 0;
  char32_t cp = 0;
  if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    ++pos;
    return 0xFFFD;
  }
  if (pos + static_cast<std::size_t>(extra) >= text.size()) {
    ++pos;
    return 0xFFFD;
  }
  for (int i = 1; i <= extra; ++i) {
    const auto c = static_cast<unsigned char>(text[pos + static_cast<std::size_t>(i)]);
    if ((c & 0xC0) != 0x80) {
      ++pos;
      return 0xFFFD;
    }
    cp = (cp << 6) | (c & 0x3F);
  }
  pos += static_cast<std::size_t>(extra) + 1;
  return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
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

// ASCII letters and digits, Latin-1 and Latin Extended letters, and any code
// point outside the punctuation, symbol and control blocks count as word
// characters.
inline bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
  }
  if (cp < 0xC0) return false;
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows, shapes
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp >= 0xFE00 && cp <= 0xFE6F) return false;  // variation selectors, small forms
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;  // fullwidth punctuation
  if (cp == 0xFEFF || cp == 0xFFFD) return false;
  return true;
}

// Simple case mapping for Latin, Greek and Cyrillic capitals.
inline char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp < 0xC0) return cp;
  if (cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (cp >= 0x100 && cp <= 0x137) return cp | 1U;
  if (cp >= 0x139 && cp <= 0x148) return (cp & 1U) ? cp + 1 : cp;
  if (cp >= 0x14A && cp <= 0x177) return cp | 1U;
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x179 && cp <= 0x17E) return (cp & 1U) ? cp + 1 : cp;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  return cp;
}

inline bool is_ascii_alpha(std::string_view token) {
  return std::all_of(token.begin(), token.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

}  // namespace detail

/// Splits text into analyzed tokens. Total and deterministic.
inline std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& config) {
  std::vector<std::string> tokens;
  std::string current;
  const PorterStemmer stem;

  auto flush = [&] {
    if (current.empty()) return;
    if (!config.stopwords.contains(current)) {
      if (config.stemmer == Stemmer::porter && detail::is_ascii_alpha(current)) {
        std::string stemmed = stem(current);
        if (!stemmed.empty()) tokens.push_back(std::move(stemmed));
      } else {
        tokens.push_back(current);
      }
    }
    current.clear();
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp = detail::decode_utf8(text, pos);
    if (detail::is_word_char(cp)) {
      if (config.lowercase) cp = detail::to_lower(cp);
      detail::append_utf8(current, cp);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

}  // namespace twqp
