#ifndef INOC_TEXT_HPP
#define INOC_TEXT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace inoc {

// A whitespace token together with its punctuation shell. `core` is the
// token with leading/trailing punctuation stripped; `prefix`/`suffix`
// reattach verbatim on rebuild.
struct WordToken {
  std::string prefix;
  std::string core;
  std::string suffix;
  bool sentence_initial = false;

  std::string rebuild() const { return prefix + core + suffix; }
};

std::vector<WordToken> split_words(const std::string& text);
std::string join_words(const std::vector<WordToken>& words);

std::string to_lower(const std::string& s);
bool is_ascii_digit_string(const std::string& s);

// Capitalized non-sentence-initial heuristic; no tagger involved.
bool looks_proper_noun(const WordToken& w);

// Lowercased alphanumeric tokens, punctuation dropped.
std::vector<std::string> content_tokens(const std::string& text);

// Character trigrams of the lowercased text, with boundary padding so that
// one- and two-character strings still produce a feature.
std::vector<std::string> char_trigrams(const std::string& text);

// Builtin English stopword check (lowercased input).
bool is_stopword(const std::string& lower_token);

// UTF-8 helpers used by the answer extractor.
std::vector<std::uint32_t> decode_utf8(const std::string& s);
std::string encode_utf8(const std::vector<std::uint32_t>& cps);

std::string trim(const std::string& s);

// Fixed-precision decimal formatting (no locale, always '.').
std::string format_fixed(double value, int decimals);

}  // namespace inoc

#endif
