#ifndef INOC_EXTRACTION_HPP
#define INOC_EXTRACTION_HPP

#include <optional>
#include <string>
#include <vector>

#include "inoc/corpus.hpp"

namespace inoc {

// Phrase rules for classifying free-form model output. Neutral is checked
// before negative so "it is not possible to tell" never matches "no"/"not";
// affirmative comes last.
struct VerdictLexicon {
  std::vector<std::string> affirmative;
  std::vector<std::string> negative;
  std::vector<std::string> neutral;
  std::string marker = "A:";

  static VerdictLexicon builtin();
  static VerdictLexicon load(const std::string& path);  // JSON asset
};

// Extraction outcome. An empty `label` means Unparseable.
struct Verdict {
  std::optional<Label> label;
  std::string matched_phrase;
  bool marker_found = false;

  bool parseable() const { return label.has_value(); }
};

// Strip emojis, variation selectors, and zero-width characters. Idempotent.
std::string clean_response_text(const std::string& raw);

// Total over arbitrary text: clean, isolate everything after the *last*
// marker if present, classify by the lexicon's phrase rules with
// word-boundary matching; if the marker section yields nothing, rescan the
// whole cleaned text.
Verdict extract_answer(const std::string& raw, const VerdictLexicon& lexicon);

// Exact single-phrase lookup (case-insensitive); nullopt for unknown words.
std::optional<Label> normalize_verdict(const std::string& word,
                                       const VerdictLexicon& lexicon);

}  // namespace inoc

#endif
