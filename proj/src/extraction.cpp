#include "inoc/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "json.hpp"

#include "inoc/errors.hpp"
#include "inoc/text.hpp"

namespace inoc {

namespace {

bool is_stripped_codepoint(std::uint32_t cp) {
  // Zero-width and joiners.
  if (cp == 0x200b || cp == 0x200c || cp == 0x200d || cp == 0x2060 || cp == 0xfeff) {
    return true;
  }
  // Variation selectors.
  if (cp >= 0xfe00 && cp <= 0xfe0f) return true;
  // Common emoji and pictograph blocks.
  if (cp >= 0x1f000 && cp <= 0x1faff) return true;
  if (cp >= 0x2600 && cp <= 0x27bf) return true;  // misc symbols + dingbats
  if (cp >= 0x2190 && cp <= 0x21ff) return true;  // arrows
  if (cp == 0x203c || cp == 0x2049) return true;
  return false;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '\'';
}

// First word-boundary occurrence of `phrase` in `haystack` (both lowercase).
bool contains_phrase(const std::string& haystack, const std::string& phrase) {
  if (phrase.empty()) return false;
  std::size_t pos = 0;
  while ((pos = haystack.find(phrase, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]);
    std::size_t end = pos + phrase.size();
    bool right_ok = end >= haystack.size() || !is_word_char(haystack[end]);
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

// Phrase passes run in precedence order: neutral, negative, affirmative.
std::optional<std::pair<Label, std::string>> classify(const std::string& text,
                                                      const VerdictLexicon& lex) {
  std::string lower = to_lower(text);
  for (const auto& p : lex.neutral) {
    if (contains_phrase(lower, to_lower(p))) return {{Label::Neutral, p}};
  }
  for (const auto& p : lex.negative) {
    if (contains_phrase(lower, to_lower(p))) return {{Label::Contradict, p}};
  }
  for (const auto& p : lex.affirmative) {
    if (contains_phrase(lower, to_lower(p))) return {{Label::Entail, p}};
  }
  return std::nullopt;
}

}  // namespace

VerdictLexicon VerdictLexicon::builtin() {
  VerdictLexicon lex;
  lex.affirmative = {"yes", "true", "entailment", "entail", "entails", "correct"};
  lex.negative = {"no",         "not true",     "false",      "contradiction",
                  "contradict", "contradicts",  "incorrect"};
  lex.neutral = {"it is not possible to tell", "not possible to tell", "neutral",
                 "cannot tell", "can't tell", "cannot be determined", "unknown"};
  lex.marker = "A:";
  return lex;
}

VerdictLexicon VerdictLexicon::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open verdict lexicon: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("lexicon " + path + ": " + e.what());
  }
  VerdictLexicon lex;
  lex.affirmative = j.at("affirmative").get<std::vector<std::string>>();
  lex.negative = j.at("negative").get<std::vector<std::string>>();
  lex.neutral = j.at("neutral").get<std::vector<std::string>>();
  lex.marker = j.value("marker", std::string("A:"));
  return lex;
}

std::string clean_response_text(const std::string& raw) {
  auto cps = decode_utf8(raw);
  std::vector<std::uint32_t> kept;
  kept.reserve(cps.size());
  for (std::uint32_t cp : cps) {
    if (!is_stripped_codepoint(cp)) kept.push_back(cp);
  }
  return encode_utf8(kept);
}

Verdict extract_answer(const std::string& raw, const VerdictLexicon& lexicon) {
  std::string cleaned = clean_response_text(raw);

  Verdict v;
  std::size_t marker_pos = lexicon.marker.empty() ? std::string::npos
                                                  : cleaned.rfind(lexicon.marker);
  if (marker_pos != std::string::npos) {
    // Last marker wins; only the text after it counts.
    v.marker_found = true;
    std::string section = cleaned.substr(marker_pos + lexicon.marker.size());
    if (auto hit = classify(section, lexicon)) {
      v.label = hit->first;
      v.matched_phrase = hit->second;
    }
    return v;
  }
  // No marker: reassess the entire text.
  if (auto hit = classify(cleaned, lexicon)) {
    v.label = hit->first;
    v.matched_phrase = hit->second;
  }
  return v;
}

std::optional<Label> normalize_verdict(const std::string& word,
                                       const VerdictLexicon& lexicon) {
  std::string needle = to_lower(trim(word));
  auto member = [&](const std::vector<std::string>& list) {
    return std::any_of(list.begin(), list.end(),
                       [&](const std::string& p) { return to_lower(p) == needle; });
  };
  if (member(lexicon.neutral)) return Label::Neutral;
  if (member(lexicon.negative)) return Label::Contradict;
  if (member(lexicon.affirmative)) return Label::Entail;
  return std::nullopt;
}

}  // namespace inoc
