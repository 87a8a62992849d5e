#include "inoc/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <unordered_set>

namespace inoc {

namespace {

bool is_word_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

bool ends_sentence(const std::string& core_plus_suffix) {
  for (auto it = core_plus_suffix.rbegin(); it != core_plus_suffix.rend(); ++it) {
    if (*it == '.' || *it == '!' || *it == '?') return true;
    if (!is_word_punct(*it)) return false;
  }
  return false;
}

}  // namespace

std::vector<WordToken> split_words(const std::string& text) {
  std::vector<WordToken> out;
  std::size_t i = 0;
  bool at_sentence_start = true;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::string raw = text.substr(start, i - start);

    WordToken tok;
    std::size_t b = 0, e = raw.size();
    while (b < e && is_word_punct(raw[b])) ++b;
    while (e > b && is_word_punct(raw[e - 1])) --e;
    tok.prefix = raw.substr(0, b);
    tok.core = raw.substr(b, e - b);
    tok.suffix = raw.substr(e);
    tok.sentence_initial = at_sentence_start;
    at_sentence_start = ends_sentence(tok.core + tok.suffix);
    out.push_back(std::move(tok));
  }
  return out;
}

std::string join_words(const std::vector<WordToken>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i].rebuild();
  }
  return out;
}

std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_ascii_digit_string(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

bool looks_proper_noun(const WordToken& w) {
  if (w.core.empty() || w.sentence_initial) return false;
  return std::isupper(static_cast<unsigned char>(w.core[0])) != 0;
}

std::vector<std::string> content_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<std::string> char_trigrams(const std::string& text) {
  std::string padded = "^" + to_lower(text) + "$";
  std::vector<std::string> out;
  if (padded.size() < 3) return out;
  out.reserve(padded.size() - 2);
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) out.push_back(padded.substr(i, 3));
  return out;
}

bool is_stopword(const std::string& lower_token) {
  static const std::unordered_set<std::string> kStop = {
      "a",    "an",   "the",  "of",   "in",   "on",   "at",   "to",  "is",
      "are",  "was",  "were", "and",  "or",   "for",  "with", "by",  "from",
      "as",   "it",   "its",  "this", "that", "be",   "been", "has", "have",
      "had",  "not",  "no",   "do",   "does", "did",  "but",  "if",  "than",
      "then", "so",   "such", "into", "over", "about"};
  return kStop.count(lower_token) > 0;
}

std::vector<std::uint32_t> decode_utf8(const std::string& s) {
  std::vector<std::uint32_t> cps;
  cps.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::uint32_t cp = 0;
    int extra = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1f;
      extra = 1;
    } else if ((c >> 4) == 0xe) {
      cp = c & 0x0f;
      extra = 2;
    } else if ((c >> 3) == 0x1e) {
      cp = c & 0x07;
      extra = 3;
    } else {
      // Invalid lead byte: pass through as replacement to stay total.
      cps.push_back(0xfffd);
      ++i;
      continue;
    }
    if (i + static_cast<std::size_t>(extra) >= s.size()) {
      cps.push_back(0xfffd);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3f);
    }
    if (!ok) {
      cps.push_back(0xfffd);
      ++i;
      continue;
    }
    cps.push_back(cp);
    i += extra + 1;
  }
  return cps;
}

std::string encode_utf8(const std::vector<std::uint32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (std::uint32_t cp : cps) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
      out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  std::string out(buf);
  // Normalize negative zero so reports do not depend on rounding direction.
  if (out.find_first_not_of("-0.") == std::string::npos && out[0] == '-') {
    out.erase(out.begin());
  }
  return out;
}

}  // namespace inoc
