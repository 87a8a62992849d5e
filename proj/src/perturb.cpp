#include "inoc/perturb.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "inoc/errors.hpp"
#include "inoc/rng.hpp"
#include "inoc/sampling.hpp"
#include "inoc/sha256.hpp"
#include "inoc/text.hpp"
#include "inoc/version.hpp"

namespace inoc {

namespace {

const char* kKindCodes = "CNMLSW";
const char* kKindNames[] = {"char", "neg", "num", "loc", "stan", "wordswap"};

Label apply_policy(Label gold, const LabelPolicy& policy) {
  switch (gold) {
    case Label::Entail: return policy.on_entail;
    case Label::Contradict: return policy.on_contradict;
    case Label::Neutral: return Label::Neutral;
  }
  return gold;
}

Example make_child(const Example& parent, PerturbationKind kind, std::string hypothesis,
                   Label label) {
  Example out;
  out.id = parent.id + ":" + kind_code(kind);
  out.table_id = parent.table_id;
  out.hypothesis = std::move(hypothesis);
  out.label = label;
  out.perturbation = std::string(1, kind_code(kind));
  out.parent_id = parent.id;
  return out;
}

bool has_digit(const std::string& s) {
  return std::any_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

bool char_eligible(const WordToken& w) {
  return w.core.size() >= 4 && !looks_proper_noun(w) && !has_digit(w.core);
}

// One seeded typo: adjacent swap, substitution, or deletion.
std::string typo_edit(const std::string& word, Rng& rng) {
  int op = static_cast<int>(rng.below(3));
  if (op == 0) {
    std::vector<std::size_t> swappable;
    for (std::size_t i = 0; i + 1 < word.size(); ++i) {
      if (word[i] != word[i + 1]) swappable.push_back(i);
    }
    if (!swappable.empty()) {
      std::size_t p = swappable[rng.below(swappable.size())];
      std::string out = word;
      std::swap(out[p], out[p + 1]);
      return out;
    }
    op = 1;  // all-identical letters; substitute instead
  }
  if (op == 1) {
    std::size_t p = static_cast<std::size_t>(rng.below(word.size()));
    char cur = static_cast<char>(std::tolower(static_cast<unsigned char>(word[p])));
    char repl;
    do {
      repl = static_cast<char>('a' + rng.below(26));
    } while (repl == cur);
    std::string out = word;
    out[p] = repl;
    return out;
  }
  std::size_t p = static_cast<std::size_t>(rng.below(word.size()));
  std::string out = word;
  out.erase(out.begin() + static_cast<std::ptrdiff_t>(p));
  return out;
}

struct NegationRules {
  std::unordered_map<std::string, std::string> negate;    // is -> isn't
  std::unordered_map<std::string, std::string> denegate;  // isn't -> is
};

const NegationRules& negation_rules() {
  static const NegationRules rules = [] {
    NegationRules r;
    const std::vector<std::pair<std::string, std::string>> pairs = {
        {"is", "isn't"},       {"are", "aren't"},     {"was", "wasn't"},
        {"were", "weren't"},   {"has", "hasn't"},     {"have", "haven't"},
        {"had", "hadn't"},     {"does", "doesn't"},   {"do", "don't"},
        {"did", "didn't"},     {"can", "cannot"},     {"could", "couldn't"},
        {"will", "won't"},     {"would", "wouldn't"}, {"should", "shouldn't"},
        {"must", "mustn't"}};
    for (const auto& [pos, neg] : pairs) {
      r.negate[pos] = neg;
      r.denegate[neg] = pos;
    }
    return r;
  }();
  return rules;
}

std::string match_case(const std::string& pattern, const std::string& word) {
  if (pattern.empty() || word.empty()) return word;
  if (std::isupper(static_cast<unsigned char>(pattern[0]))) {
    std::string out = word;
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
  }
  return word;
}

struct NumericToken {
  std::size_t index;   // word-token index
  bool is_word;        // number word vs digit string
  long long value = 0; // digit strings only
};

bool is_year(long long v, std::size_t digits) { return digits == 4 && v >= 1000 && v <= 2999; }

}  // namespace

char kind_code(PerturbationKind k) { return kKindCodes[static_cast<int>(k)]; }

std::string kind_name(PerturbationKind k) { return kKindNames[static_cast<int>(k)]; }

PerturbationKind kind_from_code(char code) {
  for (int i = 0; i < static_cast<int>(kNumKinds); ++i) {
    if (kKindCodes[i] == code) return static_cast<PerturbationKind>(i);
  }
  throw ParseError(std::string("unknown perturbation code '") + code + "'");
}

PerturbationKind kind_from_string(const std::string& s) {
  if (s.size() == 1) return kind_from_code(s[0]);
  std::string lower = to_lower(s);
  for (int i = 0; i < static_cast<int>(kNumKinds); ++i) {
    if (lower == kKindNames[i]) return static_cast<PerturbationKind>(i);
  }
  throw ParseError("unknown perturbation kind '" + s + "'");
}

const std::vector<PerturbationKind>& canonical_kinds() {
  static const std::vector<PerturbationKind> kinds = {
      PerturbationKind::Char, PerturbationKind::Neg,  PerturbationKind::Num,
      PerturbationKind::Loc,  PerturbationKind::Stan, PerturbationKind::WordSwap};
  return kinds;
}

RuleBasedParaphraser::RuleBasedParaphraser(
    std::vector<std::pair<std::string, std::string>> synonyms)
    : synonyms_(std::move(synonyms)) {}

std::vector<std::pair<std::string, std::string>> RuleBasedParaphraser::load_synonyms(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open synonym lexicon: " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto tab = s.find('\t');
    if (tab == std::string::npos) {
      throw ParseError("synonym lexicon line " + std::to_string(line_no) +
                       ": expected word<TAB>replacement");
    }
    out.emplace_back(to_lower(trim(s.substr(0, tab))), trim(s.substr(tab + 1)));
  }
  return out;
}

std::optional<std::string> RuleBasedParaphraser::paraphrase(const std::string& hypothesis) {
  auto words = split_words(hypothesis);

  bool replaced = false;
  for (auto& w : words) {
    std::string lower = to_lower(w.core);
    for (const auto& [from, to] : synonyms_) {
      if (lower == from) {
        w.core = match_case(w.core, to);
        replaced = true;
        break;
      }
    }
  }
  if (replaced) return join_words(words);

  // Copular clause reorder: "<left> is <right>." -> "<right> is <left>."
  static const std::unordered_set<std::string> kCopulas = {"is", "are", "was", "were"};
  for (std::size_t i = 1; i + 1 < words.size(); ++i) {
    if (kCopulas.count(to_lower(words[i].core))) {
      std::vector<WordToken> left(words.begin(), words.begin() + i);
      std::vector<WordToken> right(words.begin() + i + 1, words.end());
      // Move the final punctuation shell to the new last word.
      std::string terminal = right.back().suffix;
      right.back().suffix.clear();
      left.back().suffix += terminal;
      std::vector<WordToken> out;
      out.reserve(words.size());
      out.insert(out.end(), right.begin(), right.end());
      out.push_back(words[i]);
      out.insert(out.end(), left.begin(), left.end());
      return join_words(out);
    }
  }
  return std::nullopt;
}

GeneratorConfig GeneratorConfig::with_defaults() {
  GeneratorConfig cfg;
  cfg.gazetteer = {"the US", "the UK", "France",  "Spain",   "Germany", "Japan",
                   "India",  "China",  "Asia",    "Europe",  "Gambia",  "Canada",
                   "Brazil", "Italy",  "Norway",  "Egypt",   "Kenya",   "Peru",
                   "Texas",  "London", "Paris",   "Tokyo",   "Sydney",  "Mumbai"};
  cfg.number_words = {"one", "two",   "three", "four", "five",   "six",
                      "seven", "eight", "nine",  "ten",  "eleven", "twelve",
                      "twenty", "thirty", "fifty", "hundred", "thousand", "million"};
  cfg.paraphraser = std::make_shared<RuleBasedParaphraser>(
      std::vector<std::pair<std::string, std::string>>{
          {"big", "large"},
          {"wrote", "authored"},
          {"bought", "purchased"},
          {"famous", "well-known"},
          {"carrying", "transporting"},
          {"started", "began"},
          {"ended", "finished"},
          {"over", "more than"},
          {"under", "less than"},
          {"about", "approximately"},
          {"built", "constructed"},
          {"launched", "sent out"},
          {"published", "released"}});
  return cfg;
}

std::string GeneratorConfig::hash() const {
  nlohmann::ordered_json j;
  j["char_budget"] = char_budget;
  j["gazetteer"] = gazetteer;
  j["number_words"] = number_words;
  j["numeric_policy"] = {std::string(1, label_code(numeric_policy.on_entail)),
                         std::string(1, label_code(numeric_policy.on_contradict))};
  j["location_policy"] = {std::string(1, label_code(location_policy.on_entail)),
                          std::string(1, label_code(location_policy.on_contradict))};
  j["paraphraser"] = paraphraser ? paraphraser->name() : "none";
  return sha256_hex(j.dump());
}

std::optional<Example> perturb_char(const Example& ex, std::size_t budget,
                                    std::uint64_t seed) {
  auto words = split_words(ex.hypothesis);
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (char_eligible(words[i])) eligible.push_back(i);
  }
  if (eligible.empty() || budget == 0) return std::nullopt;

  Rng rng(seed ^ fnv1a64(ex.id));
  std::size_t n_edit = std::min(budget, eligible.size());
  auto picks = rng.sample_indices(eligible.size(), n_edit);
  std::sort(picks.begin(), picks.end());
  for (std::size_t p : picks) {
    auto& w = words[eligible[p]];
    w.core = typo_edit(w.core, rng);
  }
  std::string hyp = join_words(words);
  if (hyp == ex.hypothesis) return std::nullopt;
  return make_child(ex, PerturbationKind::Char, hyp, ex.label);
}

std::optional<Example> perturb_negation(const Example& ex) {
  const auto& rules = negation_rules();
  auto words = split_words(ex.hypothesis);

  for (std::size_t i = 0; i < words.size(); ++i) {
    std::string lower = to_lower(words[i].core);
    if (auto it = rules.denegate.find(lower); it != rules.denegate.end()) {
      words[i].core = match_case(words[i].core, it->second);
      break;
    }
    if (auto it = rules.negate.find(lower); it != rules.negate.end()) {
      if (i + 1 < words.size() && to_lower(words[i + 1].core) == "not") {
        words[i].suffix += words[i + 1].suffix;
        words.erase(words.begin() + static_cast<std::ptrdiff_t>(i + 1));
      } else {
        words[i].core = match_case(words[i].core, it->second);
      }
      break;
    }
    if (i + 1 == words.size()) return std::nullopt;
  }
  if (words.empty()) return std::nullopt;

  std::string hyp = join_words(words);
  if (hyp == ex.hypothesis) return std::nullopt;
  Label label = ex.label == Label::Entail      ? Label::Contradict
                : ex.label == Label::Contradict ? Label::Entail
                                                : Label::Neutral;
  return make_child(ex, PerturbationKind::Neg, hyp, label);
}

std::optional<Example> perturb_numeric(const Example& ex, std::uint64_t seed,
                                       const GeneratorConfig& config) {
  auto words = split_words(ex.hypothesis);
  std::vector<NumericToken> numerics;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string& core = words[i].core;
    if (is_ascii_digit_string(core)) {
      numerics.push_back({i, false, std::stoll(core)});
    } else if (std::find(config.number_words.begin(), config.number_words.end(),
                         to_lower(core)) != config.number_words.end()) {
      numerics.push_back({i, true, 0});
    }
  }
  if (numerics.empty()) return std::nullopt;

  Rng rng(seed ^ fnv1a64(ex.id));
  const NumericToken& tok = numerics[rng.below(numerics.size())];
  WordToken& w = words[tok.index];

  if (tok.is_word) {
    if (config.number_words.size() < 2) return std::nullopt;
    std::string cur = to_lower(w.core);
    std::string repl;
    do {
      repl = config.number_words[rng.below(config.number_words.size())];
    } while (repl == cur);
    w.core = match_case(w.core, repl);
  } else {
    std::size_t digits = w.core.size();
    long long lo, hi;  // same surface class: years stay years, widths stay widths
    if (is_year(tok.value, digits)) {
      lo = 1900;
      hi = 2100;
    } else if (digits >= 19) {
      return std::nullopt;  // out of long-long range; leave alone
    } else {
      lo = digits == 1 ? 0 : static_cast<long long>(std::pow(10.0, digits - 1));
      hi = static_cast<long long>(std::pow(10.0, digits));
    }
    long long repl;
    do {
      repl = lo + static_cast<long long>(rng.below(static_cast<std::uint64_t>(hi - lo)));
    } while (repl == tok.value);
    w.core = std::to_string(repl);
  }

  std::string hyp = join_words(words);
  if (hyp == ex.hypothesis) return std::nullopt;
  return make_child(ex, PerturbationKind::Num, hyp,
                    apply_policy(ex.label, config.numeric_policy));
}

std::optional<Example> perturb_location(const Example& ex,
                                        const std::vector<std::string>& gazetteer,
                                        std::uint64_t seed,
                                        const GeneratorConfig& config) {
  if (gazetteer.size() < 2) return std::nullopt;
  auto words = split_words(ex.hypothesis);

  struct Match {
    std::size_t start;
    std::size_t len;
    std::size_t entry;
  };
  std::vector<Match> matches;
  for (std::size_t g = 0; g < gazetteer.size(); ++g) {
    auto place = split_words(gazetteer[g]);
    if (place.empty()) continue;
    for (std::size_t i = 0; i + place.size() <= words.size(); ++i) {
      bool ok = true;
      for (std::size_t k = 0; k < place.size(); ++k) {
        if (words[i + k].core != place[k].core) {
          ok = false;
          break;
        }
      }
      if (ok) matches.push_back({i, place.size(), g});
    }
  }
  if (matches.empty()) return std::nullopt;

  // Longest match first; drop shorter matches swallowed by an earlier span.
  std::stable_sort(matches.begin(), matches.end(),
                   [](const Match& a, const Match& b) {
                     return a.start != b.start ? a.start < b.start : a.len > b.len;
                   });
  std::vector<Match> kept;
  std::size_t covered_end = 0;
  for (const auto& cand : matches) {
    if (cand.start >= covered_end) {
      kept.push_back(cand);
      covered_end = cand.start + cand.len;
    }
  }

  Rng rng(seed ^ fnv1a64(ex.id));
  const Match& m = kept[rng.below(kept.size())];
  std::size_t repl;
  do {
    repl = static_cast<std::size_t>(rng.below(gazetteer.size()));
  } while (repl == m.entry);

  auto repl_words = split_words(gazetteer[repl]);
  repl_words.front().prefix = words[m.start].prefix;
  repl_words.back().suffix = words[m.start + m.len - 1].suffix;
  words.erase(words.begin() + static_cast<std::ptrdiff_t>(m.start),
              words.begin() + static_cast<std::ptrdiff_t>(m.start + m.len));
  words.insert(words.begin() + static_cast<std::ptrdiff_t>(m.start), repl_words.begin(),
               repl_words.end());

  std::string hyp = join_words(words);
  if (hyp == ex.hypothesis) return std::nullopt;
  return make_child(ex, PerturbationKind::Loc, hyp,
                    apply_policy(ex.label, config.location_policy));
}

std::optional<Example> perturb_paraphrase(const Example& ex, ParaphraseProvider& engine) {
  std::optional<std::string> hyp;
  try {
    hyp = engine.paraphrase(ex.hypothesis);
  } catch (const std::exception& e) {
    throw BackendError("paraphrase provider '" + engine.name() + "' failed for example '" +
                       ex.id + "': " + e.what());
  }
  if (!hyp || *hyp == ex.hypothesis) return std::nullopt;
  return make_child(ex, PerturbationKind::Stan, *hyp, ex.label);
}

std::optional<Example> perturb_word_swap(const Example& ex, std::uint64_t seed) {
  auto words = split_words(ex.hypothesis);
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!words[i].core.empty() && !looks_proper_noun(words[i])) eligible.push_back(i);
  }
  if (eligible.size() < 2) return std::nullopt;

  // Score all eligible pairs: proximity weight times product of lengths.
  double best = -1.0;
  std::vector<std::pair<std::size_t, std::size_t>> best_pairs;
  for (std::size_t a = 0; a < eligible.size(); ++a) {
    for (std::size_t b = a + 1; b < eligible.size(); ++b) {
      std::size_t i = eligible[a], j = eligible[b];
      double score = static_cast<double>(words[i].core.size() * words[j].core.size()) /
                     (1.0 + static_cast<double>(j - i));
      if (score > best + 1e-12) {
        best = score;
        best_pairs.clear();
      }
      if (score > best - 1e-12) best_pairs.emplace_back(i, j);
    }
  }

  Rng rng(seed ^ fnv1a64(ex.id));
  auto [i, j] = best_pairs[rng.below(best_pairs.size())];
  std::swap(words[i].core, words[j].core);

  std::string hyp = join_words(words);
  if (hyp == ex.hypothesis) return std::nullopt;  // identical cores swapped
  return make_child(ex, PerturbationKind::WordSwap, hyp, ex.label);
}

std::optional<Example> apply_perturbation(PerturbationKind kind, const Example& ex,
                                          const GeneratorConfig& config,
                                          std::uint64_t seed) {
  switch (kind) {
    case PerturbationKind::Char: return perturb_char(ex, config.char_budget, seed);
    case PerturbationKind::Neg: return perturb_negation(ex);
    case PerturbationKind::Num: return perturb_numeric(ex, seed, config);
    case PerturbationKind::Loc:
      return perturb_location(ex, config.gazetteer, seed, config);
    case PerturbationKind::Stan: {
      if (!config.paraphraser) throw ValidationError("no paraphrase provider configured");
      return perturb_paraphrase(ex, *config.paraphraser);
    }
    case PerturbationKind::WordSwap: return perturb_word_swap(ex, seed);
  }
  return std::nullopt;
}

ChallengeSet build_challenge_set(const Dataset& source, PerturbationKind kind,
                                 const ChallengeSetOptions& opts) {
  if (source.examples.empty()) {
    throw InsufficientSamplesError("challenge set " + kind_name(kind) + ": empty source", 0,
                                   opts.train_size + opts.test_size);
  }

  struct Success {
    Example perturbed;
    Example parent;
  };
  std::vector<Success> successes;
  for (const auto& ex : source.examples) {
    auto child = apply_perturbation(kind, ex, opts.generator, opts.seed);
    if (child) successes.push_back({std::move(*child), ex});
  }

  const std::size_t needed = opts.train_size + opts.test_size;
  if (successes.size() < needed) {
    throw InsufficientSamplesError("challenge set " + kind_name(kind), successes.size(),
                                   needed);
  }

  // Diversify overflowing pools down to the cap.
  if (opts.cap > 0 && successes.size() > opts.cap) {
    std::vector<std::string> hyps;
    hyps.reserve(successes.size());
    for (const auto& s : successes) hyps.push_back(s.perturbed.hypothesis);
    Kernel kernel = build_kernel(hyps);
    std::vector<std::size_t> keep;
    try {
      keep = sample_k_dpp(kernel, opts.cap, opts.seed);
    } catch (const RankDeficientError&) {
      keep = greedy_map(kernel, opts.cap);  // deterministic fallback
      std::sort(keep.begin(), keep.end());
    }
    std::vector<Success> pool;
    pool.reserve(keep.size());
    for (std::size_t idx : keep) pool.push_back(std::move(successes[idx]));
    successes = std::move(pool);
    if (successes.size() < needed) {
      throw InsufficientSamplesError("challenge set " + kind_name(kind) + " after cap",
                                     successes.size(), needed);
    }
  }

  Rng rng(opts.seed ^ 0x5eedull);
  std::vector<std::size_t> order(successes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  ChallengeSet cs;
  cs.kind = kind;
  for (std::size_t i = 0; i < opts.train_size; ++i) {
    cs.train.push_back(successes[order[i]].perturbed);
  }
  for (std::size_t i = opts.train_size; i < needed; ++i) {
    cs.test.push_back(successes[order[i]].perturbed);
    cs.test_unperturbed.push_back(successes[order[i]].parent);
  }
  return cs;
}

void save_challenge_set(const ChallengeSet& cs, const std::string& dir,
                        const ChallengeSetOptions& opts, const std::string& config_hash) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write = [&](const std::vector<Example>& examples, const std::string& file) {
    Dataset d;
    d.name = kind_name(cs.kind);
    d.examples = examples;
    save_dataset_jsonl(d, (fs::path(dir) / file).string());
  };
  write(cs.train, "P.jsonl");
  write(cs.test, "Q.jsonl");
  write(cs.test_unperturbed, "Qprime.jsonl");

  nlohmann::ordered_json manifest;
  manifest["kind"] = kind_name(cs.kind);
  manifest["code"] = std::string(1, kind_code(cs.kind));
  manifest["seed"] = opts.seed;
  manifest["cap"] = opts.cap;
  manifest["sizes"] = {{"train", cs.train.size()},
                       {"test", cs.test.size()},
                       {"test_unperturbed", cs.test_unperturbed.size()}};
  manifest["generator_config_hash"] = opts.generator.hash();
  manifest["config_hash"] = config_hash;
  manifest["tool_version"] = kToolVersion;
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  out << manifest.dump(2) << '\n';
}

ChallengeSet load_challenge_set(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream mf(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!mf) throw ParseError("missing manifest.json in " + dir);
  nlohmann::json manifest = nlohmann::json::parse(mf);

  ChallengeSet cs;
  cs.kind = kind_from_string(manifest.at("kind").get<std::string>());
  cs.train = load_dataset_jsonl((fs::path(dir) / "P.jsonl").string()).examples;
  cs.test = load_dataset_jsonl((fs::path(dir) / "Q.jsonl").string()).examples;
  cs.test_unperturbed =
      load_dataset_jsonl((fs::path(dir) / "Qprime.jsonl").string()).examples;

  std::unordered_set<std::string> parents;
  for (const auto& ex : cs.test_unperturbed) parents.insert(ex.id);
  for (const auto& ex : cs.test) {
    if (!ex.parent_id || !parents.count(*ex.parent_id)) {
      throw ValidationError("challenge set " + dir + ": test example '" + ex.id +
                            "' has no unperturbed counterpart");
    }
  }
  return cs;
}

}  // namespace inoc
