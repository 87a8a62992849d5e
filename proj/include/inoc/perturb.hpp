#ifndef INOC_PERTURB_HPP
#define INOC_PERTURB_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "inoc/corpus.hpp"

namespace inoc {

// The five in-distribution perturbation families plus the out-of-
// distribution word swap.
enum class PerturbationKind { Char, Neg, Num, Loc, Stan, WordSwap };

constexpr std::size_t kNumKinds = 6;  // including WordSwap

char kind_code(PerturbationKind k);                 // C N M L S W
std::string kind_name(PerturbationKind k);          // char neg num loc stan wordswap
PerturbationKind kind_from_code(char code);
PerturbationKind kind_from_string(const std::string& s);  // accepts code or name

// Canonical kind order used for tie-breaks and stable output: C, N, M, L, S, W.
const std::vector<PerturbationKind>& canonical_kinds();

// Pluggable paraphrase engine. Returns nullopt when the input is out of
// reach for the engine; throws on engine failure.
class ParaphraseProvider {
 public:
  virtual ~ParaphraseProvider() = default;
  virtual std::optional<std::string> paraphrase(const std::string& hypothesis) = 0;
  virtual std::string name() const = 0;
};

// Built-in engine: synonym substitution from a fixed lexicon, falling back
// to clause reordering of copular sentences.
class RuleBasedParaphraser : public ParaphraseProvider {
 public:
  explicit RuleBasedParaphraser(
      std::vector<std::pair<std::string, std::string>> synonyms);
  std::optional<std::string> paraphrase(const std::string& hypothesis) override;
  std::string name() const override { return "rule-based"; }

  static std::vector<std::pair<std::string, std::string>> load_synonyms(
      const std::string& path);

 private:
  std::vector<std::pair<std::string, std::string>> synonyms_;
};

// How a perturbation that keeps/breaks factuality maps the gold label.
// Neutral is always a fixed point.
struct LabelPolicy {
  Label on_entail = Label::Contradict;
  Label on_contradict = Label::Contradict;
};

struct GeneratorConfig {
  std::size_t char_budget = 2;
  std::vector<std::string> gazetteer;
  std::vector<std::string> number_words;  // lowercase small-number lexicon
  LabelPolicy numeric_policy;             // default E->C, C->C
  LabelPolicy location_policy;            // default E->C, C->C
  std::shared_ptr<ParaphraseProvider> paraphraser;  // defaults to rule-based

  static GeneratorConfig with_defaults();
  std::string hash() const;  // stable digest over the closed config
};

// Generators. nullopt = NotPerturbable (the input has no usable site).
// Every success satisfies: parent_id = ex.id, perturbation = kind code,
// hypothesis != ex.hypothesis, and the kind's label policy.
std::optional<Example> perturb_char(const Example& ex, std::size_t budget,
                                    std::uint64_t seed);
std::optional<Example> perturb_negation(const Example& ex);
std::optional<Example> perturb_numeric(const Example& ex, std::uint64_t seed,
                                       const GeneratorConfig& config);
std::optional<Example> perturb_location(const Example& ex,
                                        const std::vector<std::string>& gazetteer,
                                        std::uint64_t seed,
                                        const GeneratorConfig& config);
std::optional<Example> perturb_paraphrase(const Example& ex, ParaphraseProvider& engine);
std::optional<Example> perturb_word_swap(const Example& ex, std::uint64_t seed);

std::optional<Example> apply_perturbation(PerturbationKind kind, const Example& ex,
                                          const GeneratorConfig& config,
                                          std::uint64_t seed);

// A perturbation family's train split, test split, and the unperturbed
// counterparts of the test split.
struct ChallengeSet {
  PerturbationKind kind = PerturbationKind::Char;
  std::vector<Example> train;             // fine-tuning split
  std::vector<Example> test;              // perturbed test split
  std::vector<Example> test_unperturbed;  // parent of each test example
};

struct ChallengeSetOptions {
  std::size_t cap = 1500;
  std::size_t train_size = 500;
  std::size_t test_size = 1000;
  std::uint64_t seed = 0;
  GeneratorConfig generator = GeneratorConfig::with_defaults();
};

// Applies the kind's generator to every source example, keeps successes,
// diversifies to `cap` via k-DPP over hypothesis features when the pool
// overflows (greedy fallback if the kernel rank is below the cap), then
// splits into lineage-disjoint train/test with paired unperturbed tests.
ChallengeSet build_challenge_set(const Dataset& source, PerturbationKind kind,
                                 const ChallengeSetOptions& opts);

// Directory layout: P.jsonl, Q.jsonl, Qprime.jsonl, manifest.json.
void save_challenge_set(const ChallengeSet& cs, const std::string& dir,
                        const ChallengeSetOptions& opts,
                        const std::string& config_hash);
ChallengeSet load_challenge_set(const std::string& dir);

}  // namespace inoc

#endif
