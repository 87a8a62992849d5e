#ifndef INOC_PROMPTING_HPP
#define INOC_PROMPTING_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "inoc/corpus.hpp"
#include "inoc/perturb.hpp"

namespace inoc {

struct PromptStrategy {
  enum class Type { OpZs, OpCot, Semp, MespMpi, MespMpe };
  Type type = Type::OpZs;
  PerturbationKind semp_kind = PerturbationKind::Char;  // Semp only

  static PromptStrategy parse(const std::string& s);  // "OP_ZS", "SEMP:char", ...
  std::string to_string() const;
};

// One worked example: premise/hypothesis pair, gold label, and the
// reasoning chain shown before the answer.
struct Exemplar {
  std::string premise;
  std::string hypothesis;
  Label label = Label::Neutral;
  std::string explanation;
};

// Pools keyed by source: "O" for the original set, kind names for the
// challenge sets.
struct ExemplarPool {
  std::map<std::string, std::vector<Exemplar>> by_source;

  static ExemplarPool load_jsonl(const std::string& path);
};

struct ModelProfile {
  std::string name;
  bool title_word_verdicts = true;  // Yes/No/Neutral vs yes/no/"it is not possible to tell"
  bool system_placement = true;     // instructions as system message vs user preamble
  std::size_t cot_demos = 6;
  std::size_t semp_challenge_demos = 3;
  std::size_t semp_original_demos = 3;
  std::size_t mpi_demos = 10;
  std::size_t mpe_demos = 15;

  static ModelProfile gpt();
  static ModelProfile llama();
  static ModelProfile generic();
  static ModelProfile by_name(const std::string& name);

  std::string verdict_word(Label l) const;
};

// Section templates loaded from the asset directory (one UTF-8 text file
// per section per kind per form).
struct TemplateAssets {
  std::map<std::string, std::string> texts;  // file stem -> contents

  static TemplateAssets load(const std::string& dir);
  const std::string& get(const std::string& stem) const;
};

enum class SectionKind { Task, Awareness, Limitation, Answering };

std::string section_kind_name(SectionKind s);

struct PromptSection {
  SectionKind kind;
  std::string text;
};

// Assembled prompt: ordered sections plus demonstrations, ready to render
// into a chat request.
struct PromptSpec {
  std::string strategy;
  std::string profile;
  std::vector<PromptSection> sections;
  std::vector<Exemplar> demonstrations;
  std::size_t estimated_tokens = 0;

  nlohmann::ordered_json to_json() const;
};

// Whitespace token count scaled by 1.3; a coarse budget estimate. Callers
// with a real tokenizer can pass their own estimator to build_prompt.
std::size_t estimate_tokens(const std::string& text);

using TokenEstimator = std::function<std::size_t(const std::string&)>;

struct SelectionRequest {
  std::vector<std::pair<std::string, std::size_t>> counts;  // source -> how many
  bool balance = false;        // per-label counts within 1 of uniform
  bool mpi_coverage = false;   // >= 1 exemplar from every kind pool
  std::uint64_t seed = 0;
};

std::vector<Exemplar> select_exemplars(const ExemplarPool& pools,
                                       const SelectionRequest& request);

PromptSpec build_prompt(const PromptStrategy& strategy, const ExemplarPool& pools,
                        const ModelProfile& profile, const TemplateAssets& assets,
                        std::uint64_t seed, const TokenEstimator& estimator = {});

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

struct Query {
  std::string premise;
  std::string hypothesis;
};

// Profile-dependent placement: instruction sections become either the
// system message or a leading user message; demonstrations alternate
// user/assistant; the final user turn carries the query.
std::vector<ChatMessage> render_chat_request(const PromptSpec& spec, const Query& query,
                                             const ModelProfile& profile);

nlohmann::ordered_json messages_to_json(const std::vector<ChatMessage>& messages);

}  // namespace inoc

#endif
