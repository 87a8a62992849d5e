#ifndef INOC_CLI_HPP
#define INOC_CLI_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "inoc/corpus.hpp"
#include "inoc/llmrunner.hpp"
#include "inoc/perturb.hpp"

namespace inoc {

// Exit codes: 0 success, 2 validation, 3 backend failure, 4 insufficient data.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitBackend = 3;
inline constexpr int kExitInsufficientData = 4;

struct RunConfig {
  // paths
  std::string dataset_path;
  std::string tables_path;
  std::string assets_dir = "assets";
  std::string cache_dir;
  std::string output_dir = "out";
  std::string exemplars_path;
  std::string gazetteer_path;   // empty: builtin list
  std::string synonyms_path;    // empty: builtin lexicon
  std::string lexicon_path;     // empty: builtin verdict lexicon
  std::string challenge_dir;    // empty: <output>/challenge

  // run
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  bool offline = false;
  std::size_t repeats = 1;  // evaluation seeds seed..seed+repeats-1, reports averaged

  // splits
  std::size_t cap = 1500;
  std::size_t train_size = 500;
  std::size_t test_size = 1000;

  // corpus
  std::vector<std::string> plural_keys;
  std::size_t drr_k = 8;

  // perturb
  std::vector<PerturbationKind> kinds;
  std::size_t char_budget = 2;

  // prompting
  std::string strategy = "OP_ZS";
  std::string profile = "gpt";

  // backend
  std::string backend_kind = "mock";  // mock | http
  std::string mock_policy = "echo-gold";
  BackendProfile backend;

  // schedule
  std::size_t mix_k = 500;
  std::size_t dynmix_total = 1500;
  std::size_t seq_k = 500;
  std::string seq_order;      // explicit order string; empty derives from matrix
  std::string system_prompt;  // fine-tune manifest system prompt

  // optional per-kind baseline accuracies (0-100); enables mu
  std::map<PerturbationKind, double> baseline;

  std::string config_hash;  // sha256 over the canonical config serialization

  static RunConfig from_json(const nlohmann::ordered_json& doc);
  static RunConfig load(const std::string& path);

  GeneratorConfig generator_config() const;
  std::string resolved_challenge_dir() const;
};

int run_cli(const std::vector<std::string>& args);

}  // namespace inoc

#endif
