#ifndef INOC_LLMRUNNER_HPP
#define INOC_LLMRUNNER_HPP

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "inoc/corpus.hpp"
#include "inoc/prompting.hpp"

namespace inoc {

struct RetryPolicy {
  std::size_t max_attempts = 3;
  std::size_t backoff_initial_ms = 1000;  // doubles per retry
};

struct BackendProfile {
  std::string endpoint;  // e.g. https://api.example.com/v1/chat/completions
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.3;
  std::size_t max_new_tokens = 1000;
  std::string auth_env = "OPENAI_API_KEY";
  std::size_t timeout_s = 60;
  RetryPolicy retry;
  std::size_t rate_per_minute = 0;  // 0: unlimited
  bool offline = false;             // forbid network; cache or mock only
};

struct RawResponse {
  std::string example_id;
  std::string request_hash;
  std::string text;
  long long latency_ms = 0;
  std::size_t attempts = 0;
  std::string backend;
  bool ok = false;
  int http_status = 0;
  std::string error;
};

// A test example paired with its rendered premise.
struct EvalItem {
  Example example;
  std::string premise;
};

struct CompletionResult {
  bool ok = false;
  std::string text;
  int http_status = 0;
  std::string error;
  bool retryable = false;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  virtual bool uses_network() const = 0;
  virtual CompletionResult complete(const nlohmann::ordered_json& request_body,
                                    const EvalItem& item) = 0;
};

// Deterministic offline backend for desk-scale pipeline verification.
class MockBackend : public Backend {
 public:
  enum class Policy { EchoGold, FixedLabel, KeywordHeuristic, Noisy };

  // spec strings: echo-gold | fixed-label:<word> | keyword-heuristic | noisy:<p>
  static std::unique_ptr<MockBackend> parse(const std::string& policy,
                                            const ModelProfile& profile,
                                            std::uint64_t seed);

  MockBackend(Policy policy, ModelProfile profile, std::string fixed_word, double flip_p,
              std::uint64_t seed);

  std::string name() const override;
  bool uses_network() const override { return false; }
  CompletionResult complete(const nlohmann::ordered_json& request_body,
                            const EvalItem& item) override;

 private:
  Policy policy_;
  ModelProfile profile_;
  std::string fixed_word_;
  double flip_p_ = 0.0;
  std::uint64_t seed_ = 0;
};

// Chat-completions HTTP backend (POST, bearer auth from the environment).
class HttpBackend : public Backend {
 public:
  HttpBackend(const BackendProfile& profile);
  std::string name() const override { return "http:" + model_; }
  bool uses_network() const override { return true; }
  CompletionResult complete(const nlohmann::ordered_json& request_body,
                            const EvalItem& item) override;

 private:
  std::string scheme_host_;
  std::string path_;
  std::string model_;
  std::string bearer_;
  std::size_t timeout_s_;
};

// Content-addressed response store: one JSON file per request hash.
class ResponseCache {
 public:
  explicit ResponseCache(std::string dir);
  std::optional<RawResponse> lookup(const std::string& request_hash) const;
  void store(const RawResponse& response);

 private:
  std::string dir_;
  mutable std::mutex write_mutex_;
};

// Serialized chat-completions body for one item; the hash over this body
// (plus the prompt-spec digest) is the cache key.
nlohmann::ordered_json build_request_body(const PromptSpec& spec, const EvalItem& item,
                                          const ModelProfile& model_profile,
                                          const BackendProfile& backend_profile);

std::string request_hash(const nlohmann::ordered_json& body, const PromptSpec& spec);

// One response per item, in input order regardless of completion order.
// Cache hits skip the backend; failures after retries become error records.
std::vector<RawResponse> run_eval(const PromptSpec& spec, const std::vector<EvalItem>& items,
                                  const ModelProfile& model_profile,
                                  const BackendProfile& backend_profile, Backend& backend,
                                  std::size_t parallelism, ResponseCache* cache);

void write_responses_jsonl(const std::vector<RawResponse>& responses,
                           const std::string& path);

}  // namespace inoc

#endif
