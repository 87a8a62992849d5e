#include "inoc/llmrunner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "httplib.h"

#include "inoc/errors.hpp"
#include "inoc/rng.hpp"
#include "inoc/sha256.hpp"
#include "inoc/text.hpp"

namespace inoc {

namespace {

Label flip_label(Label gold, Rng& rng) {
  Label others[2];
  int n = 0;
  for (Label l : {Label::Entail, Label::Contradict, Label::Neutral}) {
    if (l != gold) others[n++] = l;
  }
  return others[rng.below(2)];
}

}  // namespace

std::unique_ptr<MockBackend> MockBackend::parse(const std::string& policy,
                                                const ModelProfile& profile,
                                                std::uint64_t seed) {
  std::string lower = to_lower(policy);
  if (lower == "echo-gold") {
    return std::make_unique<MockBackend>(Policy::EchoGold, profile, "", 0.0, seed);
  }
  if (lower == "keyword-heuristic" || lower == "keyword") {
    return std::make_unique<MockBackend>(Policy::KeywordHeuristic, profile, "", 0.0, seed);
  }
  if (lower.rfind("fixed-label:", 0) == 0) {
    return std::make_unique<MockBackend>(Policy::FixedLabel, profile,
                                         policy.substr(12), 0.0, seed);
  }
  if (lower.rfind("noisy:", 0) == 0) {
    double p = std::stod(lower.substr(6));
    if (p < 0.0 || p > 1.0) throw ValidationError("noisy flip probability outside [0,1]");
    return std::make_unique<MockBackend>(Policy::Noisy, profile, "", p, seed);
  }
  throw ValidationError("unknown mock policy '" + policy + "'");
}

MockBackend::MockBackend(Policy policy, ModelProfile profile, std::string fixed_word,
                         double flip_p, std::uint64_t seed)
    : policy_(policy),
      profile_(std::move(profile)),
      fixed_word_(std::move(fixed_word)),
      flip_p_(flip_p),
      seed_(seed) {}

std::string MockBackend::name() const {
  switch (policy_) {
    case Policy::EchoGold: return "mock:echo-gold";
    case Policy::FixedLabel: return "mock:fixed-label:" + fixed_word_;
    case Policy::KeywordHeuristic: return "mock:keyword-heuristic";
    case Policy::Noisy: return "mock:noisy";
  }
  return "mock";
}

CompletionResult MockBackend::complete(const nlohmann::ordered_json&, const EvalItem& item) {
  CompletionResult r;
  r.ok = true;
  r.http_status = 200;
  switch (policy_) {
    case Policy::EchoGold:
      r.text = "E: mock. A: " + profile_.verdict_word(item.example.label);
      break;
    case Policy::FixedLabel:
      r.text = "E: mock. A: " + fixed_word_;
      break;
    case Policy::KeywordHeuristic: {
      // Overlap of hypothesis content tokens with the premise, with an
      // explicit-negation override.
      auto hyp = content_tokens(item.example.hypothesis);
      auto prem = content_tokens(item.premise);
      std::size_t hits = 0, considered = 0;
      bool negated = false;
      for (const auto& t : hyp) {
        if (t == "not" || t == "no" || t == "never" || t == "isn" || t == "wasn") {
          negated = true;
        }
        if (is_stopword(t)) continue;
        ++considered;
        if (std::find(prem.begin(), prem.end(), t) != prem.end()) ++hits;
      }
      Label guess;
      if (negated) {
        guess = Label::Contradict;
      } else if (considered > 0 &&
                 static_cast<double>(hits) >= 0.7 * static_cast<double>(considered)) {
        guess = Label::Entail;
      } else {
        guess = Label::Neutral;
      }
      r.text = "E: keyword. A: " + profile_.verdict_word(guess);
      break;
    }
    case Policy::Noisy: {
      Rng rng(fnv1a64(item.example.id) ^ seed_);
      Label out = item.example.label;
      if (rng.uniform() < flip_p_) out = flip_label(out, rng);
      r.text = "E: mock. A: " + profile_.verdict_word(out);
      break;
    }
  }
  return r;
}

HttpBackend::HttpBackend(const BackendProfile& profile)
    : model_(profile.model), timeout_s_(profile.timeout_s) {
  const std::string& url = profile.endpoint;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("backend endpoint must be an http(s) URL: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_ = url;
    path_ = "/";
  } else {
    scheme_host_ = url.substr(0, path_start);
    path_ = url.substr(path_start);
  }
  if (!profile.auth_env.empty()) {
    const char* v = std::getenv(profile.auth_env.c_str());
    if (!v || !*v) {
      throw BackendError("auth environment variable '" + profile.auth_env + "' is not set");
    }
    bearer_ = v;
  }
}

CompletionResult HttpBackend::complete(const nlohmann::ordered_json& request_body,
                                       const EvalItem&) {
  CompletionResult r;
  httplib::Client client(scheme_host_);
  client.set_connection_timeout(static_cast<time_t>(timeout_s_));
  client.set_read_timeout(static_cast<time_t>(timeout_s_));
  httplib::Headers headers;
  if (!bearer_.empty()) headers.emplace("Authorization", "Bearer " + bearer_);

  auto res = client.Post(path_, headers, request_body.dump(), "application/json");
  if (!res) {
    r.error = "transport error: " + httplib::to_string(res.error());
    r.retryable = true;
    return r;
  }
  r.http_status = res->status;
  if (res->status == 429 || res->status >= 500) {
    r.error = "HTTP " + std::to_string(res->status);
    r.retryable = true;
    return r;
  }
  if (res->status < 200 || res->status >= 300) {
    r.error = "HTTP " + std::to_string(res->status) + ": " + res->body;
    return r;
  }
  try {
    auto j = nlohmann::json::parse(res->body);
    r.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    r.ok = true;
  } catch (const nlohmann::json::exception& e) {
    r.error = std::string("malformed completion body: ") + e.what();
  }
  return r;
}

ResponseCache::ResponseCache(std::string dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::optional<RawResponse> ResponseCache::lookup(const std::string& hash) const {
  auto path = std::filesystem::path(dir_) / (hash + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;  // torn write; treat as a miss
  }
  RawResponse r;
  r.example_id = j.value("example_id", "");
  r.request_hash = j.value("request_hash", "");
  r.text = j.value("text", "");
  r.latency_ms = j.value("latency_ms", 0LL);
  r.attempts = j.value("attempts", std::size_t{1});
  r.backend = j.value("backend", "");
  r.ok = j.value("ok", true);
  r.http_status = j.value("http_status", 200);
  r.error = j.value("error", "");
  return r;
}

void ResponseCache::store(const RawResponse& response) {
  nlohmann::ordered_json j;
  j["example_id"] = response.example_id;
  j["request_hash"] = response.request_hash;
  j["text"] = response.text;
  j["latency_ms"] = response.latency_ms;
  j["attempts"] = response.attempts;
  j["backend"] = response.backend;
  j["ok"] = response.ok;
  j["http_status"] = response.http_status;
  j["error"] = response.error;

  std::lock_guard<std::mutex> lock(write_mutex_);
  auto final_path = std::filesystem::path(dir_) / (response.request_hash + ".json");
  auto tmp_path = std::filesystem::path(dir_) / (response.request_hash + ".tmp");
  {
    std::ofstream out(tmp_path, std::ios::binary);
    out << j.dump() << '\n';
  }
  std::filesystem::rename(tmp_path, final_path);
}

nlohmann::ordered_json build_request_body(const PromptSpec& spec, const EvalItem& item,
                                          const ModelProfile& model_profile,
                                          const BackendProfile& backend_profile) {
  auto messages = render_chat_request(spec, {item.premise, item.example.hypothesis},
                                      model_profile);
  nlohmann::ordered_json body;
  body["model"] = backend_profile.model;
  body["messages"] = messages_to_json(messages);
  body["temperature"] = backend_profile.temperature;
  body["max_tokens"] = backend_profile.max_new_tokens;
  return body;
}

std::string request_hash(const nlohmann::ordered_json& body, const PromptSpec& spec) {
  // The spec digest folds template edits into the key even if they do not
  // change this particular rendered request.
  return sha256_hex(body.dump() + "\x1f" + spec.to_json().dump());
}

std::vector<RawResponse> run_eval(const PromptSpec& spec, const std::vector<EvalItem>& items,
                                  const ModelProfile& model_profile,
                                  const BackendProfile& backend_profile, Backend& backend,
                                  std::size_t parallelism, ResponseCache* cache) {
  if (backend_profile.offline && backend.uses_network()) {
    if (!cache) {
      throw BackendError("offline mode with a network backend requires a warm cache");
    }
  }
  if (parallelism == 0) parallelism = 1;

  std::vector<RawResponse> results(items.size());
  std::atomic<std::size_t> next{0};
  std::mutex rate_mutex;
  auto rate_next = std::chrono::steady_clock::now();

  auto acquire_rate_slot = [&]() {
    if (backend_profile.rate_per_minute == 0) return;
    std::chrono::steady_clock::time_point wait_until;
    {
      std::lock_guard<std::mutex> lock(rate_mutex);
      auto now = std::chrono::steady_clock::now();
      if (rate_next < now) rate_next = now;
      wait_until = rate_next;
      rate_next += std::chrono::milliseconds(60000 / backend_profile.rate_per_minute);
    }
    std::this_thread::sleep_until(wait_until);
  };

  auto process = [&](std::size_t idx) {
    const EvalItem& item = items[idx];
    RawResponse r;
    r.example_id = item.example.id;
    r.backend = backend.name();

    auto body = build_request_body(spec, item, model_profile, backend_profile);
    r.request_hash = request_hash(body, spec);

    if (cache) {
      if (auto hit = cache->lookup(r.request_hash)) {
        results[idx] = *hit;
        return;
      }
    }
    if (backend_profile.offline && backend.uses_network()) {
      r.ok = false;
      r.error = "offline: cache miss and network access is disabled";
      results[idx] = r;
      return;
    }

    auto start = std::chrono::steady_clock::now();
    std::size_t backoff_ms = backend_profile.retry.backoff_initial_ms;
    for (std::size_t attempt = 1; attempt <= backend_profile.retry.max_attempts; ++attempt) {
      r.attempts = attempt;
      acquire_rate_slot();
      CompletionResult c;
      try {
        c = backend.complete(body, item);
      } catch (const std::exception& e) {
        c.ok = false;
        c.error = e.what();
        c.retryable = false;
      }
      r.ok = c.ok;
      r.http_status = c.http_status;
      r.error = c.error;
      if (c.ok) {
        r.text = c.text;
        break;
      }
      if (!c.retryable || attempt == backend_profile.retry.max_attempts) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms *= 2;
    }
    r.latency_ms = backend.uses_network()
                       ? std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count()
                       : 0;

    if (cache && r.ok) cache->store(r);
    results[idx] = r;
  };

  if (parallelism == 1 || items.size() <= 1) {
    for (std::size_t i = 0; i < items.size(); ++i) process(i);
  } else {
    std::vector<std::thread> workers;
    std::size_t n_workers = std::min(parallelism, items.size());
    workers.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
      workers.emplace_back([&]() {
        for (;;) {
          std::size_t idx = next.fetch_add(1);
          if (idx >= items.size()) return;
          process(idx);
        }
      });
    }
    for (auto& t : workers) t.join();
  }
  return results;
}

void write_responses_jsonl(const std::vector<RawResponse>& responses,
                           const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write responses log: " + path);
  for (const auto& r : responses) {
    nlohmann::ordered_json j;
    j["example_id"] = r.example_id;
    j["request_hash"] = r.request_hash;
    j["text"] = r.text;
    j["latency_ms"] = r.latency_ms;
    j["ok"] = r.ok;
    if (!r.ok) j["error"] = r.error;
    out << j.dump() << '\n';
  }
}

}  // namespace inoc
