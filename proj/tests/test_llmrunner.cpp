#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>

#include "inoc/errors.hpp"
#include "inoc/extraction.hpp"
#include "inoc/llmrunner.hpp"
#include "inoc/prompting.hpp"
#include "test_support.hpp"

using namespace inoc;

namespace {

PromptSpec zs_spec() {
  TemplateAssets assets = TemplateAssets::load(test::asset_path("prompts"));
  return build_prompt(PromptStrategy::parse("OP_ZS"), ExemplarPool{}, ModelProfile::gpt(),
                      assets, 1);
}

std::vector<EvalItem> items_from(const Dataset& ds) {
  std::vector<EvalItem> items;
  for (const auto& ex : ds.examples) {
    items.push_back({ex, "The origin of Vessel is France."});
  }
  return items;
}

// Backend that fails a fixed number of times per example before working.
class FlakyBackend : public Backend {
 public:
  explicit FlakyBackend(std::size_t failures) : failures_(failures) {}
  std::string name() const override { return "flaky"; }
  bool uses_network() const override { return false; }
  CompletionResult complete(const nlohmann::ordered_json&, const EvalItem& item) override {
    auto& count = seen_[item.example.id];
    ++count;
    if (count <= failures_) {
      CompletionResult r;
      r.error = "simulated outage";
      r.retryable = true;
      return r;
    }
    CompletionResult r;
    r.ok = true;
    r.http_status = 200;
    r.text = "A: Yes";
    return r;
  }

 private:
  std::size_t failures_;
  std::map<std::string, std::size_t> seen_;
};

}  // namespace

TEST_CASE("echo-gold mock wraps the verdict in E:/A: form") {
  ModelProfile profile = ModelProfile::gpt();
  auto backend = MockBackend::parse("echo-gold", profile, 0);
  EvalItem item{{}, "premise"};
  item.example.id = "x";
  item.example.label = Label::Contradict;
  auto r = backend->complete({}, item);
  CHECK(r.ok);
  CHECK(r.text == "E: mock. A: No");
}

TEST_CASE("run_eval: empty input gives empty output") {
  PromptSpec spec = zs_spec();
  ModelProfile profile = ModelProfile::gpt();
  BackendProfile bp;
  auto backend = MockBackend::parse("echo-gold", profile, 0);
  auto out = run_eval(spec, {}, profile, bp, *backend, 4, nullptr);
  CHECK(out.empty());
}

TEST_CASE("run_eval: parallelism does not change the ordered output") {
  PromptSpec spec = zs_spec();
  ModelProfile profile = ModelProfile::gpt();
  BackendProfile bp;
  Dataset ds = test::synthetic_corpus(300);
  auto items = items_from(ds);
  auto backend = MockBackend::parse("echo-gold", profile, 0);

  auto seq = run_eval(spec, items, profile, bp, *backend, 1, nullptr);
  auto par = run_eval(spec, items, profile, bp, *backend, 8, nullptr);
  REQUIRE(seq.size() == par.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq[i].example_id == par[i].example_id);
    CHECK(seq[i].text == par[i].text);
    CHECK(seq[i].request_hash == par[i].request_hash);
    CHECK(seq[i].example_id == items[i].example.id);  // input order preserved
  }
}

TEST_CASE("run_eval: warm cache serves everything without the backend") {
  PromptSpec spec = zs_spec();
  ModelProfile profile = ModelProfile::gpt();
  BackendProfile bp;
  Dataset ds = test::synthetic_corpus(20);
  auto items = items_from(ds);
  test::TempDir tmp("runner_cache");
  ResponseCache cache(tmp.file("cache"));

  auto backend = MockBackend::parse("echo-gold", profile, 0);
  auto first = run_eval(spec, items, profile, bp, *backend, 2, &cache);

  // Second pass: a backend that would fail everything; cache must cover it.
  class ExplodingBackend : public Backend {
   public:
    std::string name() const override { return "exploding"; }
    bool uses_network() const override { return false; }
    CompletionResult complete(const nlohmann::ordered_json&, const EvalItem&) override {
      throw BackendError("must not be called");
    }
  } exploding;
  auto second = run_eval(spec, items, profile, bp, exploding, 2, &cache);
  REQUIRE(second.size() == first.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(second[i].text == first[i].text);
    CHECK(second[i].ok);
  }
}

TEST_CASE("run_eval: request hashes are stable and template-sensitive") {
  PromptSpec spec = zs_spec();
  ModelProfile profile = ModelProfile::gpt();
  BackendProfile bp;
  EvalItem item;
  item.example.id = "e";
  item.example.hypothesis = "H.";
  item.example.label = Label::Entail;
  item.premise = "P.";
  auto body = build_request_body(spec, item, profile, bp);
  CHECK(request_hash(body, spec) == request_hash(body, spec));

  PromptSpec other = spec;
  other.sections[0].text += " tweaked";
  CHECK(request_hash(body, spec) != request_hash(body, other));
}

TEST_CASE("run_eval: retries stop at the policy maximum") {
  PromptSpec spec = zs_spec();
  ModelProfile profile = ModelProfile::gpt();
  BackendProfile bp;
  bp.retry.max_attempts = 3;
  bp.retry.backoff_initial_ms = 1;  // keep the test fast
  Dataset ds = test::synthetic_corpus(3);
  auto items = items_from(ds);

  SUBCASE("recovers when failures < attempts") {
    FlakyBackend flaky(2);
    auto out = run_eval(spec, items, profile, bp, flaky, 1, nullptr);
    for (const auto& r : out) {
      CHECK(r.ok);
      CHECK(r.attempts == 3);
    }
  }
  SUBCASE("gives up after max attempts, recorded not dropped") {
    FlakyBackend flaky(5);
    auto out = run_eval(spec, items, profile, bp, flaky, 1, nullptr);
    REQUIRE(out.size() == items.size());
    for (const auto& r : out) {
      CHECK_FALSE(r.ok);
      CHECK(r.attempts == 3);
      CHECK(r.error == "simulated outage");
    }
  }
}

TEST_CASE("mock fixed-label on a balanced set scores the label fraction") {
  PromptSpec spec = zs_spec();
  ModelProfile profile = ModelProfile::gpt();
  BackendProfile bp;
  Dataset ds = test::synthetic_corpus(99);  // labels cycle E/C/N -> exactly a third each
  auto items = items_from(ds);
  auto backend = MockBackend::parse("fixed-label:Yes", profile, 0);
  auto out = run_eval(spec, items, profile, bp, *backend, 4, nullptr);

  VerdictLexicon lex = VerdictLexicon::builtin();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    Verdict v = extract_answer(out[i].text, lex);
    if (v.label && *v.label == items[i].example.label) ++hits;
  }
  CHECK(static_cast<double>(hits) / out.size() == doctest::Approx(1.0 / 3.0).epsilon(0.01));
}

TEST_CASE("mock noisy(0.3): observed accuracy near 0.7 over 10k examples") {
  PromptSpec spec = zs_spec();
  ModelProfile profile = ModelProfile::gpt();
  BackendProfile bp;
  Dataset ds = test::synthetic_corpus(10000);
  auto items = items_from(ds);
  auto backend = MockBackend::parse("noisy:0.3", profile, 99);
  auto out = run_eval(spec, items, profile, bp, *backend, 2, nullptr);

  VerdictLexicon lex = VerdictLexicon::builtin();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    Verdict v = extract_answer(out[i].text, lex);
    if (v.label && *v.label == items[i].example.label) ++hits;
  }
  double acc = static_cast<double>(hits) / out.size();
  CHECK(std::abs(acc - 0.7) < 0.02);
}

TEST_CASE("offline with a network-backend shape yields error records on cache miss") {
  PromptSpec spec = zs_spec();
  ModelProfile profile = ModelProfile::gpt();
  BackendProfile bp;
  bp.offline = true;

  class FakeNetworkBackend : public Backend {
   public:
    std::string name() const override { return "fake-net"; }
    bool uses_network() const override { return true; }
    CompletionResult complete(const nlohmann::ordered_json&, const EvalItem&) override {
      throw BackendError("network must not be touched offline");
    }
  } net;

  Dataset ds = test::synthetic_corpus(4);
  auto items = items_from(ds);
  test::TempDir tmp("offline_cache");
  ResponseCache cache(tmp.file("cache"));
  auto out = run_eval(spec, items, profile, bp, net, 1, &cache);
  REQUIRE(out.size() == 4);
  for (const auto& r : out) {
    CHECK_FALSE(r.ok);
    CHECK(r.error.find("offline") != std::string::npos);
  }
}

TEST_CASE("keyword-heuristic mock is deterministic and premise-sensitive") {
  ModelProfile profile = ModelProfile::gpt();
  auto backend = MockBackend::parse("keyword-heuristic", profile, 0);

  EvalItem covered;
  covered.example.id = "cov";
  covered.example.hypothesis = "The cargo holds copper ingots.";
  covered.example.label = Label::Entail;
  covered.premise = "The cargo of Vessel is copper ingots. The year of Vessel is 1900.";
  auto yes = backend->complete({}, covered);
  CHECK(yes.text == "E: keyword. A: Yes");

  EvalItem negated = covered;
  negated.example.hypothesis = "The cargo does not hold copper ingots.";
  CHECK(backend->complete({}, negated).text == "E: keyword. A: No");

  EvalItem unrelated = covered;
  unrelated.example.hypothesis = "The captain enjoys gardening on weekends.";
  CHECK(backend->complete({}, unrelated).text == "E: keyword. A: Neutral");

  CHECK(backend->complete({}, covered).text == yes.text);
}

TEST_CASE("rate limiter paces requests without changing results") {
  PromptSpec spec = zs_spec();
  ModelProfile profile = ModelProfile::gpt();
  BackendProfile bp;
  bp.rate_per_minute = 60000;  // 1 ms spacing; fast but exercises the path
  Dataset ds = test::synthetic_corpus(6);
  auto items = items_from(ds);
  auto backend = MockBackend::parse("echo-gold", profile, 0);
  auto out = run_eval(spec, items, profile, bp, *backend, 3, nullptr);
  REQUIRE(out.size() == 6);
  for (const auto& r : out) CHECK(r.ok);
}

TEST_CASE("http backend rejects bad URLs and missing auth upfront") {
  BackendProfile bp;
  bp.endpoint = "not a url";
  CHECK_THROWS_AS(HttpBackend{bp}, ValidationError);

  BackendProfile bp2;
  bp2.endpoint = "https://api.example.test/v1/chat/completions";
  bp2.auth_env = "INOC_TEST_SURELY_UNSET_VARIABLE";
  CHECK_THROWS_AS(HttpBackend{bp2}, BackendError);
}

TEST_CASE("responses log round-trips through the writer") {
  test::TempDir tmp("responses_log");
  std::vector<RawResponse> rs(2);
  rs[0].example_id = "a";
  rs[0].request_hash = "h1";
  rs[0].text = "A: Yes";
  rs[0].ok = true;
  rs[1].example_id = "b";
  rs[1].request_hash = "h2";
  rs[1].ok = false;
  rs[1].error = "boom";
  write_responses_jsonl(rs, tmp.file("log.jsonl"));
  std::string contents = test::read_file(tmp.file("log.jsonl"));
  CHECK(contents.find("\"example_id\":\"a\"") != std::string::npos);
  CHECK(contents.find("\"error\":\"boom\"") != std::string::npos);
}
