#include "inoc/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"

#include "inoc/errors.hpp"
#include "inoc/evaluation.hpp"
#include "inoc/extraction.hpp"
#include "inoc/sampling.hpp"
#include "inoc/schedule.hpp"
#include "inoc/sha256.hpp"
#include "inoc/text.hpp"
#include "inoc/toml.hpp"
#include "inoc/version.hpp"

namespace inoc {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

template <typename T>
T get_or(const ordered_json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json(const ordered_json& doc) {
  RunConfig cfg;
  if (doc.contains("paths")) {
    const auto& p = doc["paths"];
    cfg.dataset_path = get_or<std::string>(p, "dataset", "");
    cfg.tables_path = get_or<std::string>(p, "tables", "");
    cfg.assets_dir = get_or<std::string>(p, "assets", cfg.assets_dir);
    cfg.cache_dir = get_or<std::string>(p, "cache", "");
    cfg.output_dir = get_or<std::string>(p, "output", cfg.output_dir);
    cfg.exemplars_path = get_or<std::string>(p, "exemplars", "");
    cfg.gazetteer_path = get_or<std::string>(p, "gazetteer", "");
    cfg.synonyms_path = get_or<std::string>(p, "synonyms", "");
    cfg.lexicon_path = get_or<std::string>(p, "lexicon", "");
    cfg.challenge_dir = get_or<std::string>(p, "challenge", "");
  }
  if (doc.contains("run")) {
    const auto& r = doc["run"];
    cfg.seed = get_or<std::uint64_t>(r, "seed", 0);
    cfg.parallelism = get_or<std::size_t>(r, "parallelism", 1);
    cfg.offline = get_or<bool>(r, "offline", false);
    cfg.repeats = get_or<std::size_t>(r, "repeats", 1);
    if (cfg.repeats == 0) cfg.repeats = 1;
  }
  if (doc.contains("splits")) {
    const auto& s = doc["splits"];
    cfg.cap = get_or<std::size_t>(s, "cap", cfg.cap);
    cfg.train_size = get_or<std::size_t>(s, "train_size", cfg.train_size);
    cfg.test_size = get_or<std::size_t>(s, "test_size", cfg.test_size);
  }
  if (doc.contains("corpus")) {
    const auto& c = doc["corpus"];
    cfg.plural_keys = get_or<std::vector<std::string>>(c, "plural_keys", {});
    cfg.drr_k = get_or<std::size_t>(c, "drr_k", cfg.drr_k);
  }
  if (doc.contains("perturb")) {
    const auto& p = doc["perturb"];
    for (const auto& k : get_or<std::vector<std::string>>(p, "kinds", {})) {
      cfg.kinds.push_back(kind_from_string(k));
    }
    cfg.char_budget = get_or<std::size_t>(p, "char_budget", cfg.char_budget);
  }
  if (cfg.kinds.empty()) {
    cfg.kinds = {PerturbationKind::Char, PerturbationKind::Neg, PerturbationKind::Num,
                 PerturbationKind::Loc, PerturbationKind::Stan};
  }
  if (doc.contains("prompting")) {
    const auto& p = doc["prompting"];
    cfg.strategy = get_or<std::string>(p, "strategy", cfg.strategy);
    cfg.profile = get_or<std::string>(p, "profile", cfg.profile);
  }
  if (doc.contains("backend")) {
    const auto& b = doc["backend"];
    cfg.backend_kind = get_or<std::string>(b, "kind", cfg.backend_kind);
    cfg.mock_policy = get_or<std::string>(b, "mock_policy", cfg.mock_policy);
    cfg.backend.endpoint = get_or<std::string>(b, "endpoint", "");
    cfg.backend.model = get_or<std::string>(b, "model", cfg.backend.model);
    cfg.backend.temperature = get_or<double>(b, "temperature", cfg.backend.temperature);
    cfg.backend.max_new_tokens =
        get_or<std::size_t>(b, "max_new_tokens", cfg.backend.max_new_tokens);
    cfg.backend.auth_env = get_or<std::string>(b, "auth_env", cfg.backend.auth_env);
    cfg.backend.timeout_s = get_or<std::size_t>(b, "timeout_s", cfg.backend.timeout_s);
    cfg.backend.retry.max_attempts =
        get_or<std::size_t>(b, "max_attempts", cfg.backend.retry.max_attempts);
    cfg.backend.retry.backoff_initial_ms =
        get_or<std::size_t>(b, "backoff_initial_ms", cfg.backend.retry.backoff_initial_ms);
    cfg.backend.rate_per_minute =
        get_or<std::size_t>(b, "rate_per_minute", cfg.backend.rate_per_minute);
  }
  if (doc.contains("schedule")) {
    const auto& s = doc["schedule"];
    cfg.mix_k = get_or<std::size_t>(s, "mix_k", cfg.mix_k);
    cfg.dynmix_total = get_or<std::size_t>(s, "dynmix_total", cfg.dynmix_total);
    cfg.seq_k = get_or<std::size_t>(s, "seq_k", cfg.seq_k);
    cfg.seq_order = get_or<std::string>(s, "seq_order", "");
    cfg.system_prompt = get_or<std::string>(s, "system_prompt", "");
  }
  if (doc.contains("baseline")) {
    for (const auto& [key, value] : doc["baseline"].items()) {
      cfg.baseline[kind_from_string(key)] = value.get<double>();
    }
  }

  // Canonical hash: sorted-key serialization of the parsed document.
  nlohmann::json sorted = nlohmann::json::parse(doc.dump());
  cfg.config_hash = sha256_hex(sorted.dump());
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  return from_json(parse_toml_file(path));
}

GeneratorConfig RunConfig::generator_config() const {
  GeneratorConfig gen = GeneratorConfig::with_defaults();
  gen.char_budget = char_budget;
  if (!gazetteer_path.empty()) gen.gazetteer = read_lines(gazetteer_path);
  if (!synonyms_path.empty()) {
    gen.paraphraser = std::make_shared<RuleBasedParaphraser>(
        RuleBasedParaphraser::load_synonyms(synonyms_path));
  }
  return gen;
}

std::string RunConfig::resolved_challenge_dir() const {
  if (!challenge_dir.empty()) return challenge_dir;
  return (fs::path(output_dir) / "challenge").string();
}

namespace {

VerdictLexicon lexicon_for(const RunConfig& cfg) {
  return cfg.lexicon_path.empty() ? VerdictLexicon::builtin()
                                  : VerdictLexicon::load(cfg.lexicon_path);
}

std::unique_ptr<Backend> make_backend(const RunConfig& cfg, const ModelProfile& profile,
                                      std::uint64_t seed) {
  if (cfg.backend_kind == "mock") {
    return MockBackend::parse(cfg.mock_policy, profile, seed);
  }
  if (cfg.backend_kind == "http") {
    if (cfg.offline) {
      // Allowed: requests must come from the cache; construction may still
      // need auth for the (unused) client, so skip the env check by moving
      // validation to run_eval via the offline flag.
      BackendProfile p = cfg.backend;
      p.auth_env.clear();
      return std::make_unique<HttpBackend>(p);
    }
    return std::make_unique<HttpBackend>(cfg.backend);
  }
  throw ValidationError("unknown backend kind '" + cfg.backend_kind + "'");
}

std::string premise_for(const Example& ex, const TableMap& tables, const RunConfig& cfg) {
  auto it = tables.find(ex.table_id);
  if (it == tables.end()) {
    throw ValidationError("example '" + ex.id + "' references unknown table '" +
                          ex.table_id + "'");
  }
  RenderOptions render{cfg.plural_keys};
  Table pruned = cfg.drr_k > 0 ? drr_top_k(it->second, ex.hypothesis, cfg.drr_k)
                               : it->second;
  return render_premise(pruned, render);
}

int cmd_perturb(const RunConfig& cfg, const std::vector<PerturbationKind>& kinds) {
  Dataset source = load_dataset_jsonl(cfg.dataset_path);
  ChallengeSetOptions opts;
  opts.cap = cfg.cap;
  opts.train_size = cfg.train_size;
  opts.test_size = cfg.test_size;
  opts.seed = cfg.seed;
  opts.generator = cfg.generator_config();

  for (auto kind : kinds) {
    ChallengeSet cs = build_challenge_set(source, kind, opts);
    std::string dir = (fs::path(cfg.resolved_challenge_dir()) / kind_name(kind)).string();
    save_challenge_set(cs, dir, opts, cfg.config_hash);
    std::cout << "perturb " << kind_name(kind) << ": train=" << cs.train.size()
              << " test=" << cs.test.size() << " -> " << dir << "\n";
  }
  return kExitOk;
}

int cmd_sample(const RunConfig& cfg, const std::string& input, std::size_t k,
               const std::string& kernel_csv, bool greedy) {
  std::vector<std::string> items;
  if (input.size() > 6 && input.substr(input.size() - 6) == ".jsonl") {
    Dataset d = load_dataset_jsonl(input);
    for (const auto& ex : d.examples) items.push_back(ex.hypothesis);
  } else {
    items = read_lines(input);
  }
  if (items.empty()) throw ValidationError("sample: no items in " + input);

  Kernel kernel = build_kernel(items);
  if (!kernel_csv.empty()) dump_kernel_csv(kernel, kernel_csv);

  std::vector<std::size_t> picked =
      greedy ? greedy_map(kernel, k) : sample_k_dpp(kernel, k, cfg.seed);

  fs::create_directories(cfg.output_dir);
  ordered_json j;
  j["tool_version"] = kToolVersion;
  j["config_hash"] = cfg.config_hash;
  j["method"] = greedy ? "greedy" : "k-dpp";
  j["seed"] = cfg.seed;
  j["k"] = k;
  j["indices"] = picked;
  std::ofstream out(fs::path(cfg.output_dir) / "sample.json", std::ios::binary);
  out << j.dump(2) << '\n';
  std::cout << "sample: " << picked.size() << " of " << items.size() << " items -> "
            << (fs::path(cfg.output_dir) / "sample.json").string() << "\n";
  return kExitOk;
}

std::vector<ChallengeSet> load_challenge_sets(const RunConfig& cfg,
                                              const std::vector<PerturbationKind>& kinds) {
  std::vector<ChallengeSet> sets;
  for (auto kind : kinds) {
    std::string dir = (fs::path(cfg.resolved_challenge_dir()) / kind_name(kind)).string();
    sets.push_back(load_challenge_set(dir));
  }
  return sets;
}

int cmd_plan(const RunConfig& cfg, const std::string& matrix_path) {
  CrossTestMatrix matrix = load_matrix_csv(matrix_path);
  ScheduleScores scores = row_col_scores(matrix);
  SeqOrders orders = derive_orders(scores);
  std::vector<double> ratios = dynmix_ratios(matrix.baseline);

  fs::path out_dir = fs::path(cfg.output_dir) / "plan";
  fs::create_directories(out_dir);

  ordered_json plan;
  plan["tool_version"] = kToolVersion;
  plan["config_hash"] = cfg.config_hash;
  plan["matrix_kinds"] = [&] {
    std::vector<std::string> names;
    for (auto k : matrix.kinds) names.push_back(kind_name(k));
    return names;
  }();
  ordered_json score_json;
  for (std::size_t i = 0; i < scores.kinds.size(); ++i) {
    score_json[kind_name(scores.kinds[i])] = {{"col", scores.col[i]},
                                              {"row", scores.row[i]}};
  }
  plan["scores"] = std::move(score_json);
  plan["orders"] = {{"col_asc", order_string(orders.col_asc)},
                    {"col_dsc", order_string(orders.col_dsc)},
                    {"row_asc", order_string(orders.row_asc)},
                    {"row_dsc", order_string(orders.row_dsc)}};
  ordered_json ratio_json;
  for (std::size_t i = 0; i < matrix.kinds.size(); ++i) {
    ratio_json[kind_name(matrix.kinds[i])] = ratios[i];
  }
  plan["dynmix_ratios"] = std::move(ratio_json);

  // Training-set construction requires the challenge sets on disk; the plan
  // numbers above are still useful without them.
  bool have_sets = true;
  for (auto kind : matrix.kinds) {
    if (!fs::exists(fs::path(cfg.resolved_challenge_dir()) / kind_name(kind) /
                    "manifest.json")) {
      have_sets = false;
    }
  }

  if (have_sets) {
    std::vector<ChallengeSet> sets = load_challenge_sets(cfg, matrix.kinds);
    TableMap tables = load_tables_jsonl(cfg.tables_path);
    ManifestOptions mopts{cfg.drr_k, RenderOptions{cfg.plural_keys}};
    std::string system_prompt = cfg.system_prompt;
    if (system_prompt.empty()) {
      system_prompt = "You label premise-hypothesis pairs as Yes, No, or Neutral.";
    }

    auto emit = [&](const TrainingSet& ts, const std::string& stem) {
      save_training_set(ts, (out_dir / (stem + ".jsonl")).string());
      std::ofstream mf(out_dir / (stem + ".finetune.jsonl"), std::ios::binary);
      std::vector<std::string> warnings;
      export_finetune_manifest(ts, system_prompt, tables, mopts, mf, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << stem << ": " << w << "\n";
    };

    emit(build_mix(sets, cfg.mix_k, cfg.seed), "mix-" + std::to_string(cfg.mix_k));
    emit(build_dynmix(sets, cfg.dynmix_total, matrix.baseline, cfg.seed),
         "dynmix-" + std::to_string(cfg.dynmix_total));

    std::map<std::string, Order> seq_orders = {{"col-asc", orders.col_asc},
                                               {"col-dsc", orders.col_dsc},
                                               {"row-asc", orders.row_asc},
                                               {"row-dsc", orders.row_dsc}};
    if (!cfg.seq_order.empty()) {
      seq_orders = {{"explicit-" + cfg.seq_order, order_from_string(cfg.seq_order)}};
    }
    ordered_json seq_json;
    for (const auto& [name, order] : seq_orders) {
      auto stages = build_seq_plan(sets, order, cfg.seq_k, cfg.seed);
      std::vector<std::string> files;
      for (std::size_t t = 0; t < stages.size(); ++t) {
        std::string stem = "seq-" + name + "-stage" + std::to_string(t + 1) + "-" +
                           kind_name(order[t]);
        emit(stages[t], stem);
        files.push_back(stem + ".jsonl");
      }
      seq_json[name] = files;
    }
    plan["seq_stage_files"] = std::move(seq_json);
  } else {
    plan["note"] = "challenge sets not found; training files skipped";
  }

  std::ofstream out(out_dir / "plan.json", std::ios::binary);
  out << plan.dump(2) << '\n';
  std::cout << "plan -> " << (out_dir / "plan.json").string() << "\n";
  return kExitOk;
}

int cmd_prompt(const RunConfig& cfg) {
  TemplateAssets assets = TemplateAssets::load(
      (fs::path(cfg.assets_dir) / "prompts").string());
  ModelProfile profile = ModelProfile::by_name(cfg.profile);
  ExemplarPool pools;
  if (!cfg.exemplars_path.empty()) pools = ExemplarPool::load_jsonl(cfg.exemplars_path);
  PromptStrategy strategy = PromptStrategy::parse(cfg.strategy);
  PromptSpec spec = build_prompt(strategy, pools, profile, assets, cfg.seed);

  fs::create_directories(cfg.output_dir);
  std::string name = spec.strategy;
  std::replace(name.begin(), name.end(), ':', '_');
  fs::path path = fs::path(cfg.output_dir) / ("prompt_" + name + ".json");
  ordered_json j = spec.to_json();
  j["config_hash"] = cfg.config_hash;
  j["tool_version"] = kToolVersion;
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << '\n';
  std::cout << "prompt " << spec.strategy << " (" << spec.demonstrations.size()
            << " demos, ~" << spec.estimated_tokens << " tokens) -> " << path.string()
            << "\n";
  return kExitOk;
}

struct SetEval {
  std::string set_name;
  PerturbationKind kind;
  bool perturbed = false;
  std::vector<EvalItem> items;
};

int cmd_run(const RunConfig& cfg, const std::vector<PerturbationKind>& kinds) {
  TemplateAssets assets = TemplateAssets::load(
      (fs::path(cfg.assets_dir) / "prompts").string());
  ModelProfile profile = ModelProfile::by_name(cfg.profile);
  TableMap tables = load_tables_jsonl(cfg.tables_path);
  ExemplarPool pools;
  if (!cfg.exemplars_path.empty()) pools = ExemplarPool::load_jsonl(cfg.exemplars_path);
  PromptStrategy strategy = PromptStrategy::parse(cfg.strategy);
  VerdictLexicon lexicon = lexicon_for(cfg);

  BackendProfile backend_profile = cfg.backend;
  backend_profile.offline = cfg.offline;
  // Probe backend construction once so auth problems surface at startup.
  make_backend(cfg, profile, cfg.seed);

  std::unique_ptr<ResponseCache> cache;
  if (!cfg.cache_dir.empty()) cache = std::make_unique<ResponseCache>(cfg.cache_dir);

  // Assemble Q and Q' item lists per kind.
  std::vector<SetEval> sets;
  for (auto kind : kinds) {
    ChallengeSet cs = load_challenge_set(
        (fs::path(cfg.resolved_challenge_dir()) / kind_name(kind)).string());
    SetEval q{"Q:" + kind_name(kind), kind, true, {}};
    for (const auto& ex : cs.test) q.items.push_back({ex, premise_for(ex, tables, cfg)});
    SetEval qp{"Qprime:" + kind_name(kind), kind, false, {}};
    for (const auto& ex : cs.test_unperturbed) {
      qp.items.push_back({ex, premise_for(ex, tables, cfg)});
    }
    sets.push_back(std::move(q));
    sets.push_back(std::move(qp));
  }

  fs::path run_dir = fs::path(cfg.output_dir) / "run";
  fs::create_directories(run_dir);

  EvalReport report;
  report.strategy = strategy.to_string();
  report.backend = backend->name();
  report.profile = profile.name;
  report.seed = cfg.seed;
  report.config_hash = cfg.config_hash;

  std::ofstream verdicts_out(run_dir / "verdicts.jsonl", std::ios::binary);
  std::ofstream responses_out(run_dir / "responses.jsonl", std::ios::binary);
  std::map<PerturbationKind, double> q_accuracy;

  for (auto& set : sets) {
    PromptStrategy set_strategy = strategy;
    if (strategy.type == PromptStrategy::Type::Semp) set_strategy.semp_kind = set.kind;

    SetResult result;
    result.set_name = set.set_name;
    result.count = set.items.size();

    // One evaluation per seed; accuracies averaged, confusion counts pooled.
    for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
      std::uint64_t rep_seed = cfg.seed + rep;
      PromptSpec spec = build_prompt(set_strategy, pools, profile, assets, rep_seed);
      auto responses = run_eval(spec, set.items, profile, backend_profile, *backend,
                                cfg.parallelism, cache.get());

      std::vector<Verdict> verdicts;
      std::vector<Label> golds;
      for (std::size_t i = 0; i < responses.size(); ++i) {
        Verdict v =
            responses[i].ok ? extract_answer(responses[i].text, lexicon) : Verdict{};
        golds.push_back(set.items[i].example.label);

        ordered_json vj;
        vj["example_id"] = set.items[i].example.id;
        vj["set"] = set.set_name;
        vj["seed"] = rep_seed;
        vj["gold"] = std::string(1, label_code(set.items[i].example.label));
        vj["verdict"] = v.label ? std::string(1, label_code(*v.label)) : std::string("U");
        vj["matched_phrase"] = v.matched_phrase;
        vj["marker_found"] = v.marker_found;
        verdicts_out << vj.dump() << '\n';

        ordered_json rj;
        rj["example_id"] = responses[i].example_id;
        rj["request_hash"] = responses[i].request_hash;
        rj["text"] = responses[i].text;
        rj["latency_ms"] = responses[i].latency_ms;
        rj["ok"] = responses[i].ok;
        responses_out << rj.dump() << '\n';

        verdicts.push_back(std::move(v));
      }

      result.per_seed.push_back(accuracy(verdicts, golds));
      ConfusionMatrix cm = confusion(verdicts, golds);
      for (int g = 0; g < 3; ++g) {
        for (int p = 0; p < 3; ++p) result.confusion.counts[g][p] += cm.counts[g][p];
      }
      result.confusion.unparseable += cm.unparseable;
    }
    double sum = 0.0;
    for (double v : result.per_seed) sum += v;
    result.accuracy = sum / static_cast<double>(result.per_seed.size());
    if (set.perturbed) q_accuracy[set.kind] = result.accuracy * 100.0;
    report.results.push_back(std::move(result));
  }

  // mu needs a baseline entry for every evaluated kind.
  bool baseline_complete = !kinds.empty();
  std::map<PerturbationKind, double> baseline;
  for (auto kind : kinds) {
    auto it = cfg.baseline.find(kind);
    if (it == cfg.baseline.end()) {
      baseline_complete = false;
      break;
    }
    baseline[kind] = it->second;
  }
  if (baseline_complete) report.mu = mu_score(q_accuracy, baseline);

  report.write_bundle(run_dir.string());
  for (const auto& r : report.results) {
    std::cout << r.set_name << ": accuracy " << format_fixed(r.accuracy, 4) << " (n="
              << r.count << ")\n";
  }
  if (report.mu) std::cout << "mu: " << format_fixed(*report.mu, 2) << " points\n";
  std::cout << "report -> " << (run_dir / "report.json").string() << "\n";
  return kExitOk;
}

int cmd_extract(const RunConfig& cfg, const std::string& input, const std::string& output) {
  VerdictLexicon lexicon = lexicon_for(cfg);
  std::ifstream in(input, std::ios::binary);
  if (!in) throw ParseError("cannot open responses file: " + input);
  std::ofstream out(output, std::ios::binary);
  if (!out) throw ParseError("cannot write verdicts file: " + output);

  std::string line;
  std::size_t line_no = 0, unparseable = 0, total = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("responses line " + std::to_string(line_no) + ": " + e.what());
    }
    Verdict v = extract_answer(j.value("text", ""), lexicon);
    ++total;
    if (!v.label) ++unparseable;
    ordered_json vj;
    vj["example_id"] = j.value("example_id", "");
    vj["verdict"] = v.label ? std::string(1, label_code(*v.label)) : std::string("U");
    vj["matched_phrase"] = v.matched_phrase;
    vj["marker_found"] = v.marker_found;
    out << vj.dump() << '\n';
  }
  std::cout << "extract: " << total << " responses, " << unparseable << " unparseable -> "
            << output << "\n";
  return kExitOk;
}

int cmd_report(const RunConfig& cfg, const std::string& verdicts_path,
               const std::string& gold_path, const std::string& set_name) {
  Dataset gold = load_dataset_jsonl(gold_path);
  std::map<std::string, Label> gold_by_id;
  for (const auto& ex : gold.examples) gold_by_id[ex.id] = ex.label;

  std::vector<Verdict> verdicts;
  std::vector<Label> golds;
  for (const auto& line : read_lines(verdicts_path)) {
    nlohmann::json j = nlohmann::json::parse(line);
    std::string id = j.at("example_id").get<std::string>();
    auto it = gold_by_id.find(id);
    if (it == gold_by_id.end()) {
      throw ValidationError("verdict for unknown example '" + id + "'");
    }
    Verdict v;
    std::string code = j.at("verdict").get<std::string>();
    if (code != "U") v.label = label_from_code(code);
    verdicts.push_back(v);
    golds.push_back(it->second);
  }

  EvalReport report;
  report.strategy = "external";
  report.backend = "ingested";
  report.profile = "-";
  report.seed = cfg.seed;
  report.config_hash = cfg.config_hash;
  SetResult r;
  r.set_name = set_name;
  r.count = verdicts.size();
  r.accuracy = accuracy(verdicts, golds);
  r.confusion = confusion(verdicts, golds);
  report.results.push_back(std::move(r));
  fs::path dir = fs::path(cfg.output_dir) / "report";
  report.write_bundle(dir.string());
  std::cout << set_name << ": accuracy "
            << format_fixed(report.results[0].accuracy, 4) << " -> "
            << (dir / "report.json").string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"inoculation workbench: challenge sets, schedules, prompts, and evaluation "
               "for perturbation-robust tabular NLI"};
  app.set_version_flag("--version", std::string(kToolVersion));

  std::string config_path;
  std::string out_override;
  std::int64_t seed_override = -1;
  std::int64_t parallelism_override = -1;
  bool offline_flag = false;
  app.add_option("--config", config_path, "TOML run configuration");
  app.add_option("--seed", seed_override, "override the configured seed");
  app.add_option("--out", out_override, "override the output directory");
  app.add_option("--parallelism", parallelism_override, "override request parallelism");
  app.add_flag("--offline", offline_flag, "forbid network access (cache/mock only)");

  // perturb
  auto* perturb_cmd = app.add_subcommand("perturb", "build challenge sets per kind");
  std::string kinds_arg;
  perturb_cmd->add_option("--kinds", kinds_arg, "comma-separated kinds (default: config)");

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "diverse subset selection via k-DPP");
  std::string sample_input, kernel_csv;
  std::size_t sample_k = 0;
  bool sample_greedy = false;
  sample_cmd->add_option("--input", sample_input, "JSONL dataset or plain text lines")
      ->required();
  sample_cmd->add_option("--k", sample_k, "subset size")->required();
  sample_cmd->add_option("--kernel-csv", kernel_csv, "dump the similarity kernel");
  sample_cmd->add_flag("--greedy", sample_greedy, "use the deterministic greedy picker");

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "scores, orders, ratios, training files");
  std::string matrix_path;
  plan_cmd->add_option("--matrix", matrix_path, "cross-test accuracy CSV")->required();

  // prompt
  app.add_subcommand("prompt", "build and dump the configured prompt");

  // run
  auto* run_cmd = app.add_subcommand("run", "end-to-end evaluation over Q and Q' sets");
  std::string run_kinds_arg;
  std::string strategy_override;
  run_cmd->add_option("--kinds", run_kinds_arg, "comma-separated kinds (default: config)");
  run_cmd->add_option("--strategy", strategy_override, "override the prompt strategy");

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "parse raw responses into verdicts");
  std::string extract_in, extract_out;
  extract_cmd->add_option("--input", extract_in, "responses JSONL")->required();
  extract_cmd->add_option("--output", extract_out, "verdicts JSONL")->required();

  // report
  auto* report_cmd = app.add_subcommand("report", "score ingested verdicts against gold");
  std::string report_verdicts, report_gold, report_set = "ingested";
  report_cmd->add_option("--verdicts", report_verdicts, "verdicts JSONL")->required();
  report_cmd->add_option("--gold", report_gold, "gold dataset JSONL")->required();
  report_cmd->add_option("--set-name", report_set, "label for the report row");

  app.require_subcommand(1);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig::from_json(ordered_json::object())
                                        : RunConfig::load(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (parallelism_override > 0) {
      cfg.parallelism = static_cast<std::size_t>(parallelism_override);
    }
    if (offline_flag) cfg.offline = true;
    if (!strategy_override.empty()) cfg.strategy = strategy_override;

    auto parse_kinds = [&](const std::string& arg) {
      if (arg.empty()) return cfg.kinds;
      std::vector<PerturbationKind> kinds;
      std::string cur;
      for (char c : arg + ",") {
        if (c == ',') {
          if (!trim(cur).empty()) kinds.push_back(kind_from_string(trim(cur)));
          cur.clear();
        } else {
          cur.push_back(c);
        }
      }
      return kinds;
    };

    if (perturb_cmd->parsed()) return cmd_perturb(cfg, parse_kinds(kinds_arg));
    if (sample_cmd->parsed()) {
      return cmd_sample(cfg, sample_input, sample_k, kernel_csv, sample_greedy);
    }
    if (plan_cmd->parsed()) return cmd_plan(cfg, matrix_path);
    if (app.get_subcommand("prompt")->parsed()) return cmd_prompt(cfg);
    if (run_cmd->parsed()) return cmd_run(cfg, parse_kinds(run_kinds_arg));
    if (extract_cmd->parsed()) return cmd_extract(cfg, extract_in, extract_out);
    if (report_cmd->parsed()) {
      return cmd_report(cfg, report_verdicts, report_gold, report_set);
    }
    return kExitValidation;
  } catch (const InsufficientSamplesError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInsufficientData;
  } catch (const RankDeficientError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInsufficientData;
  } catch (const BackendError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace inoc
