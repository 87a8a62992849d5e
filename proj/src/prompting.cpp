#include "inoc/prompting.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "inoc/errors.hpp"
#include "inoc/rng.hpp"
#include "inoc/text.hpp"

namespace inoc {

namespace {

const std::vector<PerturbationKind>& prompt_kinds() {
  // MESP/SEMP cover the five in-distribution kinds.
  static const std::vector<PerturbationKind> kinds = {
      PerturbationKind::Char, PerturbationKind::Neg, PerturbationKind::Num,
      PerturbationKind::Loc, PerturbationKind::Stan};
  return kinds;
}

// Round-robin distribution of `total` demonstrations across the original
// pool and the five kind pools: O first, then canonical kind order.
std::vector<std::pair<std::string, std::size_t>> mesp_counts(std::size_t total) {
  std::vector<std::string> sources = {"O"};
  for (auto k : prompt_kinds()) sources.push_back(kind_name(k));
  std::vector<std::pair<std::string, std::size_t>> counts;
  for (const auto& s : sources) counts.emplace_back(s, total / sources.size());
  for (std::size_t i = 0; i < total % sources.size(); ++i) ++counts[i].second;
  return counts;
}

// Exact per-source-per-label allocation satisfying source totals, label
// targets, and availability. Sizes here are tiny (<= 6 sources, 3 labels),
// so a depth-first search is plenty.
bool allocate_balanced(const std::vector<std::array<std::size_t, 3>>& avail,
                       const std::vector<std::size_t>& source_counts,
                       std::array<std::size_t, 3> label_targets, std::size_t source,
                       std::vector<std::array<std::size_t, 3>>& out) {
  if (source == source_counts.size()) {
    return label_targets[0] == 0 && label_targets[1] == 0 && label_targets[2] == 0;
  }
  std::size_t need = source_counts[source];
  std::size_t max_e = std::min({avail[source][0], label_targets[0], need});
  for (std::size_t e = 0; e <= max_e; ++e) {
    std::size_t rem_after_e = need - e;
    std::size_t max_c = std::min({avail[source][1], label_targets[1], rem_after_e});
    for (std::size_t c = 0; c <= max_c; ++c) {
      std::size_t n = rem_after_e - c;
      if (n > avail[source][2] || n > label_targets[2]) continue;
      out[source] = {e, c, n};
      std::array<std::size_t, 3> next = {label_targets[0] - e, label_targets[1] - c,
                                         label_targets[2] - n};
      if (allocate_balanced(avail, source_counts, next, source + 1, out)) return true;
    }
  }
  return false;
}

}  // namespace

PromptStrategy PromptStrategy::parse(const std::string& s) {
  std::string upper;
  for (char c : s) upper.push_back(static_cast<char>(std::toupper(c)));
  PromptStrategy st;
  if (upper == "OP_ZS") {
    st.type = Type::OpZs;
  } else if (upper == "OP_COT") {
    st.type = Type::OpCot;
  } else if (upper == "MESP_MPI") {
    st.type = Type::MespMpi;
  } else if (upper == "MESP_MPE") {
    st.type = Type::MespMpe;
  } else if (upper.rfind("SEMP", 0) == 0) {
    st.type = Type::Semp;
    auto colon = s.find(':');
    if (colon == std::string::npos || colon + 1 >= s.size()) {
      throw ParseError("SEMP strategy needs a kind, e.g. SEMP:char");
    }
    st.semp_kind = kind_from_string(s.substr(colon + 1));
  } else {
    throw ParseError("unknown prompt strategy '" + s + "'");
  }
  return st;
}

std::string PromptStrategy::to_string() const {
  switch (type) {
    case Type::OpZs: return "OP_ZS";
    case Type::OpCot: return "OP_CoT";
    case Type::Semp: return "SEMP:" + kind_name(semp_kind);
    case Type::MespMpi: return "MESP_MPI";
    case Type::MespMpe: return "MESP_MPE";
  }
  return "?";
}

ExemplarPool ExemplarPool::load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open exemplar pool: " + path);
  ExemplarPool pool;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("exemplar line " + std::to_string(line_no) + ": " + e.what());
    }
    Exemplar ex;
    ex.premise = j.at("premise").get<std::string>();
    ex.hypothesis = j.at("hypothesis").get<std::string>();
    ex.label = label_from_code(j.at("label").get<std::string>());
    ex.explanation = j.value("explanation", std::string());
    std::string source = j.value("source", std::string("O"));
    if (source != "O") source = kind_name(kind_from_string(source));
    pool.by_source[source].push_back(std::move(ex));
  }
  return pool;
}

ModelProfile ModelProfile::gpt() {
  ModelProfile p;
  p.name = "gpt";
  p.title_word_verdicts = true;
  p.system_placement = true;
  p.mpi_demos = 10;
  p.mpe_demos = 15;
  return p;
}

ModelProfile ModelProfile::llama() {
  ModelProfile p;
  p.name = "llama";
  p.title_word_verdicts = false;
  p.system_placement = true;
  p.mpi_demos = 8;
  p.mpe_demos = 11;
  return p;
}

ModelProfile ModelProfile::generic() {
  ModelProfile p = gpt();
  p.name = "generic";
  p.system_placement = false;  // everything in a single user preamble
  return p;
}

ModelProfile ModelProfile::by_name(const std::string& name) {
  std::string lower = to_lower(name);
  if (lower == "gpt") return gpt();
  if (lower == "llama") return llama();
  if (lower == "generic") return generic();
  throw ParseError("unknown model profile '" + name + "'");
}

std::string ModelProfile::verdict_word(Label l) const {
  if (title_word_verdicts) {
    switch (l) {
      case Label::Entail: return "Yes";
      case Label::Contradict: return "No";
      case Label::Neutral: return "Neutral";
    }
  }
  switch (l) {
    case Label::Entail: return "yes";
    case Label::Contradict: return "no";
    case Label::Neutral: return "it is not possible to tell";
  }
  return "?";
}

TemplateAssets TemplateAssets::load(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw ParseError("prompt template directory not found: " + dir);
  }
  TemplateAssets assets;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    assets.texts[entry.path().stem().string()] = std::move(text);
  }
  return assets;
}

const std::string& TemplateAssets::get(const std::string& stem) const {
  auto it = texts.find(stem);
  if (it == texts.end()) throw ParseError("missing prompt template asset: " + stem + ".txt");
  return it->second;
}

std::string section_kind_name(SectionKind s) {
  switch (s) {
    case SectionKind::Task: return "task";
    case SectionKind::Awareness: return "awareness";
    case SectionKind::Limitation: return "limitation";
    case SectionKind::Answering: return "answering";
  }
  return "?";
}

std::size_t estimate_tokens(const std::string& text) {
  std::size_t words = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++words;
    }
  }
  return static_cast<std::size_t>(std::ceil(static_cast<double>(words) * 1.3));
}

std::vector<Exemplar> select_exemplars(const ExemplarPool& pools,
                                       const SelectionRequest& request) {
  // Capacity and coverage gates first; they name the binding constraint.
  for (const auto& [source, count] : request.counts) {
    auto it = pools.by_source.find(source);
    std::size_t have = it == pools.by_source.end() ? 0 : it->second.size();
    if (have < count) {
      throw ConstraintInfeasibleError("pool '" + source + "' holds " +
                                      std::to_string(have) + " exemplars, need " +
                                      std::to_string(count));
    }
  }
  if (request.mpi_coverage) {
    for (const auto& [source, exemplars] : pools.by_source) {
      if (source == "O" || exemplars.empty()) continue;
      bool covered = false;
      for (const auto& [cs, count] : request.counts) {
        if (cs == source && count >= 1) covered = true;
      }
      if (!covered) {
        throw ConstraintInfeasibleError(
            "coverage requires at least one exemplar from kind pool '" + source + "'");
      }
    }
  }

  Rng rng(request.seed);
  std::vector<Exemplar> out;

  if (!request.balance) {
    for (std::size_t s = 0; s < request.counts.size(); ++s) {
      const auto& [source, count] = request.counts[s];
      const auto& pool = pools.by_source.at(source);
      Rng child = rng.fork(s);
      for (std::size_t i : child.sample_indices(pool.size(), count)) {
        out.push_back(pool[i]);
      }
    }
    return out;
  }

  // Balanced mode: global per-label targets within 1 of uniform, then an
  // exact per-source allocation against availability.
  std::size_t total = 0;
  for (const auto& [_, count] : request.counts) total += count;
  std::array<std::size_t, 3> targets = {total / 3, total / 3, total / 3};
  for (std::size_t i = 0; i < total % 3; ++i) ++targets[i];

  std::vector<std::array<std::size_t, 3>> avail;
  std::vector<std::size_t> source_counts;
  for (const auto& [source, count] : request.counts) {
    const auto& pool = pools.by_source.at(source);
    std::array<std::size_t, 3> a = {0, 0, 0};
    for (const auto& ex : pool) ++a[static_cast<int>(ex.label)];
    avail.push_back(a);
    source_counts.push_back(count);
  }
  std::vector<std::array<std::size_t, 3>> alloc(request.counts.size());
  if (!allocate_balanced(avail, source_counts, targets, 0, alloc)) {
    throw ConstraintInfeasibleError(
        "label balance is infeasible for the requested per-source counts");
  }

  for (std::size_t s = 0; s < request.counts.size(); ++s) {
    const auto& pool = pools.by_source.at(request.counts[s].first);
    Rng child = rng.fork(s);
    for (int l = 0; l < 3; ++l) {
      std::vector<std::size_t> with_label;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (static_cast<int>(pool[i].label) == l) with_label.push_back(i);
      }
      Rng label_rng = child.fork(static_cast<std::uint64_t>(l));
      for (std::size_t i : label_rng.sample_indices(with_label.size(), alloc[s][l])) {
        out.push_back(pool[with_label[i]]);
      }
    }
  }
  return out;
}

PromptSpec build_prompt(const PromptStrategy& strategy, const ExemplarPool& pools,
                        const ModelProfile& profile, const TemplateAssets& assets,
                        std::uint64_t seed, const TokenEstimator& estimator) {
  const std::string task_stem = profile.title_word_verdicts ? "task_gpt" : "task_llama";
  const std::string answering_stem =
      profile.title_word_verdicts ? "answering_gpt" : "answering_llama";

  PromptSpec spec;
  spec.strategy = strategy.to_string();
  spec.profile = profile.name;

  auto add = [&](SectionKind kind, const std::string& text) {
    spec.sections.push_back({kind, text});
  };

  SelectionRequest request;
  request.seed = seed;

  switch (strategy.type) {
    case PromptStrategy::Type::OpZs:
      add(SectionKind::Task, assets.get(task_stem));
      add(SectionKind::Limitation, assets.get("limitation_zs"));
      add(SectionKind::Answering, assets.get(answering_stem));
      break;
    case PromptStrategy::Type::OpCot:
      add(SectionKind::Task, assets.get(task_stem));
      add(SectionKind::Limitation, assets.get("limitation_cot"));
      add(SectionKind::Answering, assets.get(answering_stem));
      request.counts = {{"O", profile.cot_demos}};
      break;
    case PromptStrategy::Type::Semp: {
      add(SectionKind::Task, assets.get(task_stem));
      add(SectionKind::Awareness,
          assets.get("aware_" + kind_name(strategy.semp_kind) + "_long"));
      add(SectionKind::Limitation, assets.get("limitation_mesp"));
      add(SectionKind::Answering, assets.get(answering_stem));
      request.counts = {{kind_name(strategy.semp_kind), profile.semp_challenge_demos},
                        {"O", profile.semp_original_demos}};
      break;
    }
    case PromptStrategy::Type::MespMpi:
    case PromptStrategy::Type::MespMpe: {
      bool mpi = strategy.type == PromptStrategy::Type::MespMpi;
      add(SectionKind::Task, assets.get(task_stem));
      std::string awareness;
      for (auto k : prompt_kinds()) {
        if (!awareness.empty()) awareness += "\n\n";
        awareness += assets.get("aware_" + kind_name(k) + (mpi ? "_long" : "_short"));
      }
      add(SectionKind::Awareness, awareness);
      add(SectionKind::Limitation, assets.get("limitation_mesp"));
      add(SectionKind::Answering, assets.get(answering_stem));
      request.counts = mesp_counts(mpi ? profile.mpi_demos : profile.mpe_demos);
      request.mpi_coverage = mpi;
      break;
    }
  }

  if (!request.counts.empty()) {
    spec.demonstrations = select_exemplars(pools, request);
  }

  const TokenEstimator& estimate = estimator ? estimator : TokenEstimator(estimate_tokens);
  std::size_t words = 0;
  for (const auto& s : spec.sections) words += estimate(s.text);
  for (const auto& d : spec.demonstrations) {
    words += estimate(d.premise) + estimate(d.hypothesis) + estimate(d.explanation);
  }
  spec.estimated_tokens = words;
  return spec;
}

nlohmann::ordered_json PromptSpec::to_json() const {
  nlohmann::ordered_json j;
  j["strategy"] = strategy;
  j["profile"] = profile;
  j["estimated_tokens"] = estimated_tokens;
  nlohmann::ordered_json secs = nlohmann::ordered_json::array();
  for (const auto& s : sections) {
    secs.push_back({{"name", section_kind_name(s.kind)}, {"text", s.text}});
  }
  j["sections"] = std::move(secs);
  nlohmann::ordered_json demos = nlohmann::ordered_json::array();
  for (const auto& d : demonstrations) {
    demos.push_back({{"premise", d.premise},
                     {"hypothesis", d.hypothesis},
                     {"label", std::string(1, label_code(d.label))},
                     {"explanation", d.explanation}});
  }
  j["demonstrations"] = std::move(demos);
  return j;
}

std::vector<ChatMessage> render_chat_request(const PromptSpec& spec, const Query& query,
                                             const ModelProfile& profile) {
  std::string preamble;
  for (const auto& s : spec.sections) {
    if (!preamble.empty()) preamble += "\n\n";
    preamble += s.text;
  }

  std::vector<ChatMessage> messages;
  messages.push_back({profile.system_placement ? "system" : "user", preamble});

  if (!spec.demonstrations.empty()) {
    messages.push_back({"user", "Here are some examples:"});
    for (const auto& d : spec.demonstrations) {
      messages.push_back({"user", "Premise: " + d.premise + "\nHypothesis: " + d.hypothesis});
      std::string reply;
      if (!d.explanation.empty()) reply += "E: " + d.explanation + "\n";
      reply += "A: " + profile.verdict_word(d.label);
      messages.push_back({"assistant", reply});
    }
  }

  messages.push_back(
      {"user", "Premise: " + query.premise + "\nHypothesis: " + query.hypothesis});
  return messages;
}

nlohmann::ordered_json messages_to_json(const std::vector<ChatMessage>& messages) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& m : messages) {
    arr.push_back({{"role", m.role}, {"content", m.content}});
  }
  return arr;
}

}  // namespace inoc
