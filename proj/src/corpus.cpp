#include "inoc/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "inoc/errors.hpp"
#include "inoc/text.hpp"

namespace inoc {

using nlohmann::ordered_json;

char label_code(Label l) {
  switch (l) {
    case Label::Entail: return 'E';
    case Label::Contradict: return 'C';
    case Label::Neutral: return 'N';
  }
  return '?';
}

Label label_from_code(const std::string& code) {
  if (code == "E") return Label::Entail;
  if (code == "C") return Label::Contradict;
  if (code == "N") return Label::Neutral;
  throw ParseError("unknown label '" + code + "' (expected E, C, or N)");
}

namespace {

std::string get_string(const ordered_json& j, const char* key, std::size_t line_no) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw ParseError("line " + std::to_string(line_no) + ": missing or non-string field '" +
                     key + "'");
  }
  return j[key].get<std::string>();
}

Example parse_example(const std::string& line, std::size_t line_no) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
  }
  Example ex;
  ex.id = get_string(j, "id", line_no);
  ex.table_id = get_string(j, "table_id", line_no);
  ex.hypothesis = get_string(j, "hypothesis", line_no);
  if (ex.hypothesis.empty()) {
    throw ParseError("line " + std::to_string(line_no) + ": empty hypothesis");
  }
  ex.label = label_from_code(get_string(j, "label", line_no));
  if (j.contains("perturbation") && !j["perturbation"].is_null()) {
    ex.perturbation = j["perturbation"].get<std::string>();
  }
  if (j.contains("parent_id") && !j["parent_id"].is_null()) {
    ex.parent_id = j["parent_id"].get<std::string>();
  }
  if (ex.perturbation.has_value() != ex.parent_id.has_value()) {
    throw ParseError("line " + std::to_string(line_no) +
                     ": perturbation and parent_id must be set together (id '" + ex.id + "')");
  }
  return ex;
}

}  // namespace

Dataset load_dataset_jsonl(const std::string& path, const std::string& name,
                           const std::string& split_tag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open dataset file: " + path);

  Dataset ds;
  ds.name = name.empty() ? std::filesystem::path(path).stem().string() : name;
  ds.split_tag = split_tag.empty() ? ds.name : split_tag;

  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    Example ex = parse_example(line, line_no);
    auto [it, inserted] = seen.emplace(ex.id, line_no);
    if (!inserted) {
      throw ParseError("duplicate id '" + ex.id + "' on lines " +
                       std::to_string(it->second) + " and " + std::to_string(line_no));
    }
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

std::string example_to_jsonl(const Example& ex) {
  ordered_json j;
  j["id"] = ex.id;
  j["table_id"] = ex.table_id;
  j["hypothesis"] = ex.hypothesis;
  j["label"] = std::string(1, label_code(ex.label));
  j["perturbation"] = ex.perturbation ? ordered_json(*ex.perturbation) : ordered_json(nullptr);
  j["parent_id"] = ex.parent_id ? ordered_json(*ex.parent_id) : ordered_json(nullptr);
  return j.dump();
}

void save_dataset_jsonl(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write dataset file: " + path);
  for (const auto& ex : ds.examples) out << example_to_jsonl(ex) << '\n';
}

TableMap load_tables_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open tables file: " + path);

  TableMap tables;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    Table t;
    t.id = get_string(j, "id", line_no);
    t.title = get_string(j, "title", line_no);
    if (!j.contains("rows") || !j["rows"].is_array() || j["rows"].empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": table '" + t.id +
                       "' needs a non-empty rows array");
    }
    for (const auto& row : j["rows"]) {
      if (!row.is_array() || row.size() != 2 || !row[0].is_string() || !row[1].is_string()) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": each row must be a [key, value] string pair");
      }
      std::string key = row[0].get<std::string>();
      if (key.empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": empty row key in table '" +
                         t.id + "'");
      }
      t.rows.emplace_back(key, row[1].get<std::string>());
    }
    auto [it, inserted] = seen.emplace(t.id, line_no);
    if (!inserted) {
      throw ParseError("duplicate id '" + t.id + "' on lines " + std::to_string(it->second) +
                       " and " + std::to_string(line_no));
    }
    tables.emplace(t.id, std::move(t));
  }
  return tables;
}

void save_tables_jsonl(const TableMap& tables, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write tables file: " + path);
  for (const auto& [id, t] : tables) {
    ordered_json j;
    j["id"] = t.id;
    j["title"] = t.title;
    ordered_json rows = ordered_json::array();
    for (const auto& [k, v] : t.rows) rows.push_back(ordered_json::array({k, v}));
    j["rows"] = std::move(rows);
    out << j.dump() << '\n';
  }
}

std::string render_premise(const Table& table, const RenderOptions& opts,
                           std::vector<std::string>* warnings) {
  std::string out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& [key, value] = table.rows[i];
    if (value.empty() && warnings) {
      warnings->push_back("table '" + table.id + "': empty value for key '" + key + "'");
    }
    bool plural = std::find(opts.plural_keys.begin(), opts.plural_keys.end(), key) !=
                  opts.plural_keys.end();
    if (i) out += "  ";
    out += "The " + key + " of " + table.title + (plural ? " are " : " is ") + value + ".";
  }
  return out;
}

Table drr_top_k(const Table& table, const std::string& hypothesis, std::size_t k) {
  if (table.rows.size() <= k) return table;

  std::vector<std::string> hyp_tokens;
  for (const auto& tok : content_tokens(hypothesis)) {
    if (!is_stopword(tok)) hyp_tokens.push_back(tok);
  }
  std::sort(hyp_tokens.begin(), hyp_tokens.end());
  hyp_tokens.erase(std::unique(hyp_tokens.begin(), hyp_tokens.end()), hyp_tokens.end());

  struct Scored {
    std::size_t index;
    std::size_t score;
  };
  std::vector<Scored> scored;
  scored.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& [key, value] = table.rows[i];
    std::unordered_set<std::string> row_tokens;
    for (const auto& t : content_tokens(key)) row_tokens.insert(t);
    for (const auto& t : content_tokens(value)) row_tokens.insert(t);
    std::size_t score = 0;
    for (const auto& t : hyp_tokens) score += row_tokens.count(t);
    scored.push_back({i, score});
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) { return a.score > b.score; });

  Table out;
  out.id = table.id;
  out.title = table.title;
  for (std::size_t i = 0; i < k; ++i) out.rows.push_back(table.rows[scored[i].index]);
  return out;
}

}  // namespace inoc
