#ifndef INOC_CORPUS_HPP
#define INOC_CORPUS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace inoc {

enum class Label { Entail, Contradict, Neutral };

char label_code(Label l);                       // 'E' / 'C' / 'N'
Label label_from_code(const std::string& code); // throws ParseError on anything else

// Key-value table premise. Row order is preserved from the source file.
struct Table {
  std::string id;
  std::string title;
  std::vector<std::pair<std::string, std::string>> rows;
};

using TableMap = std::map<std::string, Table>;

// One NLI instance. `perturbation` is the single-letter kind code and is
// set iff `parent_id` is set (the unperturbed ancestor).
struct Example {
  std::string id;
  std::string table_id;
  std::string hypothesis;
  Label label = Label::Neutral;
  std::optional<std::string> perturbation;
  std::optional<std::string> parent_id;
};

struct Dataset {
  std::string name;
  std::string split_tag;
  std::vector<Example> examples;
};

// JSONL persistence. One record per line, UTF-8, LF endings. Saving is
// canonical: fixed key order, compact separators, so load -> save -> load
// is a byte-level fixpoint.
Dataset load_dataset_jsonl(const std::string& path, const std::string& name = "",
                           const std::string& split_tag = "");
void save_dataset_jsonl(const Dataset& ds, const std::string& path);
std::string example_to_jsonl(const Example& ex);

TableMap load_tables_jsonl(const std::string& path);
void save_tables_jsonl(const TableMap& tables, const std::string& path);

struct RenderOptions {
  // Keys rendered with "are" instead of "is".
  std::vector<std::string> plural_keys;
};

// One sentence per row, "The <key> of <title> is <value>.", sentences joined
// by two spaces. Empty values render (and get a lint warning) rather than fail.
std::string render_premise(const Table& table, const RenderOptions& opts = {},
                           std::vector<std::string>* warnings = nullptr);

// Distracting-row removal: keep the k rows most relevant to the hypothesis.
// Relevance is the count of distinct non-stopword hypothesis tokens appearing
// in the row's key+value tokens; descending score, ties by original row index.
// Tables with at most k rows are returned unchanged.
Table drr_top_k(const Table& table, const std::string& hypothesis, std::size_t k = 8);

}  // namespace inoc

#endif
