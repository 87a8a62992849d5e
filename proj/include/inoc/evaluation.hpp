#ifndef INOC_EVALUATION_HPP
#define INOC_EVALUATION_HPP

#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "inoc/corpus.hpp"
#include "inoc/extraction.hpp"
#include "inoc/perturb.hpp"
#include "inoc/schedule.hpp"

namespace inoc {

// 3x3 gold-by-predicted counts over {E, C, N}; unparseable responses are
// tallied separately so the grid stays a true confusion matrix.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, 3>, 3> counts = {};
  std::size_t unparseable = 0;

  std::size_t total() const;
  std::size_t& at(Label gold, Label pred);
  std::size_t get(Label gold, Label pred) const;
};

// Fraction correct; Unparseable counts as wrong. Micro-F1 equals accuracy
// for single-label classification, so this is the paper-table metric.
double accuracy(const std::vector<Verdict>& preds, const std::vector<Label>& golds);

// Mean accuracy improvement over baseline across kinds, in percentage
// points (inputs on the 0-100 scale).
double mu_score(const std::map<PerturbationKind, double>& challenge_acc,
                const std::map<PerturbationKind, double>& baseline);

ConfusionMatrix confusion(const std::vector<Verdict>& preds,
                          const std::vector<Label>& golds);

// DOT digraph with nodes E/C/N and edges weighted by row-normalized
// percentages (one decimal). Rows with no parseable predictions emit no
// edges. Errors on an empty matrix.
void export_confusion_graph(const ConfusionMatrix& cm, std::ostream& out);

// Assemble a cross-test grid from per-(train, test) accuracy readings.
struct CrossTestCell {
  PerturbationKind train;
  PerturbationKind test;
  double accuracy;  // 0-100
};

CrossTestMatrix assemble_cross_test(const std::vector<PerturbationKind>& kinds,
                                    const std::vector<CrossTestCell>& cells,
                                    const std::vector<double>& baseline);

struct SetResult {
  std::string set_name;  // e.g. "Q:char", "Qprime:char"
  std::size_t count = 0;
  double accuracy = 0.0;            // mean over seeds (fraction)
  std::vector<double> per_seed;     // one accuracy per evaluation seed
  ConfusionMatrix confusion;        // counts pooled across seeds
};

struct EvalReport {
  std::vector<SetResult> results;
  std::optional<double> mu;  // percentage points; needs a baseline vector
  std::string strategy;
  std::string backend;
  std::string profile;
  std::uint64_t seed = 0;
  std::string config_hash;

  // report.json + report.md + confusion_<set>.dot files, all byte-stable
  // for identical inputs.
  void write_bundle(const std::string& dir) const;
};

}  // namespace inoc

#endif
