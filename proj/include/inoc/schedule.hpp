#ifndef INOC_SCHEDULE_HPP
#define INOC_SCHEDULE_HPP

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "inoc/corpus.hpp"
#include "inoc/perturb.hpp"

namespace inoc {

// Accuracy grid: baseline per kind plus cell[i][j] = accuracy of the model
// fine-tuned on kind i's train split, tested on kind j's test split.
// Values are on the 0-100 scale.
struct CrossTestMatrix {
  std::vector<PerturbationKind> kinds;
  std::vector<double> baseline;
  std::vector<std::vector<double>> cell;

  std::size_t index_of(PerturbationKind k) const;
};

// CSV format: header "train/test,<kind>,..."; first data row "baseline";
// then one row per training kind.
CrossTestMatrix load_matrix_csv(const std::string& path);
void save_matrix_csv(const CrossTestMatrix& m, const std::string& path);

// Average accuracy-improvement points, diagonal excluded. col[d]: how much
// training on the *other* kinds helps kind d; row[d]: how much training on
// kind d helps the other kinds.
struct ScheduleScores {
  std::vector<PerturbationKind> kinds;
  std::vector<double> row;
  std::vector<double> col;
};

ScheduleScores row_col_scores(const CrossTestMatrix& m);

using Order = std::vector<PerturbationKind>;

struct SeqOrders {
  Order col_asc;
  Order col_dsc;
  Order row_asc;
  Order row_dsc;
};

// Stable sorts by the named score; ties fall back to canonical kind order.
SeqOrders derive_orders(const ScheduleScores& scores);

std::string order_string(const Order& order);       // e.g. "scnlm"
Order order_from_string(const std::string& s);

// Error-rate-proportional sampling ratios: (100 - baseline_j) normalized
// to sum 1.
std::vector<double> dynmix_ratios(const std::vector<double>& baseline);

// Largest-remainder apportionment of total_k across the ratios; ties by
// canonical kind order. Counts sum to exactly total_k.
std::vector<std::size_t> largest_remainder_counts(const std::vector<double>& ratios,
                                                  std::size_t total_k,
                                                  const std::vector<PerturbationKind>& kinds);

struct TrainingSet {
  std::vector<Example> entries;
  std::map<PerturbationKind, std::size_t> composition;
  std::size_t total = 0;
  std::uint64_t seed = 0;
  std::string strategy;  // "mix" | "dynmix" | "seq"
  Order order;           // seq stages only
};

// k uniform draws without replacement from every train split, concatenated
// and shuffled.
TrainingSet build_mix(const std::vector<ChallengeSet>& sets, std::size_t k,
                      std::uint64_t seed);

// Mix with per-kind counts apportioned from the baseline error rates.
TrainingSet build_dynmix(const std::vector<ChallengeSet>& sets, std::size_t total_k,
                         const std::vector<double>& baseline, std::uint64_t seed);

// One stage (training file) per kind, in the requested order.
std::vector<TrainingSet> build_seq_plan(const std::vector<ChallengeSet>& sets,
                                        const Order& order, std::size_t k,
                                        std::uint64_t seed);

void save_training_set(const TrainingSet& ts, const std::string& path);

struct ManifestOptions {
  std::size_t drr_k = 8;  // 0 disables premise pruning
  RenderOptions render;
};

// Chat-format fine-tune manifest: one JSON object per line with a
// system/user/assistant "messages" array; gold labels become
// "Answer: Yes|No|Neutral". Warns when the label mix strays more than 10%
// from uniform.
void export_finetune_manifest(const TrainingSet& ts, const std::string& system_prompt,
                              const TableMap& tables, const ManifestOptions& opts,
                              std::ostream& out,
                              std::vector<std::string>* warnings = nullptr);

}  // namespace inoc

#endif
