#include "inoc/schedule.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "inoc/errors.hpp"
#include "inoc/rng.hpp"
#include "inoc/text.hpp"

namespace inoc {

namespace {

std::size_t canonical_rank(PerturbationKind k) {
  const auto& order = canonical_kinds();
  return static_cast<std::size_t>(
      std::find(order.begin(), order.end(), k) - order.begin());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

double parse_accuracy(const std::string& cell, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument("trailing junk");
    if (v < 0.0 || v > 100.0) {
      throw ParseError("line " + std::to_string(line_no) + ": accuracy " + cell +
                       " outside [0,100]");
    }
    return v;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse accuracy '" +
                     cell + "'");
  }
}

const ChallengeSet& set_for_kind(const std::vector<ChallengeSet>& sets,
                                 PerturbationKind kind) {
  for (const auto& s : sets) {
    if (s.kind == kind) return s;
  }
  throw ValidationError("no challenge set provided for kind " + kind_name(kind));
}

std::vector<Example> draw_from_train(const ChallengeSet& cs, std::size_t k, Rng& rng) {
  if (cs.train.size() < k) {
    throw InsufficientSamplesError("train split for kind " + kind_name(cs.kind),
                                   cs.train.size(), k);
  }
  auto idx = rng.sample_indices(cs.train.size(), k);
  std::vector<Example> out;
  out.reserve(k);
  for (std::size_t i : idx) out.push_back(cs.train[i]);
  return out;
}

}  // namespace

std::size_t CrossTestMatrix::index_of(PerturbationKind k) const {
  auto it = std::find(kinds.begin(), kinds.end(), k);
  if (it == kinds.end()) {
    throw ValidationError("kind " + kind_name(k) + " not present in matrix");
  }
  return static_cast<std::size_t>(it - kinds.begin());
}

CrossTestMatrix load_matrix_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open matrix CSV: " + path);

  CrossTestMatrix m;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError("matrix CSV is empty: " + path);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv_line(line);
  if (header.size() < 2) throw ParseError("matrix CSV header needs at least one kind");
  for (std::size_t i = 1; i < header.size(); ++i) {
    m.kinds.push_back(kind_from_string(header[i]));
  }

  std::vector<bool> seen(m.kinds.size(), false);
  bool have_baseline = false;
  m.cell.assign(m.kinds.size(), {});
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != m.kinds.size() + 1) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(m.kinds.size() + 1) + " cells, got " +
                       std::to_string(cells.size()));
    }
    std::vector<double> values;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      values.push_back(parse_accuracy(cells[i], line_no));
    }
    if (to_lower(cells[0]) == "baseline") {
      if (have_baseline) throw ParseError("line " + std::to_string(line_no) +
                                          ": duplicate baseline row");
      m.baseline = values;
      have_baseline = true;
    } else {
      std::size_t idx = m.index_of(kind_from_string(cells[0]));
      if (seen[idx]) {
        throw ParseError("line " + std::to_string(line_no) + ": duplicate row for kind " +
                         cells[0]);
      }
      seen[idx] = true;
      m.cell[idx] = values;
    }
  }

  if (!have_baseline) throw ParseError("matrix CSV has no baseline row: " + path);
  for (std::size_t i = 0; i < m.kinds.size(); ++i) {
    if (!seen[i]) {
      throw ParseError("matrix CSV is missing the row for kind " + kind_name(m.kinds[i]));
    }
  }
  return m;
}

void save_matrix_csv(const CrossTestMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write matrix CSV: " + path);
  out << "train/test";
  for (auto k : m.kinds) out << ',' << kind_name(k);
  out << "\nbaseline";
  for (double v : m.baseline) out << ',' << format_fixed(v, 2);
  out << '\n';
  for (std::size_t i = 0; i < m.kinds.size(); ++i) {
    out << kind_name(m.kinds[i]);
    for (double v : m.cell[i]) out << ',' << format_fixed(v, 2);
    out << '\n';
  }
}

ScheduleScores row_col_scores(const CrossTestMatrix& m) {
  const std::size_t n = m.kinds.size();
  if (n < 2) throw ValidationError("row/col scores need at least two kinds");
  if (m.baseline.size() != n) throw ValidationError("matrix baseline is incomplete");
  for (const auto& row : m.cell) {
    if (row.size() != n) throw ValidationError("matrix grid is not square");
  }

  ScheduleScores s;
  s.kinds = m.kinds;
  s.row.assign(n, 0.0);
  s.col.assign(n, 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    double col_sum = 0.0, row_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == d) continue;  // diagonal excluded
      col_sum += m.cell[j][d] - m.baseline[d];
      row_sum += m.cell[d][j] - m.baseline[j];
    }
    s.col[d] = col_sum / static_cast<double>(n - 1);
    s.row[d] = row_sum / static_cast<double>(n - 1);
  }
  return s;
}

SeqOrders derive_orders(const ScheduleScores& scores) {
  auto sorted_by = [&](const std::vector<double>& key, bool ascending) {
    Order order = scores.kinds;
    std::stable_sort(order.begin(), order.end(),
                     [&](PerturbationKind a, PerturbationKind b) {
                       double ka = key[std::find(scores.kinds.begin(), scores.kinds.end(), a) -
                                       scores.kinds.begin()];
                       double kb = key[std::find(scores.kinds.begin(), scores.kinds.end(), b) -
                                       scores.kinds.begin()];
                       if (ka != kb) return ascending ? ka < kb : ka > kb;
                       return canonical_rank(a) < canonical_rank(b);
                     });
    return order;
  };
  SeqOrders out;
  out.col_asc = sorted_by(scores.col, true);
  out.col_dsc = sorted_by(scores.col, false);
  out.row_asc = sorted_by(scores.row, true);
  out.row_dsc = sorted_by(scores.row, false);
  return out;
}

std::string order_string(const Order& order) {
  std::string s;
  for (auto k : order) s.push_back(static_cast<char>(std::tolower(kind_code(k))));
  return s;
}

Order order_from_string(const std::string& s) {
  Order out;
  for (char c : s) {
    out.push_back(kind_from_code(static_cast<char>(std::toupper(c))));
  }
  return out;
}

std::vector<double> dynmix_ratios(const std::vector<double>& baseline) {
  if (baseline.empty()) throw ValidationError("dynmix_ratios: empty baseline");
  double total_error = 0.0;
  for (double b : baseline) {
    if (b < 0.0 || b > 100.0) {
      throw ValidationError("baseline accuracy " + std::to_string(b) + " outside [0,100]");
    }
    total_error += 100.0 - b;
  }
  if (total_error <= 0.0) {
    throw ValidationError("dynmix_ratios: all baselines at 100, ratio distribution degenerate");
  }
  std::vector<double> ratios;
  ratios.reserve(baseline.size());
  for (double b : baseline) ratios.push_back((100.0 - b) / total_error);
  return ratios;
}

std::vector<std::size_t> largest_remainder_counts(const std::vector<double>& ratios,
                                                  std::size_t total_k,
                                                  const std::vector<PerturbationKind>& kinds) {
  if (ratios.size() != kinds.size()) {
    throw ValidationError("ratio/kind length mismatch in apportionment");
  }
  const std::size_t n = ratios.size();
  std::vector<std::size_t> counts(n);
  std::vector<double> remainder(n);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double quota = static_cast<double>(total_k) * ratios[i];
    counts[i] = static_cast<std::size_t>(std::floor(quota));
    remainder[i] = quota - std::floor(quota);
    assigned += counts[i];
  }
  std::vector<std::size_t> by_remainder(n);
  std::iota(by_remainder.begin(), by_remainder.end(), 0);
  std::stable_sort(by_remainder.begin(), by_remainder.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
                     return canonical_rank(kinds[a]) < canonical_rank(kinds[b]);
                   });
  for (std::size_t i = 0; assigned < total_k; ++i) {
    ++counts[by_remainder[i % n]];
    ++assigned;
  }
  return counts;
}

TrainingSet build_mix(const std::vector<ChallengeSet>& sets, std::size_t k,
                      std::uint64_t seed) {
  TrainingSet ts;
  ts.strategy = "mix";
  ts.seed = seed;
  Rng rng(seed);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    Rng child = rng.fork(i);
    auto drawn = draw_from_train(sets[i], k, child);
    ts.composition[sets[i].kind] = drawn.size();
    ts.entries.insert(ts.entries.end(), drawn.begin(), drawn.end());
  }
  Rng shuffler = rng.fork(sets.size());
  shuffler.shuffle(ts.entries);
  ts.total = ts.entries.size();
  return ts;
}

TrainingSet build_dynmix(const std::vector<ChallengeSet>& sets, std::size_t total_k,
                         const std::vector<double>& baseline, std::uint64_t seed) {
  if (baseline.size() != sets.size()) {
    throw ValidationError("dynmix baseline must cover every challenge set");
  }
  std::vector<PerturbationKind> kinds;
  kinds.reserve(sets.size());
  for (const auto& s : sets) kinds.push_back(s.kind);

  auto ratios = dynmix_ratios(baseline);
  auto counts = largest_remainder_counts(ratios, total_k, kinds);

  TrainingSet ts;
  ts.strategy = "dynmix";
  ts.seed = seed;
  Rng rng(seed);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    Rng child = rng.fork(i);
    auto drawn = draw_from_train(sets[i], counts[i], child);
    ts.composition[sets[i].kind] = drawn.size();
    ts.entries.insert(ts.entries.end(), drawn.begin(), drawn.end());
  }
  Rng shuffler = rng.fork(sets.size());
  shuffler.shuffle(ts.entries);
  ts.total = ts.entries.size();
  return ts;
}

std::vector<TrainingSet> build_seq_plan(const std::vector<ChallengeSet>& sets,
                                        const Order& order, std::size_t k,
                                        std::uint64_t seed) {
  std::vector<TrainingSet> stages;
  Rng rng(seed);
  for (std::size_t t = 0; t < order.size(); ++t) {
    const ChallengeSet& cs = set_for_kind(sets, order[t]);
    Rng child = rng.fork(t);
    TrainingSet ts;
    ts.strategy = "seq";
    ts.seed = seed;
    ts.order = order;
    ts.entries = draw_from_train(cs, k, child);
    ts.composition[cs.kind] = ts.entries.size();
    ts.total = ts.entries.size();
    stages.push_back(std::move(ts));
  }
  return stages;
}

void save_training_set(const TrainingSet& ts, const std::string& path) {
  Dataset d;
  d.name = ts.strategy;
  d.examples = ts.entries;
  save_dataset_jsonl(d, path);
}

void export_finetune_manifest(const TrainingSet& ts, const std::string& system_prompt,
                              const TableMap& tables, const ManifestOptions& opts,
                              std::ostream& out, std::vector<std::string>* warnings) {
  std::size_t label_counts[3] = {0, 0, 0};
  for (const auto& ex : ts.entries) {
    auto it = tables.find(ex.table_id);
    if (it == tables.end()) {
      throw ValidationError("entry '" + ex.id + "' references unknown table '" +
                            ex.table_id + "'");
    }
    Table premise_table =
        opts.drr_k > 0 ? drr_top_k(it->second, ex.hypothesis, opts.drr_k) : it->second;
    std::string premise = render_premise(premise_table, opts.render, warnings);

    const char* answer = ex.label == Label::Entail      ? "Answer: Yes"
                         : ex.label == Label::Contradict ? "Answer: No"
                                                         : "Answer: Neutral";
    ++label_counts[static_cast<int>(ex.label)];

    nlohmann::ordered_json line;
    nlohmann::ordered_json messages = nlohmann::ordered_json::array();
    messages.push_back({{"role", "system"}, {"content", system_prompt}});
    messages.push_back(
        {{"role", "user"},
         {"content", "Premise:  " + premise + " Hypothesis: " + ex.hypothesis}});
    messages.push_back({{"role", "assistant"}, {"content", answer}});
    line["messages"] = std::move(messages);
    out << line.dump() << '\n';
  }

  // Balanced-label check: each class within 10% of a uniform third.
  if (warnings && ts.total > 0) {
    double uniform = static_cast<double>(ts.total) / 3.0;
    const char* names[3] = {"E", "C", "N"};
    for (int i = 0; i < 3; ++i) {
      double dev = std::abs(static_cast<double>(label_counts[i]) - uniform) / uniform;
      if (dev > 0.10) {
        warnings->push_back(std::string("label ") + names[i] + " count " +
                            std::to_string(label_counts[i]) + " deviates " +
                            format_fixed(dev * 100.0, 1) + "% from uniform");
      }
    }
  }
}

}  // namespace inoc
