#include "inoc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"

#include "inoc/errors.hpp"
#include "inoc/text.hpp"
#include "inoc/version.hpp"

namespace inoc {

namespace {

const char* label_name(Label l) {
  switch (l) {
    case Label::Entail: return "E";
    case Label::Contradict: return "C";
    case Label::Neutral: return "N";
  }
  return "?";
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

std::size_t ConfusionMatrix::total() const {
  std::size_t t = unparseable;
  for (const auto& row : counts)
    for (std::size_t c : row) t += c;
  return t;
}

std::size_t& ConfusionMatrix::at(Label gold, Label pred) {
  return counts[static_cast<int>(gold)][static_cast<int>(pred)];
}

std::size_t ConfusionMatrix::get(Label gold, Label pred) const {
  return counts[static_cast<int>(gold)][static_cast<int>(pred)];
}

double accuracy(const std::vector<Verdict>& preds, const std::vector<Label>& golds) {
  if (preds.size() != golds.size()) {
    throw ValidationError("accuracy: " + std::to_string(preds.size()) + " predictions vs " +
                          std::to_string(golds.size()) + " golds");
  }
  if (preds.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].label && *preds[i].label == golds[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double mu_score(const std::map<PerturbationKind, double>& challenge_acc,
                const std::map<PerturbationKind, double>& baseline) {
  if (challenge_acc.empty()) throw ValidationError("mu_score: no challenge accuracies");
  if (challenge_acc.size() != baseline.size()) {
    throw ValidationError("mu_score: kind sets differ in size");
  }
  double sum = 0.0;
  for (const auto& [kind, acc] : challenge_acc) {
    auto it = baseline.find(kind);
    if (it == baseline.end()) {
      throw ValidationError("mu_score: baseline missing kind " + kind_name(kind));
    }
    sum += acc - it->second;
  }
  return sum / static_cast<double>(challenge_acc.size());
}

ConfusionMatrix confusion(const std::vector<Verdict>& preds,
                          const std::vector<Label>& golds) {
  if (preds.size() != golds.size()) {
    throw ValidationError("confusion: prediction/gold length mismatch");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].label) {
      ++cm.at(golds[i], *preds[i].label);
    } else {
      ++cm.unparseable;
    }
  }
  return cm;
}

void export_confusion_graph(const ConfusionMatrix& cm, std::ostream& out) {
  if (cm.total() == 0) throw ValidationError("cannot export an empty confusion matrix");
  const Label labels[3] = {Label::Entail, Label::Contradict, Label::Neutral};
  out << "digraph confusion {\n";
  for (Label l : labels) out << "  " << label_name(l) << ";\n";
  for (Label gold : labels) {
    std::size_t row_total = 0;
    for (Label pred : labels) row_total += cm.get(gold, pred);
    if (row_total == 0) continue;
    for (Label pred : labels) {
      std::size_t c = cm.get(gold, pred);
      if (c == 0) continue;
      double pct = 100.0 * static_cast<double>(c) / static_cast<double>(row_total);
      out << "  " << label_name(gold) << " -> " << label_name(pred) << " [label=\""
          << format_fixed(pct, 1) << "\"];\n";
    }
  }
  out << "}\n";
}

CrossTestMatrix assemble_cross_test(const std::vector<PerturbationKind>& kinds,
                                    const std::vector<CrossTestCell>& cells,
                                    const std::vector<double>& baseline) {
  if (kinds.empty()) throw ValidationError("assemble_cross_test: no kinds");
  if (baseline.size() != kinds.size()) {
    throw ValidationError("assemble_cross_test: baseline length mismatch");
  }
  CrossTestMatrix m;
  m.kinds = kinds;
  m.baseline = baseline;
  m.cell.assign(kinds.size(), std::vector<double>(kinds.size(), -1.0));
  for (const auto& c : cells) {
    std::size_t i = m.index_of(c.train);
    std::size_t j = m.index_of(c.test);
    if (m.cell[i][j] >= 0.0) {
      throw ValidationError("duplicate cell for (" + kind_name(c.train) + ", " +
                            kind_name(c.test) + ")");
    }
    if (c.accuracy < 0.0 || c.accuracy > 100.0) {
      throw ValidationError("cell accuracy outside [0,100] for (" + kind_name(c.train) +
                            ", " + kind_name(c.test) + ")");
    }
    m.cell[i][j] = c.accuracy;
  }
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    for (std::size_t j = 0; j < kinds.size(); ++j) {
      if (m.cell[i][j] < 0.0) {
        throw ValidationError("missing cell (" + kind_name(kinds[i]) + ", " +
                              kind_name(kinds[j]) + ")");
      }
    }
  }
  return m;
}

void EvalReport::write_bundle(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  nlohmann::ordered_json j;
  j["tool"] = kToolName;
  j["tool_version"] = kToolVersion;
  j["strategy"] = strategy;
  j["backend"] = backend;
  j["profile"] = profile;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  nlohmann::ordered_json sets = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    nlohmann::ordered_json s;
    s["set"] = r.set_name;
    s["count"] = r.count;
    s["accuracy"] = round6(r.accuracy);
    s["accuracy_pct"] = round6(r.accuracy * 100.0);
    if (r.per_seed.size() > 1) {
      nlohmann::ordered_json per_seed = nlohmann::ordered_json::array();
      for (double v : r.per_seed) per_seed.push_back(round6(v));
      s["per_seed_accuracy"] = std::move(per_seed);
    }
    nlohmann::ordered_json grid = nlohmann::ordered_json::array();
    for (const auto& row : r.confusion.counts) {
      grid.push_back(nlohmann::ordered_json::array({row[0], row[1], row[2]}));
    }
    s["confusion"] = std::move(grid);
    s["unparseable"] = r.confusion.unparseable;
    sets.push_back(std::move(s));
  }
  j["sets"] = std::move(sets);
  if (mu) j["mu_points"] = round6(*mu);

  {
    std::ofstream out(fs::path(dir) / "report.json", std::ios::binary);
    out << j.dump(2) << '\n';
  }

  {
    std::ofstream md(fs::path(dir) / "report.md", std::ios::binary);
    md << "# Evaluation report\n\n";
    md << "- strategy: " << strategy << "\n";
    md << "- backend: " << backend << "\n";
    md << "- profile: " << profile << "\n";
    md << "- seed: " << seed << "\n";
    md << "- config: " << config_hash << "\n\n";
    md << "| set | n | accuracy | accuracy (%) |\n";
    md << "|-----|---|----------|--------------|\n";
    for (const auto& r : results) {
      md << "| " << r.set_name << " | " << r.count << " | " << format_fixed(r.accuracy, 4)
         << " | " << format_fixed(r.accuracy * 100.0, 2) << " |\n";
    }
    if (mu) {
      md << "\nMean improvement over baseline (mu): " << format_fixed(*mu, 2)
         << " points\n";
    }
  }

  for (const auto& r : results) {
    if (r.confusion.total() == 0) continue;
    std::string name = r.set_name;
    std::replace(name.begin(), name.end(), ':', '_');
    std::ofstream dot(fs::path(dir) / ("confusion_" + name + ".dot"), std::ios::binary);
    export_confusion_graph(r.confusion, dot);
  }
}

}  // namespace inoc
