#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <sstream>

#include "inoc/errors.hpp"
#include "inoc/evaluation.hpp"
#include "inoc/rng.hpp"
#include "test_support.hpp"

using namespace inoc;

namespace {

Verdict verdict_of(Label l) {
  Verdict v;
  v.label = l;
  return v;
}

Verdict unparseable() { return Verdict{}; }

}  // namespace

TEST_CASE("accuracy: direct counting with unparseable as wrong") {
  std::vector<Verdict> preds = {verdict_of(Label::Entail), verdict_of(Label::Contradict),
                                verdict_of(Label::Neutral)};
  std::vector<Label> golds = {Label::Entail, Label::Contradict, Label::Entail};
  CHECK(accuracy(preds, golds) == doctest::Approx(2.0 / 3.0));

  std::vector<Verdict> all_right(4, verdict_of(Label::Entail));
  std::vector<Label> gold4(4, Label::Entail);
  CHECK(accuracy(all_right, gold4) == doctest::Approx(1.0));

  std::vector<Verdict> with_u = {verdict_of(Label::Entail), verdict_of(Label::Entail),
                                 verdict_of(Label::Entail), verdict_of(Label::Entail),
                                 unparseable()};
  std::vector<Label> gold5(5, Label::Entail);
  CHECK(accuracy(with_u, gold5) == doctest::Approx(0.8));

  CHECK_THROWS_AS(accuracy(preds, gold4), ValidationError);
}

TEST_CASE("accuracy identity: 1 - (errors + unparseable)/n") {
  Rng rng(3);
  std::vector<Verdict> preds;
  std::vector<Label> golds;
  std::size_t wrong = 0, unp = 0;
  for (int i = 0; i < 500; ++i) {
    Label gold = static_cast<Label>(rng.below(3));
    golds.push_back(gold);
    double roll = rng.uniform();
    if (roll < 0.1) {
      preds.push_back(unparseable());
      ++unp;
    } else if (roll < 0.4) {
      Label other = static_cast<Label>((static_cast<int>(gold) + 1) % 3);
      preds.push_back(verdict_of(other));
      ++wrong;
    } else {
      preds.push_back(verdict_of(gold));
    }
  }
  double expected = 1.0 - double(wrong + unp) / 500.0;
  CHECK(accuracy(preds, golds) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("mu_score: Table-3 rows against the baseline") {
  std::map<PerturbationKind, double> baseline = {
      {PerturbationKind::Char, 57.30}, {PerturbationKind::Neg, 46.90},
      {PerturbationKind::Num, 67.20},  {PerturbationKind::Loc, 70.20},
      {PerturbationKind::Stan, 67.10}};

  std::map<PerturbationKind, double> mix500 = {
      {PerturbationKind::Char, 56.98}, {PerturbationKind::Neg, 66.06},
      {PerturbationKind::Num, 82.02},  {PerturbationKind::Loc, 80.52},
      {PerturbationKind::Stan, 65.64}};
  CHECK(mu_score(mix500, baseline) == doctest::Approx(8.50).epsilon(0.001));

  CHECK(mu_score(baseline, baseline) == doctest::Approx(0.0));

  std::map<PerturbationKind, double> seq_col_asc = {
      {PerturbationKind::Char, 48.80}, {PerturbationKind::Neg, 54.60},
      {PerturbationKind::Num, 85.40},  {PerturbationKind::Loc, 85.40},
      {PerturbationKind::Stan, 56.60}};
  CHECK(mu_score(seq_col_asc, baseline) == doctest::Approx(4.42).epsilon(0.001));
}

TEST_CASE("mu_score: translation covariance and kind mismatch") {
  std::map<PerturbationKind, double> baseline = {{PerturbationKind::Char, 50.0},
                                                 {PerturbationKind::Neg, 60.0}};
  std::map<PerturbationKind, double> acc = {{PerturbationKind::Char, 55.0},
                                            {PerturbationKind::Neg, 61.0}};
  double mu = mu_score(acc, baseline);
  std::map<PerturbationKind, double> shifted = acc;
  for (auto& [k, v] : shifted) v += 7.5;
  CHECK(mu_score(shifted, baseline) == doctest::Approx(mu + 7.5).epsilon(1e-12));

  std::map<PerturbationKind, double> wrong_kinds = {{PerturbationKind::Char, 55.0},
                                                    {PerturbationKind::Num, 61.0}};
  CHECK_THROWS_AS(mu_score(wrong_kinds, baseline), ValidationError);
}

TEST_CASE("confusion: counts by (gold, predicted) plus unparseable") {
  std::vector<Verdict> preds = {verdict_of(Label::Entail), verdict_of(Label::Entail),
                                verdict_of(Label::Contradict), unparseable()};
  std::vector<Label> golds = {Label::Entail, Label::Contradict, Label::Contradict,
                              Label::Neutral};
  ConfusionMatrix cm = confusion(preds, golds);
  CHECK(cm.get(Label::Entail, Label::Entail) == 1);
  CHECK(cm.get(Label::Contradict, Label::Entail) == 1);
  CHECK(cm.get(Label::Contradict, Label::Contradict) == 1);
  CHECK(cm.unparseable == 1);
  CHECK(cm.total() == 4);
}

TEST_CASE("confusion: row sums match per-class gold counts") {
  Rng rng(5);
  std::vector<Verdict> preds;
  std::vector<Label> golds;
  std::size_t per_gold[3] = {0, 0, 0};
  for (int i = 0; i < 300; ++i) {
    Label gold = static_cast<Label>(rng.below(3));
    golds.push_back(gold);
    ++per_gold[static_cast<int>(gold)];
    preds.push_back(verdict_of(static_cast<Label>(rng.below(3))));
  }
  ConfusionMatrix cm = confusion(preds, golds);
  for (int g = 0; g < 3; ++g) {
    std::size_t row = 0;
    for (int p = 0; p < 3; ++p) {
      row += cm.counts[g][p];
    }
    CHECK(row == per_gold[g]);
  }
}

TEST_CASE("export_confusion_graph: identity matrix yields three 100.0 self-loops") {
  ConfusionMatrix cm;
  cm.at(Label::Entail, Label::Entail) = 3;
  cm.at(Label::Contradict, Label::Contradict) = 3;
  cm.at(Label::Neutral, Label::Neutral) = 3;
  std::ostringstream out;
  export_confusion_graph(cm, out);
  std::string dot = out.str();
  CHECK(dot.find("E -> E [label=\"100.0\"]") != std::string::npos);
  CHECK(dot.find("C -> C [label=\"100.0\"]") != std::string::npos);
  CHECK(dot.find("N -> N [label=\"100.0\"]") != std::string::npos);
  CHECK(dot.find("E -> C") == std::string::npos);
}

TEST_CASE("export_confusion_graph: uniform matrix weights all edges 33.3") {
  ConfusionMatrix cm;
  for (int g = 0; g < 3; ++g)
    for (int p = 0; p < 3; ++p) cm.counts[g][p] = 7;
  std::ostringstream out;
  export_confusion_graph(cm, out);
  std::string dot = out.str();
  std::size_t count = 0, pos = 0;
  while ((pos = dot.find("33.3", pos)) != std::string::npos) {
    ++count;
    ++pos;
  }
  CHECK(count == 9);
}

TEST_CASE("export_confusion_graph: row percentages re-sum to 100 +- 0.1") {
  Rng rng(9);
  ConfusionMatrix cm;
  for (int g = 0; g < 3; ++g)
    for (int p = 0; p < 3; ++p) cm.counts[g][p] = 1 + rng.below(50);
  std::ostringstream out;
  export_confusion_graph(cm, out);

  // Parse the emitted DOT edges back out.
  std::istringstream in(out.str());
  std::string line;
  std::map<std::string, double> row_sum;
  while (std::getline(in, line)) {
    auto arrow = line.find(" -> ");
    auto label = line.find("[label=\"");
    if (arrow == std::string::npos || label == std::string::npos) continue;
    std::string gold = line.substr(2, arrow - 2);
    double pct = std::stod(line.substr(label + 8));
    row_sum[gold] += pct;
  }
  REQUIRE(row_sum.size() == 3);
  for (const auto& [gold, sum] : row_sum) {
    CHECK(std::abs(sum - 100.0) <= 0.1);
  }
}

TEST_CASE("export_confusion_graph: empty matrix is an error") {
  ConfusionMatrix cm;
  std::ostringstream out;
  CHECK_THROWS_AS(export_confusion_graph(cm, out), ValidationError);
}

TEST_CASE("assemble_cross_test: full grid feeds the schedule pipeline") {
  std::vector<PerturbationKind> kinds = {PerturbationKind::Char, PerturbationKind::Neg};
  std::vector<CrossTestCell> cells = {{PerturbationKind::Char, PerturbationKind::Char, 60},
                                      {PerturbationKind::Char, PerturbationKind::Neg, 50},
                                      {PerturbationKind::Neg, PerturbationKind::Char, 55},
                                      {PerturbationKind::Neg, PerturbationKind::Neg, 70}};
  CrossTestMatrix m = assemble_cross_test(kinds, cells, {52, 48});
  ScheduleScores s = row_col_scores(m);
  CHECK(s.col[0] == doctest::Approx(3.0));  // neg-trained on char: 55 - 52
  CHECK(s.col[1] == doctest::Approx(2.0));  // char-trained on neg: 50 - 48
}

TEST_CASE("assemble_cross_test: 1x1 degenerate grid is valid") {
  CrossTestMatrix m = assemble_cross_test({PerturbationKind::Num},
                                          {{PerturbationKind::Num, PerturbationKind::Num, 80}},
                                          {75});
  CHECK(m.cell[0][0] == doctest::Approx(80));
}

TEST_CASE("assemble_cross_test: duplicates and missing cells are named") {
  std::vector<PerturbationKind> kinds = {PerturbationKind::Char, PerturbationKind::Neg};
  std::vector<CrossTestCell> dup = {{PerturbationKind::Char, PerturbationKind::Char, 60},
                                    {PerturbationKind::Char, PerturbationKind::Char, 61}};
  CHECK_THROWS_AS(assemble_cross_test(kinds, dup, {50, 50}), ValidationError);

  std::vector<CrossTestCell> missing = {{PerturbationKind::Char, PerturbationKind::Char, 60}};
  try {
    assemble_cross_test(kinds, missing, {50, 50});
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("neg") != std::string::npos);
  }
}

TEST_CASE("report bundle: deterministic bytes for identical inputs") {
  EvalReport report;
  report.strategy = "OP_ZS";
  report.backend = "mock:echo-gold";
  report.profile = "gpt";
  report.seed = 7;
  report.config_hash = "abc123";
  SetResult r;
  r.set_name = "Q:char";
  r.count = 10;
  r.accuracy = 0.9;
  r.confusion.at(Label::Entail, Label::Entail) = 9;
  r.confusion.at(Label::Entail, Label::Contradict) = 1;
  report.results.push_back(r);
  report.mu = 3.25;

  test::TempDir tmp1("report_a");
  test::TempDir tmp2("report_b");
  report.write_bundle(tmp1.path.string());
  report.write_bundle(tmp2.path.string());
  for (const char* f : {"report.json", "report.md", "confusion_Q_char.dot"}) {
    CHECK(test::read_file((tmp1.path / f).string()) ==
          test::read_file((tmp2.path / f).string()));
  }
  std::string json_text = test::read_file((tmp1.path / "report.json").string());
  CHECK(json_text.find("\"config_hash\": \"abc123\"") != std::string::npos);
  CHECK(json_text.find("\"mu_points\": 3.25") != std::string::npos);
}
