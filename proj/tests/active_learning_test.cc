// Copyright 2026 The Corefal Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "corefal/active_learning.h"

#include <algorithm>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"

namespace corefal {
namespace {

using nlohmann::json;

Corpus SmallCorpus(int docs, uint64_t seed, const std::string &prefix) {
  SyntheticConfig s;
  s.num_docs = docs;
  s.min_mentions = 12;
  s.max_mentions = 24;
  s.seed = seed;
  s.id_prefix = prefix;
  return GenerateSyntheticCorpus(s);
}

LoopConfig SmallLoop() {
  LoopConfig c;
  c.run_id = "t";
  c.seed_docs = 2;
  c.batch_size = 3;
  c.queries_per_doc = 4;
  c.max_epochs = 3;
  c.patience = 1;
  c.max_antecedents = 8;
  c.seed = 5;
  return c;
}

std::string Csv(const RunResult &r) {
  std::ostringstream out;
  WriteCurveCsvHeader(out);
  WriteCurveCsv(out, r);
  return out.str();
}

std::string FieldOf(const json &j) {
  try {
    LoopConfigFromJson(j);
  } catch (const ConfigError &e) {
    return e.field();
  }
  return "";
}

TEST_CASE("loop config parsing") {
  const LoopConfig c = LoopConfigFromJson(
      {{"run_id", "x"}, {"strategy", "lcc_mcu"}, {"queries_per_doc", 3},
       {"scorer", {{"kind", "oracle_noise"}, {"noise", 0.2}}}});
  CHECK(c.run_id == "x");
  CHECK(c.strategy == Strategy::kLccMcu);
  CHECK(c.queries_per_doc == 3);
  CHECK(c.scorer.kind == "oracle_noise");
  CHECK(c.scorer.noise == doctest::Approx(0.2));
  // Defaults survive.
  CHECK(c.batch_size == 8);

  const LoopConfig back = LoopConfigFromJson(ToJson(c));
  CHECK(ToJson(back) == ToJson(c));

  const LoopConfig unlimited = LoopConfigFromJson({{"queries_per_doc", nullptr}});
  CHECK(!unlimited.queries_per_doc);
}

TEST_CASE("loop config errors name the field") {
  CHECK(FieldOf({{"strategy", "clustered_qbc"}, {"ensemble_size", 1}}) ==
        "ensemble_size");
  CHECK(FieldOf({{"strategy", "clustered_qbc"}, {"ensemble_size", 2}}).empty());
  CHECK(FieldOf({{"strategy", "pairwise_entropy"}}) == "strategy");
  CHECK(FieldOf({{"strategy", "pairwise_entropy"}, {"protocol", "pairwise"}})
            .empty());
  CHECK(FieldOf({{"strategy", "nope"}}) == "strategy");
  CHECK(FieldOf({{"protocol", "ternary"}}) == "protocol");
  CHECK(FieldOf({{"batch_size", 0}}) == "batch_size");
  CHECK(FieldOf({{"batch_size", "8"}}) == "batch_size");
  CHECK(FieldOf({{"bogus", 1}}) == "bogus");
  CHECK(FieldOf({{"scorer", {{"noise", 2.0}}}}) == "scorer.noise");
  CHECK(FieldOf({{"scorer", {{"ranker", {{"learning_rate", 0.0}}}}}}) ==
        "scorer.ranker.learning_rate");
  CHECK(FieldOf({{"full_label_cost", "cheap"}}) == "full_label_cost");

  json exp = {{"loop", {{"strategy", "clustered_qbc"}, {"ensemble_size", 1}}}};
  try {
    ExperimentConfigFromJson(exp);
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    CHECK(e.field() == "loop.ensemble_size");
  }
}

TEST_CASE("qbc needs a committee") {
  LoopConfig c = SmallLoop();
  c.strategy = Strategy::kClusteredQbc;
  c.ensemble_size = 1;
  const Corpus train = SmallCorpus(5, 1, "tr");
  const Corpus dev = SmallCorpus(2, 2, "dv");
  CHECK_THROWS_AS(RunQbc(c, train, dev), ConfigError);
  CHECK_THROWS_AS(RunActiveLearning(c, train, dev), ConfigError);
}

TEST_CASE("zero queries spend nothing") {
  LoopConfig c = SmallLoop();
  c.queries_per_doc = 0;
  c.scorer.kind = "oracle_noise";
  const RunResult r =
      RunActiveLearning(c, SmallCorpus(8, 3, "tr"), SmallCorpus(2, 4, "dv"));
  REQUIRE(!r.rounds.empty());
  for (const RoundReport &rep : r.rounds) {
    CHECK(rep.ledger == BudgetLedger{});
    CHECK(rep.budget_seconds == 0);
  }
  CHECK(r.annotated.size() == 6);
  for (const AnnotatedDocument &a : r.annotated) CHECK(a.ledger.questions() == 0);
}

TEST_CASE("unlimited queries recover gold") {
  for (double distractors : {0.0, 0.3}) {
    for (Strategy s : {Strategy::kClusteredEntropy, Strategy::kLccMcu,
                       Strategy::kRandom}) {
      CAPTURE(distractors);
      CAPTURE(ToString(s));
      LoopConfig c = SmallLoop();
      c.strategy = s;
      c.queries_per_doc.reset();
      c.distractor_rate = distractors;
      c.scorer.kind = "oracle_noise";
      c.scorer.noise = 0.5;
      const Corpus train = SmallCorpus(8, 7, "tr");
      const RunResult r = RunActiveLearning(c, train, SmallCorpus(2, 8, "dv"));
      std::map<std::string, Clustering> gold;
      for (const CorpusDocument &d : train) gold[d.doc.doc_id] = *d.clusters;
      REQUIRE(r.annotated.size() == 6);
      for (const AnnotatedDocument &a : r.annotated) {
        CAPTURE(a.doc_id);
        CHECK(Canonicalize(a.clusters) == Canonicalize(gold.at(a.doc_id)));
        CHECK(a.ledger.p == 0);
        CHECK(a.ledger.questions() > 0);
      }
    }
  }
}

TEST_CASE("rounds and ledgers") {
  LoopConfig c = SmallLoop();
  const RunResult r =
      RunActiveLearning(c, SmallCorpus(10, 9, "tr"), SmallCorpus(3, 10, "dv"));
  // Eight unlabelled documents in batches of three: three rounds plus the
  // final retraining.
  REQUIRE(r.rounds.size() == 4);
  CHECK(r.final_report().final_round);
  CHECK(!r.final_report().delta_f1);
  BudgetLedger total;
  for (const AnnotatedDocument &a : r.annotated) {
    CHECK(a.ledger.questions() <= 4);
    total += a.ledger;
  }
  CHECK(r.final_report().ledger == total);
  CHECK(r.final_report().train_docs == 10);
  double last = -1;
  for (size_t i = 0; i < r.rounds.size(); ++i) {
    const RoundReport &rep = r.rounds[i];
    CHECK(rep.budget_seconds == doctest::Approx(rep.ledger.elapsed_seconds()));
    CHECK(rep.budget_seconds >= last);
    last = rep.budget_seconds;
    if (i + 1 < r.rounds.size()) CHECK(rep.delta_f1.has_value());
    CHECK(rep.dev.avg_f1 >= 0);
    CHECK(rep.dev.avg_f1 <= 1);
  }
  CHECK(r.rounds[0].ledger == BudgetLedger{});
}

TEST_CASE("time budget per document") {
  LoopConfig c = SmallLoop();
  c.queries_per_doc.reset();
  c.budget_seconds_per_doc = 50.0;
  c.scorer.kind = "oracle_noise";
  const RunResult r =
      RunActiveLearning(c, SmallCorpus(6, 11, "tr"), SmallCorpus(2, 12, "dv"));
  for (const AnnotatedDocument &a : r.annotated) {
    CHECK(a.ledger.elapsed_seconds() <= 50.0);
    // Three questions always fit.
    CHECK(a.ledger.questions() == 3);
  }
}

TEST_CASE("runs are deterministic") {
  LoopConfig c = SmallLoop();
  const Corpus train = SmallCorpus(8, 13, "tr");
  const Corpus dev = SmallCorpus(3, 14, "dv");
  const RunResult a = RunActiveLearning(c, train, dev);
  const RunResult b = RunActiveLearning(c, train, dev);
  CHECK(Csv(a) == Csv(b));
  CHECK(ToJson(a) == ToJson(b));
  c.seed = 6;
  const RunResult other = RunActiveLearning(c, train, dev);
  CHECK(Csv(other) != Csv(a));
}

TEST_CASE("recomputed closures give the same trajectory") {
  for (Strategy s : {Strategy::kClusteredEntropy, Strategy::kLccMcu}) {
    LoopConfig c = SmallLoop();
    c.strategy = s;
    const Corpus train = SmallCorpus(8, 15, "tr");
    const Corpus dev = SmallCorpus(3, 16, "dv");
    const RunResult inc = RunActiveLearning(c, train, dev);
    c.incremental_closures = false;
    const RunResult rec = RunActiveLearning(c, train, dev);
    REQUIRE(inc.rounds.size() == rec.rounds.size());
    for (size_t i = 0; i < inc.rounds.size(); ++i) {
      CHECK(inc.rounds[i].dev.avg_f1 == rec.rounds[i].dev.avg_f1);
      CHECK(inc.rounds[i].ledger == rec.rounds[i].ledger);
    }
  }
}

TEST_CASE("raw selection ablation runs") {
  LoopConfig c = SmallLoop();
  c.clustered = false;
  const RunResult r =
      RunActiveLearning(c, SmallCorpus(6, 17, "tr"), SmallCorpus(2, 18, "dv"));
  CHECK(r.final_report().ledger.questions() > 0);
}

TEST_CASE("pairwise protocol") {
  LoopConfig c = SmallLoop();
  c.strategy = Strategy::kPairwiseEntropy;
  c.protocol = Protocol::kPairwise;
  const RunResult r =
      RunActiveLearning(c, SmallCorpus(6, 19, "tr"), SmallCorpus(2, 20, "dv"));
  const BudgetLedger &l = r.final_report().ledger;
  CHECK(l.p == 4 * 4);
  CHECK(l.d_c + l.d_nc == 0);
}

TEST_CASE("committee run") {
  LoopConfig c = SmallLoop();
  c.strategy = Strategy::kClusteredQbc;
  c.ensemble_size = 2;
  const RunResult r =
      RunQbc(c, SmallCorpus(6, 21, "tr"), SmallCorpus(2, 22, "dv"));
  CHECK(r.final_report().final_round);
  CHECK(r.final_report().ledger.questions() > 0);
  CHECK(Csv(r).find("clustered_qbc") != std::string::npos);

  LoopConfig not_qbc = SmallLoop();
  CHECK_THROWS_AS(RunQbc(not_qbc, SmallCorpus(4, 1, "tr"), SmallCorpus(1, 2, "dv")),
                  ConfigError);
}

TEST_CASE("fully labelled baseline") {
  LoopConfig c = SmallLoop();
  const Corpus train = SmallCorpus(8, 23, "tr");
  const Corpus dev = SmallCorpus(2, 24, "dv");
  try {
    RunFullyLabelledBaseline(c, train, dev, 1.0);
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    CHECK(e.field() == "budget_seconds");
  }
  const RunResult r = RunFullyLabelledBaseline(c, train, dev, 1e9);
  CHECK(r.strategy_label == "fully_labelled");
  REQUIRE(r.rounds.size() == 1);
  CHECK(r.final_report().final_round);
  CHECK(r.final_report().train_docs == 8);
  CHECK(r.annotated.size() == 6);
  double spent = 0;
  for (const AnnotatedDocument &a : r.annotated) {
    spent += FullLabelSeconds(static_cast<int64_t>(a.spans.size()),
                              c.full_label_cost);
  }
  CHECK(r.final_report().budget_seconds == doctest::Approx(spent));
  CHECK(Csv(r).find(",fully_labelled,") != std::string::npos);
}

TEST_CASE("curve csv") {
  LoopConfig c = SmallLoop();
  c.scorer.kind = "oracle_noise";
  const RunResult r =
      RunActiveLearning(c, SmallCorpus(5, 25, "tr"), SmallCorpus(2, 26, "dv"));
  std::istringstream in(Csv(r));
  std::string line;
  std::getline(in, line);
  CHECK(line ==
        "run_id,strategy,protocol,round,budget_seconds,muc_f1,b3_f1,ceafe_f1,"
        "avg_f1,mention_f1,delta_f1");
  int rows = 0;
  std::string last;
  while (std::getline(in, line)) {
    ++rows;
    last = line;
    CHECK(line.rfind("t,clustered_entropy,discrete,", 0) == 0);
    CHECK(std::count(line.begin(), line.end(), ',') == 10);
  }
  CHECK(rows == static_cast<int>(r.rounds.size()));
  // The final row has no delta.
  CHECK(last.back() == ',');
}

TEST_CASE("delta f1") {
  const Clustering gold = {{{0, 0}, {1, 1}}, {{2, 2}, {3, 3}}};
  const std::vector<Clustering> g = {gold};
  const std::vector<Clustering> none = {Clustering{}};
  CHECK(DeltaF1(g, g, g) == 0);
  CHECK(DeltaF1(none, g, g) == doctest::Approx(1.0));
  CHECK(DeltaF1(g, none, g) == doctest::Approx(-1.0));
  const std::vector<Clustering> half = {Clustering{{{0, 0}, {1, 1}}}};
  const double d = DeltaF1(none, half, g);
  CHECK(d > 0);
  CHECK(d < 1);
}

}  // namespace
}  // namespace corefal
