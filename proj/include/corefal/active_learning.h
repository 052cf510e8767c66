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

// Active-learning orchestration with a simulated annotator.
//
// Each round trains the model(s) on the fully labelled seed documents plus
// everything annotated so far, takes the next batch of unlabelled
// documents, and for each of them asks questions chosen by the selection
// strategy until the per-document query or time budget runs out. The
// document is then labelled with its working clusters. After the last batch
// the model is retrained from scratch on all labelled documents.

#ifndef COREFAL_ACTIVE_LEARNING_H_
#define COREFAL_ACTIVE_LEARNING_H_

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "corefal/annotator.h"
#include "corefal/cost_model.h"
#include "corefal/metrics.h"
#include "corefal/scorer.h"
#include "corefal/selectors.h"
#include "corefal/synthetic.h"
#include "json.hpp"

namespace corefal {

// Invalid configuration; field() names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string &field, const std::string &message)
      : std::invalid_argument(field + ": " + message), field_(field) {}
  const std::string &field() const { return field_; }

 private:
  std::string field_;
};

struct ScorerConfig {
  // "mention_ranker" or "oracle_noise".
  std::string kind = "mention_ranker";
  // oracle_noise only.
  double noise = 0.3;
  double smoothing = OracleNoiseScorer::kDefaultSmoothing;
  MentionRanker::Options ranker;
};

struct LoopConfig {
  std::string run_id = "run";
  Strategy strategy = Strategy::kClusteredEntropy;
  Protocol protocol = Protocol::kDiscrete;
  int seed_docs = 20;
  int batch_size = 8;
  // Per-document limits; both unset means "until nothing is left to ask".
  std::optional<int> queries_per_doc = 10;
  std::optional<double> budget_seconds_per_doc;
  int ensemble_size = 3;
  int max_epochs = 20;
  int patience = 2;
  int max_antecedents = 20;
  uint64_t seed = 1;
  // Non-gold candidate spans per gold mention.
  double distractor_rate = 0.0;
  // Ablations: raw per-antecedent uncertainty, and recomputed closures.
  bool clustered = true;
  bool incremental_closures = true;
  FullLabelCost full_label_cost = FullLabelCost::kTwoStage;
  ScorerConfig scorer;

  // Full-scale settings: 700 seed documents, batches of 280, K = 100.
  static LoopConfig FullScale();
  // Throws ConfigError.
  void Validate() const;
};

nlohmann::json ToJson(const LoopConfig &config);
// Missing keys keep their defaults; unknown keys and type errors throw
// ConfigError naming the key. The result is validated.
LoopConfig LoopConfigFromJson(const nlohmann::json &j);

struct RoundReport {
  int round = 0;
  bool final_round = false;
  // Annotation spent on the data the evaluated model was trained on.
  BudgetLedger ledger;
  double budget_seconds = 0;
  int train_docs = 0;
  CorefScores dev;
  // Gain of the annotated clusters over the model's own on this round's
  // batch; absent for the final retraining.
  std::optional<double> delta_f1;
  std::vector<std::string> diagnostics;
};

nlohmann::json ToJson(const RoundReport &r);

struct AnnotatedDocument {
  std::string doc_id;
  std::vector<Span> spans;
  Clustering clusters;
  BudgetLedger ledger;
};

struct RunResult {
  LoopConfig config;
  // Overrides the strategy column of the curve CSV (baselines).
  std::string strategy_label;
  std::vector<RoundReport> rounds;
  std::vector<AnnotatedDocument> annotated;

  const RoundReport &final_report() const { return rounds.back(); }
};

nlohmann::json ToJson(const RunResult &r);

// Candidate spans of a document under the run's distractor setting.
std::vector<Span> RunCandidateSpans(const LoopConfig &config,
                                    const CorpusDocument &doc);

// A fresh constraint store of the configured kind.
std::unique_ptr<ConstraintStore> MakeConstraintStore(bool incremental);

// Untrained scorer for committee member `member`. `gold` feeds the
// oracle-noise scorer.
std::unique_ptr<Scorer> MakeScorer(const LoopConfig &config, const Corpus &gold,
                                   int member);

struct AnnotateOptions {
  Strategy strategy = Strategy::kClusteredEntropy;
  Protocol protocol = Protocol::kDiscrete;
  std::optional<int> max_queries;
  std::optional<double> budget_seconds;
  bool clustered = true;
  uint64_t seed = 0;
};

struct DocumentAnnotation {
  BudgetLedger ledger;
  int queries = 0;
  std::vector<AnswerRecord> log;
  // Set when an answer contradicted earlier ones; annotation stopped there.
  std::vector<std::string> conflicts;
};

// Next question for a document state, or nullopt when nothing is eligible.
// LCC/MCU batches are kept in `pending` between calls; `budget_left` is L
// for a freshly computed batch.
std::optional<Query> NextQuery(const DocumentState &state,
                               const AnnotateOptions &options,
                               std::vector<size_t> *pending, int budget_left,
                               Rng *rng);

// Asks questions on one scored document until its limits are reached.
// Questions are only started when the worst-case cost of one more question
// still fits the time budget.
DocumentAnnotation AnnotateDocument(DocumentState *state,
                                    const GoldAnnotator &annotator,
                                    const AnnotateOptions &options);

// Mean-F1 gain of `after` over `before` against gold, pooled over the
// batch.
double DeltaF1(std::span<const Clustering> before,
               std::span<const Clustering> after,
               std::span<const Clustering> gold);

// Runs the loop on `train` (the first seed_docs documents are the fully
// labelled seed) and evaluates on `dev`. Committee selection trains
// ensemble_size members per round.
RunResult RunActiveLearning(const LoopConfig &config, const Corpus &train,
                            const Corpus &dev);
// The committee variant; requires strategy clustered_qbc.
RunResult RunQbc(const LoopConfig &config, const Corpus &train,
                 const Corpus &dev);

// Random documents from the unlabelled pool, kept while their worst-case
// full labelling cost fits into `total_seconds`, trained from scratch with
// the seed documents. Throws ConfigError when no document fits.
RunResult RunFullyLabelledBaseline(const LoopConfig &config,
                                   const Corpus &train, const Corpus &dev,
                                   double total_seconds);

// Dev-set scores of a trained scorer (or the committee mean).
CorefScores EvaluateScorers(std::span<const std::unique_ptr<Scorer>> models,
                            const LoopConfig &config, const Corpus &dev);

// Learning-curve CSV: header plus one row per round report.
void WriteCurveCsvHeader(std::ostream &out);
void WriteCurveCsv(std::ostream &out, const RunResult &run);

// Corpus sources for a simulation run.
struct ExperimentConfig {
  LoopConfig loop;
  // Synthetic training corpus unless train_path is set.
  SyntheticConfig synthetic;
  std::string train_path;
  std::string dev_path;
  // Size of the synthetic dev corpus when dev_path is unset.
  int dev_docs = 20;
  // Also run the fully-labelled baseline at the run's total budget.
  bool fully_labelled_baseline = false;
};

nlohmann::json ToJson(const ExperimentConfig &config);
ExperimentConfig ExperimentConfigFromJson(const nlohmann::json &j);

struct Corpora {
  Corpus train;
  Corpus dev;
};

Corpora LoadCorpora(const ExperimentConfig &config);

}  // namespace corefal

#endif  // COREFAL_ACTIVE_LEARNING_H_
