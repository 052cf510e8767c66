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
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

namespace corefal {

using nlohmann::json;

namespace {

// Seed stream of the retraining after the last batch, shared with the
// fully-labelled baseline so equal data gives equal models.
constexpr uint64_t kFinalTrainingStream = 0xf17a1;

// Typed access to a JSON object that reports the offending key and rejects
// keys it was never asked about.
class ObjectReader {
 public:
  ObjectReader(const json &j, std::string prefix)
      : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(Name(""), "expected an object");
  }

  std::string Name(const std::string &key) const {
    if (prefix_.empty()) return key.empty() ? "config" : key;
    return key.empty() ? prefix_ : prefix_ + "." + key;
  }

  const json *Find(const std::string &key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void Get(const std::string &key, int *out) {
    if (const json *v = Find(key)) {
      if (!v->is_number_integer()) throw ConfigError(Name(key), "expected an integer");
      *out = v->get<int>();
    }
  }
  void Get(const std::string &key, uint64_t *out) {
    if (const json *v = Find(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<int64_t>() >= 0)) {
        throw ConfigError(Name(key), "expected a nonnegative integer");
      }
      *out = v->get<uint64_t>();
    }
  }
  void Get(const std::string &key, double *out) {
    if (const json *v = Find(key)) {
      if (!v->is_number()) throw ConfigError(Name(key), "expected a number");
      *out = v->get<double>();
    }
  }
  void Get(const std::string &key, bool *out) {
    if (const json *v = Find(key)) {
      if (!v->is_boolean()) throw ConfigError(Name(key), "expected true or false");
      *out = v->get<bool>();
    }
  }
  void Get(const std::string &key, std::string *out) {
    if (const json *v = Find(key)) {
      if (!v->is_string()) throw ConfigError(Name(key), "expected a string");
      *out = v->get<std::string>();
    }
  }
  void Get(const std::string &key, std::optional<int> *out) {
    if (const json *v = Find(key)) {
      if (v->is_null()) {
        out->reset();
      } else if (v->is_number_integer()) {
        *out = v->get<int>();
      } else {
        throw ConfigError(Name(key), "expected an integer or null");
      }
    }
  }
  void Get(const std::string &key, std::optional<double> *out) {
    if (const json *v = Find(key)) {
      if (v->is_null()) {
        out->reset();
      } else if (v->is_number()) {
        *out = v->get<double>();
      } else {
        throw ConfigError(Name(key), "expected a number or null");
      }
    }
  }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(Name(it.key()), "unknown key");
    }
  }

 private:
  const json &j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

json OptionalToJson(const std::optional<int> &v) {
  return v ? json(*v) : json(nullptr);
}

json OptionalToJson(const std::optional<double> &v) {
  return v ? json(*v) : json(nullptr);
}

const char *ToString(FullLabelCost c) {
  return c == FullLabelCost::kTwoStage ? "two_stage" : "only_followup";
}

std::string FormatDouble(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

json ScoresToJson(const CorefScores &s) {
  auto triple = [](const ScoreTriple &t) {
    return json{{"precision", t.precision}, {"recall", t.recall}, {"f1", t.f1}};
  };
  return {{"muc", triple(s.muc)},
          {"b_cubed", triple(s.b_cubed)},
          {"ceaf_e", triple(s.ceaf_e)},
          {"avg_f1", s.avg_f1},
          {"mention", triple(s.mention)}};
}

void RequireGold(const Corpus &corpus, const char *what) {
  for (const CorpusDocument &d : corpus) {
    if (!d.clusters) {
      throw ConfigError(what, "document " + d.doc.doc_id +
                                  " has no gold clusters for the simulated "
                                  "annotator");
    }
  }
}

TrainOptions MakeTrainOptions(const LoopConfig &config, uint64_t stream,
                              int member) {
  TrainOptions o;
  o.max_antecedents = config.max_antecedents;
  o.max_epochs = config.max_epochs;
  o.patience = config.patience;
  o.seed = MixSeed(MixSeed(config.seed, stream), static_cast<uint64_t>(member));
  return o;
}

Corpus Concat(const Corpus &a, const Corpus &b) {
  Corpus out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

LoopConfig LoopConfig::FullScale() {
  LoopConfig c;
  c.seed_docs = 700;
  c.batch_size = 280;
  c.max_antecedents = 100;
  c.ensemble_size = 3;
  c.max_epochs = 20;
  c.patience = 2;
  return c;
}

void LoopConfig::Validate() const {
  if (run_id.empty()) throw ConfigError("run_id", "must not be empty");
  if (seed_docs < 0) throw ConfigError("seed_docs", "must be nonnegative");
  if (batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
  if (queries_per_doc && *queries_per_doc < 0) {
    throw ConfigError("queries_per_doc", "must be nonnegative");
  }
  if (budget_seconds_per_doc && !(*budget_seconds_per_doc >= 0)) {
    throw ConfigError("budget_seconds_per_doc", "must be nonnegative");
  }
  if (strategy == Strategy::kClusteredQbc && ensemble_size < 2) {
    throw ConfigError("ensemble_size",
                      "must be at least 2 for clustered_qbc, got " +
                          std::to_string(ensemble_size));
  }
  if (ensemble_size < 1) throw ConfigError("ensemble_size", "must be positive");
  if (strategy == Strategy::kPairwiseEntropy && protocol != Protocol::kPairwise) {
    throw ConfigError("strategy", "pairwise_entropy needs protocol pairwise");
  }
  if (max_epochs < 1) throw ConfigError("max_epochs", "must be at least 1");
  if (patience < 1) throw ConfigError("patience", "must be at least 1");
  if (max_antecedents < 1) {
    throw ConfigError("max_antecedents", "must be at least 1");
  }
  if (!(distractor_rate >= 0)) {
    throw ConfigError("distractor_rate", "must be nonnegative");
  }
  if (scorer.kind != "mention_ranker" && scorer.kind != "oracle_noise") {
    throw ConfigError("scorer.kind", "expected mention_ranker or oracle_noise");
  }
  if (!(scorer.noise >= 0 && scorer.noise <= 1)) {
    throw ConfigError("scorer.noise", "must lie in [0, 1]");
  }
  if (!(scorer.smoothing >= 0 && scorer.smoothing < 1)) {
    throw ConfigError("scorer.smoothing", "must lie in [0, 1)");
  }
  if (!(scorer.ranker.learning_rate > 0)) {
    throw ConfigError("scorer.ranker.learning_rate", "must be positive");
  }
}

json ToJson(const LoopConfig &c) {
  return {
      {"run_id", c.run_id},
      {"strategy", ToString(c.strategy)},
      {"protocol", ToString(c.protocol)},
      {"seed_docs", c.seed_docs},
      {"batch_size", c.batch_size},
      {"queries_per_doc", OptionalToJson(c.queries_per_doc)},
      {"budget_seconds_per_doc", OptionalToJson(c.budget_seconds_per_doc)},
      {"ensemble_size", c.ensemble_size},
      {"max_epochs", c.max_epochs},
      {"patience", c.patience},
      {"max_antecedents", c.max_antecedents},
      {"seed", c.seed},
      {"distractor_rate", c.distractor_rate},
      {"clustered", c.clustered},
      {"incremental_closures", c.incremental_closures},
      {"full_label_cost", ToString(c.full_label_cost)},
      {"scorer",
       {{"kind", c.scorer.kind},
        {"noise", c.scorer.noise},
        {"smoothing", c.scorer.smoothing},
        {"ranker",
         {{"learning_rate", c.scorer.ranker.learning_rate},
          {"l2", c.scorer.ranker.l2},
          {"init_stddev", c.scorer.ranker.init_stddev},
          {"bootstrap", c.scorer.ranker.bootstrap}}}}},
  };
}

LoopConfig LoopConfigFromJson(const json &j) {
  LoopConfig c;
  ObjectReader r(j, "");
  r.Get("run_id", &c.run_id);
  std::string name = ToString(c.strategy);
  r.Get("strategy", &name);
  const auto strategy = StrategyFromString(name);
  if (!strategy) throw ConfigError("strategy", "unknown strategy '" + name + "'");
  c.strategy = *strategy;
  name = ToString(c.protocol);
  r.Get("protocol", &name);
  const auto protocol = ProtocolFromString(name);
  if (!protocol) throw ConfigError("protocol", "unknown protocol '" + name + "'");
  c.protocol = *protocol;
  r.Get("seed_docs", &c.seed_docs);
  r.Get("batch_size", &c.batch_size);
  r.Get("queries_per_doc", &c.queries_per_doc);
  r.Get("budget_seconds_per_doc", &c.budget_seconds_per_doc);
  r.Get("ensemble_size", &c.ensemble_size);
  r.Get("max_epochs", &c.max_epochs);
  r.Get("patience", &c.patience);
  r.Get("max_antecedents", &c.max_antecedents);
  r.Get("seed", &c.seed);
  r.Get("distractor_rate", &c.distractor_rate);
  r.Get("clustered", &c.clustered);
  r.Get("incremental_closures", &c.incremental_closures);
  name = ToString(c.full_label_cost);
  r.Get("full_label_cost", &name);
  if (name == "two_stage") {
    c.full_label_cost = FullLabelCost::kTwoStage;
  } else if (name == "only_followup") {
    c.full_label_cost = FullLabelCost::kOnlyFollowup;
  } else {
    throw ConfigError("full_label_cost", "expected two_stage or only_followup");
  }
  if (const json *s = r.Find("scorer")) {
    ObjectReader sr(*s, "scorer");
    sr.Get("kind", &c.scorer.kind);
    sr.Get("noise", &c.scorer.noise);
    sr.Get("smoothing", &c.scorer.smoothing);
    if (const json *rk = sr.Find("ranker")) {
      ObjectReader rr(*rk, "scorer.ranker");
      rr.Get("learning_rate", &c.scorer.ranker.learning_rate);
      rr.Get("l2", &c.scorer.ranker.l2);
      rr.Get("init_stddev", &c.scorer.ranker.init_stddev);
      rr.Get("bootstrap", &c.scorer.ranker.bootstrap);
      rr.Finish();
    }
    sr.Finish();
  }
  r.Finish();
  c.Validate();
  return c;
}

json ToJson(const ExperimentConfig &c) {
  json corpus = c.train_path.empty() ? json{{"synthetic", ToJson(c.synthetic)}}
                                     : json{{"path", c.train_path}};
  json dev = c.dev_path.empty() ? json{{"docs", c.dev_docs}}
                                : json{{"path", c.dev_path}};
  return {{"loop", ToJson(c.loop)},
          {"corpus", corpus},
          {"dev", dev},
          {"fully_labelled_baseline", c.fully_labelled_baseline}};
}

ExperimentConfig ExperimentConfigFromJson(const json &j) {
  ExperimentConfig c;
  ObjectReader r(j, "");
  if (const json *loop = r.Find("loop")) {
    try {
      c.loop = LoopConfigFromJson(*loop);
    } catch (const ConfigError &e) {
      const std::string what = e.what();
      throw ConfigError("loop." + e.field(),
                        what.substr(what.find(": ") + 2));
    }
  }
  if (const json *corpus = r.Find("corpus")) {
    ObjectReader cr(*corpus, "corpus");
    cr.Get("path", &c.train_path);
    if (const json *syn = cr.Find("synthetic")) {
      if (!syn->is_object()) {
        throw ConfigError("corpus.synthetic", "expected an object");
      }
      try {
        c.synthetic = SyntheticConfigFromJson(*syn);
      } catch (const json::exception &e) {
        throw ConfigError("corpus.synthetic", e.what());
      }
    }
    cr.Finish();
  }
  if (const json *dev = r.Find("dev")) {
    ObjectReader dr(*dev, "dev");
    dr.Get("path", &c.dev_path);
    dr.Get("docs", &c.dev_docs);
    dr.Finish();
  }
  r.Get("fully_labelled_baseline", &c.fully_labelled_baseline);
  r.Finish();
  if (c.train_path.empty()) {
    if (c.synthetic.num_docs < 1) {
      throw ConfigError("corpus.synthetic.num_docs", "must be positive");
    }
    if (c.synthetic.min_mentions < 2 ||
        c.synthetic.max_mentions < c.synthetic.min_mentions) {
      throw ConfigError("corpus.synthetic.max_mentions",
                        "need 2 <= min_mentions <= max_mentions");
    }
  }
  if (c.dev_path.empty() && c.dev_docs < 1) {
    throw ConfigError("dev.docs", "must be positive");
  }
  return c;
}

Corpora LoadCorpora(const ExperimentConfig &c) {
  Corpora out;
  if (c.train_path.empty()) {
    out.train = GenerateSyntheticCorpus(c.synthetic);
  } else {
    out.train = LoadJsonl(c.train_path);
  }
  if (c.dev_path.empty()) {
    SyntheticConfig dev = c.synthetic;
    dev.num_docs = c.dev_docs;
    dev.seed = MixSeed(c.synthetic.seed, 0xde7);
    dev.id_prefix = c.synthetic.id_prefix + "_dev";
    out.dev = GenerateSyntheticCorpus(dev);
  } else {
    out.dev = LoadJsonl(c.dev_path);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Building blocks

std::vector<Span> RunCandidateSpans(const LoopConfig &config,
                                    const CorpusDocument &doc) {
  return CandidateSpans(doc, {config.distractor_rate, config.seed});
}

std::unique_ptr<ConstraintStore> MakeConstraintStore(bool incremental) {
  if (incremental) return std::make_unique<LinkStore>();
  return std::make_unique<ReferenceStore>();
}

std::unique_ptr<Scorer> MakeScorer(const LoopConfig &config, const Corpus &gold,
                                   int member) {
  const uint64_t seed = MixSeed(config.seed, static_cast<uint64_t>(member));
  if (config.scorer.kind == "oracle_noise") {
    return std::make_unique<OracleNoiseScorer>(gold, config.scorer.noise, seed,
                                               config.scorer.smoothing);
  }
  MentionRanker::Options o = config.scorer.ranker;
  o.seed = seed;
  // Committee members differ by seed and by their bootstrap sample.
  if (config.strategy == Strategy::kClusteredQbc) o.bootstrap = true;
  return std::make_unique<MentionRanker>(o);
}

std::optional<Query> NextQuery(const DocumentState &state,
                               const AnnotateOptions &options,
                               std::vector<size_t> *pending, int budget_left,
                               Rng *rng) {
  auto make = [&](size_t m, int a) -> std::optional<Query> {
    if (a < 0) return std::nullopt;
    return Query{state.doc_id(), state.spans()[m], state.spans()[a],
                 options.protocol};
  };
  switch (options.strategy) {
    case Strategy::kPairwiseEntropy: {
      const auto pair = SelectPairwiseEntropy(state);
      if (!pair) return std::nullopt;
      return make(pair->span_index, static_cast<int>(pair->antecedent_index));
    }
    case Strategy::kLccMcu: {
      auto pop = [&]() -> std::optional<size_t> {
        while (!pending->empty()) {
          const size_t i = pending->front();
          pending->erase(pending->begin());
          if (state.IsEligible(i)) return i;
        }
        return std::nullopt;
      };
      auto i = pop();
      if (!i) {
        for (const SelectionResult &r :
             SelectLccMcu(state, budget_left, options.clustered)) {
          pending->push_back(r.span_index);
        }
        i = pop();
      }
      if (!i) return std::nullopt;
      return make(*i, state.ProposedAntecedent(*i));
    }
    case Strategy::kClusteredEntropy:
    case Strategy::kClusteredQbc:
    case Strategy::kRandom: {
      std::optional<SelectionResult> sel;
      if (options.strategy == Strategy::kClusteredEntropy) {
        sel = SelectClusteredEntropy(state, options.clustered);
      } else if (options.strategy == Strategy::kClusteredQbc) {
        sel = SelectClusteredQbc(state, options.clustered);
      } else {
        sel = SelectRandom(state, *rng);
      }
      if (!sel) return std::nullopt;
      return make(sel->span_index, state.ProposedAntecedent(sel->span_index));
    }
  }
  return std::nullopt;
}

DocumentAnnotation AnnotateDocument(DocumentState *state,
                                    const GoldAnnotator &annotator,
                                    const AnnotateOptions &options) {
  DocumentAnnotation out;
  Rng rng(MixSeed(options.seed, StableHash(state->doc_id())));
  std::vector<size_t> pending;
  int total = static_cast<int>(state->size());
  if (options.max_queries) {
    total = *options.max_queries;
  } else if (options.budget_seconds) {
    total = static_cast<int>(
        std::floor(*options.budget_seconds / kInitialQuestionSeconds + 1e-9));
  }
  const double worst_question =
      std::max(kInitialQuestionSeconds, kFollowupSeconds);
  while (true) {
    if (options.max_queries && out.queries >= *options.max_queries) break;
    if (options.budget_seconds &&
        out.ledger.elapsed_seconds() + worst_question >
            *options.budget_seconds + 1e-9) {
      break;
    }
    const auto q = NextQuery(*state, options, &pending, total - out.queries, &rng);
    if (!q) break;
    const Answer a = annotator.AnswerQuery(*q);
    out.ledger.Record(q->protocol, a.verdict);
    const ApplyResult r = ApplyAnswer(*q, a, state);
    out.log.push_back({*q, a, "", ""});
    ++out.queries;
    if (!r.ok()) {
      out.conflicts = r.conflicts;
      break;
    }
  }
  return out;
}

double DeltaF1(std::span<const Clustering> before,
               std::span<const Clustering> after,
               std::span<const Clustering> gold) {
  if (before.size() != gold.size() || after.size() != gold.size()) {
    throw std::invalid_argument("DeltaF1 needs one clustering per document");
  }
  std::vector<ClusteringPair> b, a;
  for (size_t i = 0; i < gold.size(); ++i) {
    b.push_back({gold[i], before[i]});
    a.push_back({gold[i], after[i]});
  }
  return Evaluate(a).avg_f1 - Evaluate(b).avg_f1;
}

CorefScores EvaluateScorers(std::span<const std::unique_ptr<Scorer>> models,
                            const LoopConfig &config, const Corpus &dev) {
  std::vector<ClusteringPair> pairs;
  for (const CorpusDocument &d : dev) {
    const std::vector<Span> spans = RunCandidateSpans(config, d);
    Clustering pred;
    if (models.size() == 1) {
      pred = models[0]->Score(d.doc, spans, config.max_antecedents)
                 .predicted_clusters;
    } else {
      std::vector<ScorerOutput> outs;
      for (const auto &m : models) {
        outs.push_back(m->Score(d.doc, spans, config.max_antecedents));
      }
      pred = EnsembleAverage(outs).mean.predicted_clusters;
    }
    pairs.push_back({d.clusters.value_or(Clustering{}), std::move(pred)});
  }
  return Evaluate(pairs);
}

// ---------------------------------------------------------------------------
// Loops

RunResult RunActiveLearning(const LoopConfig &config, const Corpus &train,
                            const Corpus &dev) {
  config.Validate();
  if (static_cast<size_t>(config.seed_docs) > train.size()) {
    throw ConfigError("seed_docs", "exceeds the " +
                                       std::to_string(train.size()) +
                                       " training documents");
  }
  RequireGold(train, "corpus");
  RequireGold(dev, "dev");

  const Corpus gold_all = config.scorer.kind == "oracle_noise"
                              ? Concat(train, dev)
                              : Corpus{};
  const int members =
      config.strategy == Strategy::kClusteredQbc ? config.ensemble_size : 1;
  std::vector<std::unique_ptr<Scorer>> models;
  for (int k = 0; k < members; ++k) {
    models.push_back(MakeScorer(config, gold_all, k));
  }

  std::vector<std::vector<Span>> spans;
  for (const CorpusDocument &d : train) spans.push_back(RunCandidateSpans(config, d));

  RunResult result;
  result.config = config;
  std::vector<TrainingDocument> labeled;
  for (int i = 0; i < config.seed_docs; ++i) {
    labeled.push_back({&train[i].doc, spans[i], *train[i].clusters});
  }

  AnnotateOptions options;
  options.strategy = config.strategy;
  options.protocol = config.protocol;
  options.max_queries = config.queries_per_doc;
  options.budget_seconds = config.budget_seconds_per_doc;
  options.clustered = config.clustered;
  options.seed = config.seed;

  auto train_all = [&](uint64_t stream) {
    if (labeled.empty()) return;
    for (int k = 0; k < members; ++k) {
      models[k]->Train(labeled, MakeTrainOptions(config, stream, k));
    }
  };

  BudgetLedger total;
  size_t next = static_cast<size_t>(config.seed_docs);
  int round = 0;
  while (next < train.size()) {
    train_all(static_cast<uint64_t>(round));
    RoundReport report;
    report.round = round;
    report.ledger = total;
    report.budget_seconds = total.elapsed_seconds();
    report.train_docs = static_cast<int>(labeled.size());
    report.dev = EvaluateScorers(models, config, dev);

    const size_t end = std::min(train.size(), next + config.batch_size);
    std::vector<Clustering> before, after, gold;
    for (size_t d = next; d < end; ++d) {
      const CorpusDocument &doc = train[d];
      DocumentState state(doc, spans[d], config.max_antecedents,
                          MakeConstraintStore(config.incremental_closures));
      if (members == 1) {
        state.SetModel(
            models[0]->Score(doc.doc, spans[d], config.max_antecedents)
                .distributions);
      } else {
        std::vector<ScorerOutput> outs;
        for (const auto &m : models) {
          outs.push_back(m->Score(doc.doc, spans[d], config.max_antecedents));
        }
        EnsembleOutput ens = EnsembleAverage(outs);
        state.SetModel(std::move(ens.mean.distributions),
                       std::move(ens.member_labels));
      }
      const DocumentAnnotation ann =
          AnnotateDocument(&state, GoldAnnotator(*doc.clusters), options);
      for (const std::string &c : ann.conflicts) {
        report.diagnostics.push_back(doc.doc.doc_id + ": " + c);
      }
      before.push_back(state.model_clusters());
      after.push_back(state.ViewClusters());
      gold.push_back(*doc.clusters);
      result.annotated.push_back(
          {doc.doc.doc_id, spans[d], after.back(), ann.ledger});
      labeled.push_back({&doc.doc, spans[d], after.back()});
      total += ann.ledger;
    }
    report.delta_f1 = DeltaF1(before, after, gold);
    result.rounds.push_back(std::move(report));
    next = end;
    ++round;
  }

  for (auto &m : models) m->Reset();
  train_all(kFinalTrainingStream);
  RoundReport final_report;
  final_report.round = round;
  final_report.final_round = true;
  final_report.ledger = total;
  final_report.budget_seconds = total.elapsed_seconds();
  final_report.train_docs = static_cast<int>(labeled.size());
  final_report.dev = EvaluateScorers(models, config, dev);
  result.rounds.push_back(std::move(final_report));
  return result;
}

RunResult RunQbc(const LoopConfig &config, const Corpus &train,
                 const Corpus &dev) {
  if (config.strategy != Strategy::kClusteredQbc) {
    throw ConfigError("strategy", "committee runs need clustered_qbc");
  }
  return RunActiveLearning(config, train, dev);
}

RunResult RunFullyLabelledBaseline(const LoopConfig &config,
                                   const Corpus &train, const Corpus &dev,
                                   double total_seconds) {
  config.Validate();
  if (static_cast<size_t>(config.seed_docs) > train.size()) {
    throw ConfigError("seed_docs", "exceeds the training documents");
  }
  RequireGold(train, "corpus");
  RequireGold(dev, "dev");

  std::vector<size_t> pool(train.size() - config.seed_docs);
  std::iota(pool.begin(), pool.end(), static_cast<size_t>(config.seed_docs));
  Rng rng(MixSeed(config.seed, 0xf0112));
  rng.Shuffle(std::span<size_t>(pool));

  std::vector<std::vector<Span>> spans(train.size());
  std::vector<size_t> chosen;
  double spent = 0;
  BudgetLedger ledger;
  for (size_t d : pool) {
    spans[d] = RunCandidateSpans(config, train[d]);
    const double cost = FullLabelSeconds(
        static_cast<int64_t>(spans[d].size()), config.full_label_cost);
    if (spent + cost <= total_seconds + 1e-9) {
      chosen.push_back(d);
      spent += cost;
      ledger.d_nc += static_cast<int64_t>(spans[d].size());
    }
  }
  if (chosen.empty()) {
    throw ConfigError("budget_seconds",
                      "no document can be fully labelled within " +
                          FormatDouble(total_seconds, 2) + "s");
  }
  std::sort(chosen.begin(), chosen.end());

  std::vector<TrainingDocument> labeled;
  for (int i = 0; i < config.seed_docs; ++i) {
    labeled.push_back(
        {&train[i].doc, RunCandidateSpans(config, train[i]), *train[i].clusters});
  }
  for (size_t d : chosen) {
    labeled.push_back({&train[d].doc, spans[d], *train[d].clusters});
  }

  LoopConfig single = config;
  single.strategy = Strategy::kRandom;
  const Corpus gold_all =
      config.scorer.kind == "oracle_noise" ? Concat(train, dev) : Corpus{};
  std::vector<std::unique_ptr<Scorer>> models;
  models.push_back(MakeScorer(single, gold_all, 0));
  models[0]->Train(labeled, MakeTrainOptions(config, kFinalTrainingStream, 0));

  RunResult result;
  result.config = config;
  result.strategy_label = "fully_labelled";
  RoundReport report;
  report.round = 0;
  report.final_round = true;
  report.ledger = ledger;
  report.budget_seconds = spent;
  report.train_docs = static_cast<int>(labeled.size());
  report.dev = EvaluateScorers(models, config, dev);
  result.rounds.push_back(std::move(report));
  for (size_t d : chosen) {
    result.annotated.push_back(
        {train[d].doc.doc_id, spans[d], *train[d].clusters, {}});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Output

json ToJson(const RoundReport &r) {
  json j = {{"round", r.round},
            {"final", r.final_round},
            {"ledger", ToJson(r.ledger)},
            {"budget_seconds", r.budget_seconds},
            {"train_docs", r.train_docs},
            {"dev", ScoresToJson(r.dev)},
            {"delta_f1", r.delta_f1 ? json(*r.delta_f1) : json(nullptr)}};
  if (!r.diagnostics.empty()) j["diagnostics"] = r.diagnostics;
  return j;
}

json ToJson(const RunResult &r) {
  json rounds = json::array();
  for (const RoundReport &round : r.rounds) rounds.push_back(ToJson(round));
  json j = {{"config", ToJson(r.config)}, {"rounds", rounds}};
  if (!r.strategy_label.empty()) j["strategy_label"] = r.strategy_label;
  return j;
}

void WriteCurveCsvHeader(std::ostream &out) {
  out << "run_id,strategy,protocol,round,budget_seconds,muc_f1,b3_f1,"
         "ceafe_f1,avg_f1,mention_f1,delta_f1\n";
}

void WriteCurveCsv(std::ostream &out, const RunResult &run) {
  for (const RoundReport &r : run.rounds) {
    const std::string strategy = run.strategy_label.empty()
                                     ? ToString(run.config.strategy)
                                     : run.strategy_label;
    out << run.config.run_id << ',' << strategy << ','
        << ToString(run.config.protocol) << ',' << r.round << ','
        << FormatDouble(r.budget_seconds, 2) << ','
        << FormatDouble(r.dev.muc.f1, 6) << ','
        << FormatDouble(r.dev.b_cubed.f1, 6) << ','
        << FormatDouble(r.dev.ceaf_e.f1, 6) << ','
        << FormatDouble(r.dev.avg_f1, 6) << ','
        << FormatDouble(r.dev.mention.f1, 6) << ','
        << (r.delta_f1 ? FormatDouble(*r.delta_f1, 6) : std::string()) << '\n';
  }
}

}  // namespace corefal
