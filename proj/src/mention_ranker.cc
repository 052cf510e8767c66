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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "corefal/random.h"
#include "corefal/scorer.h"

namespace corefal {

// Sparse binary features of every slot of one antecedent window.
struct MentionRanker::Example {
  std::vector<std::vector<int>> slot_features;
  // Slots counted as correct during training.
  std::vector<size_t> gold_slots;
};

namespace {

// Template ids for the anaphor-conditioned feature copies.
enum ConditionedTemplate : uint64_t {
  kCondExact = 1,
  kCondLastToken,
  kCondSameSpeaker,
  kCondEpsilon,
  kCondDistance0,
};

struct SpanInfo {
  std::string text;
  std::string last_token;
  std::string speaker;
  uint64_t head_hash = 0;
};

std::string Lower(std::string s) {
  for (char &c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<SpanInfo> Describe(const Document &doc,
                               std::span<const Span> spans) {
  std::vector<SpanInfo> info(spans.size());
  for (size_t i = 0; i < spans.size(); ++i) {
    info[i].text = Lower(doc.Text(spans[i]));
    const int last = std::min<int>(spans[i].end,
                                   static_cast<int>(doc.tokens.size()) - 1);
    info[i].last_token = last >= 0 ? Lower(doc.tokens[last]) : "";
    info[i].speaker = doc.SpeakerOf(spans[i]);
    info[i].head_hash = StableHash(info[i].last_token);
  }
  return info;
}

int Conditioned(uint64_t head_hash, uint64_t tmpl) {
  return MentionRanker::kNumGlobalFeatures +
         static_cast<int>(MixSeed(head_hash, tmpl) % MentionRanker::kHashedSize);
}

}  // namespace

MentionRanker::MentionRanker(Options options) : options_(options) { Reset(); }

void MentionRanker::Reset() {
  weights_.assign(kNumGlobalFeatures + kHashedSize, 0.0);
  Rng rng(MixSeed(options_.seed, 0x5eed));
  for (int f = 0; f < kNumGlobalFeatures; ++f) {
    weights_[f] = rng.Gaussian(options_.init_stddev);
  }
}

int MentionRanker::DistanceBucket(size_t distance) {
  if (distance <= 1) return 0;
  if (distance == 2) return 1;
  if (distance == 3) return 2;
  if (distance <= 7) return 3;
  if (distance <= 15) return 4;
  return 5;
}

void MentionRanker::Probabilities(const Example &ex,
                                  std::vector<double> *probs) const {
  const size_t n = ex.slot_features.size();
  probs->resize(n);
  double max_score = -std::numeric_limits<double>::infinity();
  for (size_t s = 0; s < n; ++s) {
    double score = 0;
    for (int f : ex.slot_features[s]) score += weights_[f];
    (*probs)[s] = score;
    max_score = std::max(max_score, score);
  }
  double total = 0;
  for (double &p : *probs) {
    p = std::exp(p - max_score);
    total += p;
  }
  for (double &p : *probs) p /= total;
}

namespace {

// Builds one example per span with the slot features filled in.
template <typename ExampleT>
std::vector<ExampleT> BuildExamples(const Document &doc,
                                    std::span<const Span> spans,
                                    int max_antecedents,
                                    std::vector<CandidateSet> *windows) {
  const std::vector<SpanInfo> info = Describe(doc, spans);
  std::vector<ExampleT> examples(spans.size());
  for (size_t i = 0; i < spans.size(); ++i) {
    CandidateSet cands = AntecedentCandidates(spans, i, max_antecedents);
    ExampleT &ex = examples[i];
    ex.slot_features.resize(cands.size());
    const SpanInfo &ana = info[i];
    for (size_t s = 0; s < cands.antecedents.size(); ++s) {
      const size_t j = cands.antecedents[s];
      const SpanInfo &ante = info[j];
      auto &f = ex.slot_features[s];
      if (ana.text == ante.text) {
        f.push_back(MentionRanker::kExactMatch);
        f.push_back(Conditioned(ana.head_hash, kCondExact));
      }
      if (ana.last_token == ante.last_token) {
        f.push_back(MentionRanker::kLastTokenMatch);
        f.push_back(Conditioned(ana.head_hash, kCondLastToken));
      }
      const int bucket = MentionRanker::DistanceBucket(i - j);
      f.push_back(MentionRanker::kDistanceBucket0 + bucket);
      f.push_back(Conditioned(ana.head_hash, kCondDistance0 + bucket));
      if (!ana.speaker.empty() && ana.speaker == ante.speaker) {
        f.push_back(MentionRanker::kSameSpeaker);
        f.push_back(Conditioned(ana.head_hash, kCondSameSpeaker));
      }
    }
    auto &eps = ex.slot_features[cands.epsilon_slot()];
    eps.push_back(MentionRanker::kEpsilonBias);
    eps.push_back(Conditioned(ana.head_hash, kCondEpsilon));
    if (windows) windows->push_back(std::move(cands));
  }
  return examples;
}

}  // namespace

ScorerOutput MentionRanker::Score(const Document &doc,
                                  std::span<const Span> spans,
                                  int max_antecedents) const {
  std::vector<CandidateSet> windows;
  auto examples = BuildExamples<Example>(doc, spans, max_antecedents, &windows);
  std::vector<AntecedentDistribution> dists(spans.size());
  for (size_t i = 0; i < spans.size(); ++i) {
    dists[i].candidates = std::move(windows[i]);
    Probabilities(examples[i], &dists[i].probs);
  }
  return MakeScorerOutput(std::vector<Span>(spans.begin(), spans.end()),
                          std::move(dists));
}

double MentionRanker::Loss(const std::vector<Example> &examples) const {
  double total = 0;
  std::vector<double> probs;
  for (const Example &ex : examples) {
    Probabilities(ex, &probs);
    double gold = 0;
    for (size_t s : ex.gold_slots) gold += probs[s];
    total -= std::log(std::max(gold, 1e-300));
  }
  return examples.empty() ? 0 : total / static_cast<double>(examples.size());
}

TrainResult MentionRanker::Train(std::span<const TrainingDocument> docs,
                                 const TrainOptions &options) {
  if (docs.empty()) throw ScorerError("empty training set");
  const uint64_t stream = MixSeed(options_.seed, options.seed);

  std::vector<size_t> picked(docs.size());
  std::iota(picked.begin(), picked.end(), 0);
  if (options_.bootstrap) {
    Rng rng(MixSeed(stream, 0xb007));
    for (size_t &p : picked) p = rng.Index(docs.size());
  }

  std::vector<Example> examples;
  for (size_t p : picked) {
    const TrainingDocument &td = docs[p];
    if (td.doc == nullptr) throw ScorerError("training document without text");
    std::map<Span, int> cluster_of;
    for (size_t c = 0; c < td.clusters.size(); ++c) {
      for (const Span &s : td.clusters[c]) cluster_of[s] = static_cast<int>(c);
    }
    std::vector<CandidateSet> windows;
    auto doc_examples =
        BuildExamples<Example>(*td.doc, td.spans, options.max_antecedents,
                               &windows);
    for (size_t i = 0; i < doc_examples.size(); ++i) {
      Example &ex = doc_examples[i];
      auto it = cluster_of.find(td.spans[i]);
      if (it != cluster_of.end()) {
        for (size_t s = 0; s < windows[i].antecedents.size(); ++s) {
          auto jt = cluster_of.find(td.spans[windows[i].antecedents[s]]);
          if (jt != cluster_of.end() && jt->second == it->second) {
            ex.gold_slots.push_back(s);
          }
        }
      }
      if (ex.gold_slots.empty()) ex.gold_slots.push_back(windows[i].epsilon_slot());
      examples.push_back(std::move(ex));
    }
  }

  TrainResult result;
  result.best_loss = Loss(examples);
  std::vector<double> best = weights_;
  // Adagrad state is reset at every call.
  std::vector<double> accum(weights_.size(), 0.0);
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> probs;
  std::vector<std::pair<int, double>> grad;
  int stale = 0;
  for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
    Rng rng(MixSeed(stream, static_cast<uint64_t>(epoch)));
    rng.Shuffle(std::span<size_t>(order));
    for (size_t idx : order) {
      const Example &ex = examples[idx];
      Probabilities(ex, &probs);
      double gold = 0;
      for (size_t s : ex.gold_slots) gold += probs[s];
      gold = std::max(gold, 1e-300);
      grad.clear();
      // d/dw of -log sum_gold p = E_p[f] - E_{p | gold}[f]
      for (size_t s = 0; s < probs.size(); ++s) {
        for (int f : ex.slot_features[s]) grad.emplace_back(f, probs[s]);
      }
      for (size_t s : ex.gold_slots) {
        for (int f : ex.slot_features[s]) grad.emplace_back(f, -probs[s] / gold);
      }
      for (auto [f, g] : grad) {
        g += options_.l2 * weights_[f];
        accum[f] += g * g;
        weights_[f] -= options_.learning_rate * g / std::sqrt(accum[f] + 1e-8);
      }
    }
    const double loss = Loss(examples);
    result.epoch_loss.push_back(loss);
    ++result.epochs_run;
    if (loss < result.best_loss - 1e-9) {
      result.best_loss = loss;
      best = weights_;
      result.accepted.push_back(true);
      stale = 0;
    } else {
      result.accepted.push_back(false);
      if (++stale >= options.patience) {
        result.early_stopped = true;
        break;
      }
    }
  }
  weights_ = std::move(best);
  return result;
}

std::unique_ptr<Scorer> MentionRanker::Clone() const {
  return std::make_unique<MentionRanker>(*this);
}

nlohmann::json MentionRanker::ToJson() const {
  nlohmann::json weights = nlohmann::json::array();
  for (size_t f = 0; f < weights_.size(); ++f) {
    if (weights_[f] != 0.0) weights.push_back({f, weights_[f]});
  }
  return {{"version", 1},
          {"kind", "mention_ranker"},
          {"learning_rate", options_.learning_rate},
          {"l2", options_.l2},
          {"init_stddev", options_.init_stddev},
          {"bootstrap", options_.bootstrap},
          {"seed", options_.seed},
          {"weights", std::move(weights)}};
}

MentionRanker MentionRanker::FromJson(const nlohmann::json &j) {
  if (j.value("kind", "") != "mention_ranker" || j.value("version", 0) != 1) {
    throw ScorerError("not a version 1 mention_ranker state");
  }
  Options o;
  o.learning_rate = j.at("learning_rate").get<double>();
  o.l2 = j.at("l2").get<double>();
  o.init_stddev = j.at("init_stddev").get<double>();
  o.bootstrap = j.at("bootstrap").get<bool>();
  o.seed = j.at("seed").get<uint64_t>();
  MentionRanker ranker(o);
  std::fill(ranker.weights_.begin(), ranker.weights_.end(), 0.0);
  for (const auto &entry : j.at("weights")) {
    const size_t f = entry.at(0).get<size_t>();
    if (f >= ranker.weights_.size()) throw ScorerError("weight index out of range");
    ranker.weights_[f] = entry.at(1).get<double>();
  }
  return ranker;
}

}  // namespace corefal
