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

#ifndef COREFAL_SCORER_H_
#define COREFAL_SCORER_H_

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "corefal/corpus.h"
#include "json.hpp"

namespace corefal {

class ScorerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Label value for "no antecedent".
inline constexpr int kNoAntecedent = -1;

// P(ant(i) = y) over the antecedent window of one span. probs has one entry
// per candidate slot, the dummy antecedent last.
struct AntecedentDistribution {
  CandidateSet candidates;
  std::vector<double> probs;

  double epsilon() const { return probs.back(); }
  // Most probable slot; ties go to the earliest candidate, the dummy
  // antecedent loses every tie.
  size_t ArgmaxSlot() const;
  // Most probable real antecedent slot, -1 when the window is empty.
  int ArgmaxAntecedentSlot() const;
  // Span index of the argmax, or kNoAntecedent.
  int ArgmaxLabel() const;
};

struct ScorerOutput {
  std::vector<Span> spans;
  std::vector<AntecedentDistribution> distributions;
  std::vector<int> labels;
  Clustering predicted_clusters;
};

// Connected components of the antecedent links, without singletons.
Clustering ClustersFromLabels(std::span<const Span> spans,
                              std::span<const int> labels);

// Fills labels and predicted_clusters from the distributions.
ScorerOutput MakeScorerOutput(std::vector<Span> spans,
                              std::vector<AntecedentDistribution> dists);

// A labeled training document: candidate spans and the clustering that
// defines their correct antecedents. Spans absent from every cluster are
// trained towards the dummy antecedent.
struct TrainingDocument {
  const Document *doc = nullptr;
  std::vector<Span> spans;
  Clustering clusters;
};

struct TrainOptions {
  // Antecedent window used to build the training examples.
  int max_antecedents = 20;
  int max_epochs = 20;
  int patience = 2;
  uint64_t seed = 0;
};

struct TrainResult {
  // Training loss after each epoch, and whether the epoch improved on the
  // best loss so far (only improving epochs are kept).
  std::vector<double> epoch_loss;
  std::vector<bool> accepted;
  int epochs_run = 0;
  bool early_stopped = false;
  double best_loss = 0;
};

// The coreference model contract: for every span a normalized distribution
// over its K-span antecedent window plus the dummy antecedent.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual ScorerOutput Score(const Document &doc, std::span<const Span> spans,
                             int max_antecedents) const = 0;
  // Continues training from the current weights.
  virtual TrainResult Train(std::span<const TrainingDocument> docs,
                            const TrainOptions &options) = 0;
  // Back to the untrained state.
  virtual void Reset() = 0;
  virtual std::unique_ptr<Scorer> Clone() const = 0;
  // Versioned JSON state.
  virtual nlohmann::json ToJson() const = 0;
};

// Stand-in model built from gold clusters: each span peaks on its first
// gold antecedent inside the window (the dummy for cluster-initial and
// non-gold spans). With probability `noise` the peak moves to a uniformly
// chosen wrong candidate. The peak carries (1 - smoothing) * (1 - noise) of
// the mass on top of a uniform floor, so noise 1 is the uniform
// distribution. Training is a no-op.
class OracleNoiseScorer final : public Scorer {
 public:
  OracleNoiseScorer(const Corpus &gold, double noise, uint64_t seed,
                    double smoothing = kDefaultSmoothing);

  static constexpr double kDefaultSmoothing = 0.05;

  ScorerOutput Score(const Document &doc, std::span<const Span> spans,
                     int max_antecedents) const override;
  TrainResult Train(std::span<const TrainingDocument> docs,
                    const TrainOptions &options) override;
  void Reset() override {}
  std::unique_ptr<Scorer> Clone() const override;
  nlohmann::json ToJson() const override;

  double noise() const { return noise_; }
  double smoothing() const { return smoothing_; }
  uint64_t seed() const { return seed_; }

 private:
  // doc_id -> (span -> gold cluster index)
  std::unordered_map<std::string, std::map<Span, int>> gold_;
  double noise_;
  double smoothing_;
  uint64_t seed_;
};

// Scorer state for the oracle-noise model built from gold clusters.
OracleNoiseScorer CorruptGold(const Corpus &gold, double noise, uint64_t seed,
                              double smoothing =
                                  OracleNoiseScorer::kDefaultSmoothing);

// Log-linear mention ranker over a handful of surface features:
// exact string match, last-token match, distance bucket in spans
// (1, 2, 3, 4-7, 8-15, 16+), same speaker, and a bias for the dummy
// antecedent. Every pairwise feature and the dummy bias also get a copy
// conditioned on the anaphor's lowercased last token, so that e.g.
// pronouns can learn their own distance and match preferences.
class MentionRanker final : public Scorer {
 public:
  struct Options {
    double learning_rate = 0.2;
    double l2 = 1e-5;
    double init_stddev = 0.01;
    // Train each call on a bootstrap resample of the documents (committee
    // members).
    bool bootstrap = false;
    uint64_t seed = 0;
  };

  static constexpr int kNumDistanceBuckets = 6;
  // Global (unconditioned) feature ids.
  enum Feature : int {
    kExactMatch = 0,
    kLastTokenMatch = 1,
    kDistanceBucket0 = 2,  // kDistanceBucket0 + bucket
    kSameSpeaker = kDistanceBucket0 + kNumDistanceBuckets,
    kEpsilonBias,
    kNumGlobalFeatures,
  };
  static constexpr size_t kHashedSize = 1 << 16;

  explicit MentionRanker(Options options);
  MentionRanker() : MentionRanker(Options{}) {}

  ScorerOutput Score(const Document &doc, std::span<const Span> spans,
                     int max_antecedents) const override;
  TrainResult Train(std::span<const TrainingDocument> docs,
                    const TrainOptions &options) override;
  void Reset() override;
  std::unique_ptr<Scorer> Clone() const override;
  nlohmann::json ToJson() const override;
  static MentionRanker FromJson(const nlohmann::json &j);

  double weight(Feature f) const { return weights_[f]; }
  const std::vector<double> &weights() const { return weights_; }
  const Options &options() const { return options_; }

  // 0..5 for distances 1, 2, 3, 4-7, 8-15, 16+ (in spans).
  static int DistanceBucket(size_t distance);

 private:
  struct Example;
  void Probabilities(const Example &ex, std::vector<double> *probs) const;
  double Loss(const std::vector<Example> &examples) const;

  Options options_;
  std::vector<double> weights_;
};

struct EnsembleOutput {
  std::vector<std::vector<int>> member_labels;
  std::vector<std::vector<AntecedentDistribution>> member_distributions;
  // Candidate-wise mean, with labels and clusters from the mean.
  ScorerOutput mean;
};

// Throws ScorerError when fewer than two members are given or the members
// disagree on spans or candidate windows.
EnsembleOutput EnsembleAverage(std::span<const ScorerOutput> members);

}  // namespace corefal

#endif  // COREFAL_SCORER_H_
