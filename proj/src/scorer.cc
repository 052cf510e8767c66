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

#include "corefal/scorer.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "corefal/random.h"

namespace corefal {

size_t AntecedentDistribution::ArgmaxSlot() const {
  const size_t epsilon = probs.size() - 1;
  size_t best = epsilon;
  for (size_t s = 0; s < epsilon; ++s) {
    if (probs[s] > probs[best] || (best == epsilon && probs[s] == probs[best])) {
      best = s;
    }
  }
  return best;
}

int AntecedentDistribution::ArgmaxAntecedentSlot() const {
  int best = -1;
  for (size_t s = 0; s + 1 < probs.size(); ++s) {
    if (best < 0 || probs[s] > probs[best]) best = static_cast<int>(s);
  }
  return best;
}

int AntecedentDistribution::ArgmaxLabel() const {
  const size_t slot = ArgmaxSlot();
  if (slot == candidates.epsilon_slot()) return kNoAntecedent;
  return static_cast<int>(candidates.antecedents[slot]);
}

Clustering ClustersFromLabels(std::span<const Span> spans,
                              std::span<const int> labels) {
  std::vector<int> parent(spans.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kNoAntecedent) continue;
    const int a = find(static_cast<int>(i));
    const int b = find(labels[i]);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<int, Cluster> groups;
  for (size_t i = 0; i < spans.size(); ++i) {
    groups[find(static_cast<int>(i))].push_back(spans[i]);
  }
  Clustering out;
  for (auto &[root, cluster] : groups) {
    if (cluster.size() >= 2) out.push_back(std::move(cluster));
  }
  return Canonicalize(std::move(out));
}

ScorerOutput MakeScorerOutput(std::vector<Span> spans,
                              std::vector<AntecedentDistribution> dists) {
  ScorerOutput out;
  out.labels.reserve(dists.size());
  for (const AntecedentDistribution &d : dists) {
    out.labels.push_back(d.ArgmaxLabel());
  }
  out.predicted_clusters = ClustersFromLabels(spans, out.labels);
  out.spans = std::move(spans);
  out.distributions = std::move(dists);
  return out;
}

// ---------------------------------------------------------------------------
// OracleNoiseScorer

OracleNoiseScorer::OracleNoiseScorer(const Corpus &gold, double noise,
                                     uint64_t seed, double smoothing)
    : noise_(std::clamp(noise, 0.0, 1.0)),
      smoothing_(std::clamp(smoothing, 0.0, 1.0)),
      seed_(seed) {
  for (const CorpusDocument &d : gold) {
    auto &index = gold_[d.doc.doc_id];
    if (!d.clusters) continue;
    for (size_t c = 0; c < d.clusters->size(); ++c) {
      for (const Span &s : (*d.clusters)[c]) index[s] = static_cast<int>(c);
    }
  }
}

OracleNoiseScorer CorruptGold(const Corpus &gold, double noise, uint64_t seed,
                              double smoothing) {
  return OracleNoiseScorer(gold, noise, seed, smoothing);
}

ScorerOutput OracleNoiseScorer::Score(const Document &doc,
                                      std::span<const Span> spans,
                                      int max_antecedents) const {
  static const std::map<Span, int> kEmpty;
  auto it = gold_.find(doc.doc_id);
  const auto &index = it == gold_.end() ? kEmpty : it->second;
  auto cluster_of = [&](const Span &s) {
    auto found = index.find(s);
    return found == index.end() ? -1 : found->second;
  };

  const uint64_t doc_seed = MixSeed(seed_, StableHash(doc.doc_id));
  const double peak = (1.0 - smoothing_) * (1.0 - noise_);
  std::vector<AntecedentDistribution> dists;
  for (size_t i = 0; i < spans.size(); ++i) {
    AntecedentDistribution d;
    d.candidates = AntecedentCandidates(spans, i, max_antecedents);
    const size_t n = d.candidates.size();
    size_t target = d.candidates.epsilon_slot();
    const int cluster = cluster_of(spans[i]);
    if (cluster >= 0) {
      for (size_t s = 0; s < d.candidates.antecedents.size(); ++s) {
        if (cluster_of(spans[d.candidates.antecedents[s]]) == cluster) {
          target = s;
          break;
        }
      }
    }
    Rng rng(MixSeed(doc_seed, SpanHash()(spans[i])));
    if (n > 1 && rng.Uniform() < noise_) {
      size_t wrong = rng.Index(n - 1);
      if (wrong >= target) ++wrong;
      target = wrong;
    }
    d.probs.assign(n, (1.0 - peak) / static_cast<double>(n));
    d.probs[target] += peak;
    dists.push_back(std::move(d));
  }
  return MakeScorerOutput(std::vector<Span>(spans.begin(), spans.end()),
                          std::move(dists));
}

TrainResult OracleNoiseScorer::Train(std::span<const TrainingDocument> docs,
                                     const TrainOptions &) {
  if (docs.empty()) throw ScorerError("empty training set");
  return TrainResult{};
}

std::unique_ptr<Scorer> OracleNoiseScorer::Clone() const {
  return std::make_unique<OracleNoiseScorer>(*this);
}

nlohmann::json OracleNoiseScorer::ToJson() const {
  return {{"version", 1},
          {"kind", "oracle_noise"},
          {"noise", noise_},
          {"smoothing", smoothing_},
          {"seed", seed_}};
}

// ---------------------------------------------------------------------------
// Ensembles

EnsembleOutput EnsembleAverage(std::span<const ScorerOutput> members) {
  if (members.size() < 2) {
    throw ScorerError("an ensemble needs at least two members");
  }
  const ScorerOutput &first = members[0];
  for (const ScorerOutput &m : members) {
    if (m.spans != first.spans ||
        m.distributions.size() != first.distributions.size()) {
      throw ScorerError("ensemble members scored different spans");
    }
    for (size_t i = 0; i < m.distributions.size(); ++i) {
      if (m.distributions[i].candidates.antecedents !=
          first.distributions[i].candidates.antecedents) {
        throw ScorerError("ensemble members disagree on the candidates of " +
                          ToString(first.spans[i]));
      }
    }
  }

  EnsembleOutput out;
  std::vector<AntecedentDistribution> mean = first.distributions;
  for (AntecedentDistribution &d : mean) {
    std::fill(d.probs.begin(), d.probs.end(), 0.0);
  }
  const double scale = 1.0 / static_cast<double>(members.size());
  for (const ScorerOutput &m : members) {
    out.member_labels.push_back(m.labels);
    out.member_distributions.push_back(m.distributions);
    for (size_t i = 0; i < mean.size(); ++i) {
      for (size_t s = 0; s < mean[i].probs.size(); ++s) {
        mean[i].probs[s] += m.distributions[i].probs[s] * scale;
      }
    }
  }
  out.mean = MakeScorerOutput(first.spans, std::move(mean));
  return out;
}

}  // namespace corefal
