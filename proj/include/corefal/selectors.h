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

// Cluster-level uncertainty and mention selection.
//
// A span's antecedent distribution is turned into a distribution over
// clusters of the current working partition (the ClusterView), plus one
// "discourse-new" outcome carrying the dummy antecedent's mass. Entropy,
// committee vote entropy and the LCC/MCU scores are computed on that
// aggregated distribution after revising it with the must-link/cannot-link
// constraints collected so far.

#ifndef COREFAL_SELECTORS_H_
#define COREFAL_SELECTORS_H_

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "corefal/constraints.h"
#include "corefal/corpus.h"
#include "corefal/random.h"
#include "corefal/scorer.h"

namespace corefal {

enum class Strategy {
  kClusteredEntropy,
  kClusteredQbc,
  kLccMcu,
  kRandom,
  // Pair-level binary entropy; only meaningful with pairwise questions.
  kPairwiseEntropy,
};

const char *ToString(Strategy s);
std::optional<Strategy> StrategyFromString(std::string_view name);

// Working partition over the spans of one document. Every span has a
// cluster id; spans outside any multi-span cluster have their own id.
struct ClusterView {
  // Outcome id used for the dummy antecedent in aggregated distributions.
  static constexpr int kEpsilonOutcome = -1;

  std::vector<int> cluster_of;
  std::vector<int> cluster_size;

  int num_clusters() const { return static_cast<int>(cluster_size.size()); }
  bool IsClustered(size_t span) const {
    return cluster_size[cluster_of[span]] > 1;
  }
  // Multi-span clusters as span lists, excluded spans removed.
  Clustering Clusters(std::span<const Span> spans,
                      const std::vector<bool> &excluded = {}) const;
};

// Must-link classes first, then the antecedent labels in document order.
// A label link is skipped when it would put cannot-linked spans together or
// touches an excluded span. labels[i] is a span index or kNoAntecedent.
ClusterView BuildClusterView(std::span<const Span> spans,
                             std::span<const int> labels,
                             const ConstraintStore &links,
                             const std::vector<bool> &excluded = {});

// Applies the link-based revision rules to one distribution: a
// discourse-new span gets all mass on the dummy; otherwise the earliest
// must-linked candidate gets all mass; otherwise cannot-linked candidates
// are zeroed and the rest renormalized (all mass to the dummy when nothing
// is left).
AntecedentDistribution ReviseDistribution(const AntecedentDistribution &dist,
                                          std::span<const Span> spans,
                                          const ConstraintStore &links);

// Slot of the earliest candidate must-linked to the target, or -1.
int MustLinkedSlot(const CandidateSet &cands, std::span<const Span> spans,
                   const ConstraintStore &links);

// Committee votes per slot (dummy last) from member labels of one span.
std::vector<double> CountVotes(const CandidateSet &cands,
                               std::span<const int> member_labels);

// Vote revision: a must-linked candidate receives all `members` votes,
// cannot-linked candidates lose theirs, and a discourse-new span puts all
// votes on the dummy.
std::vector<double> ReviseVotes(const CandidateSet &cands,
                                std::vector<double> votes, int members,
                                std::span<const Span> spans,
                                const ConstraintStore &links);

struct Outcome {
  int cluster = ClusterView::kEpsilonOutcome;
  double mass = 0;
};

// Mass per view cluster (and the dummy outcome) for per-slot masses over a
// candidate set, in order of first appearance with the dummy last.
std::vector<Outcome> AggregateByCluster(const CandidateSet &cands,
                                        std::span<const double> slot_mass,
                                        const ClusterView &view);

// P(i in C): summed candidate probability of cluster `cluster`, or the dummy
// probability for kEpsilonOutcome. Unknown ids give 0.
double ClusterProbability(const AntecedentDistribution &dist, int cluster,
                          const ClusterView &view);

// -sum p ln p over positive entries.
double Entropy(std::span<const double> probs);
double ClusteredEntropy(const AntecedentDistribution &dist,
                        const ClusterView &view);
// Entropy over individual candidates, for the ablation without cluster
// aggregation.
double RawEntropy(const AntecedentDistribution &dist);
// Entropy of votes/members aggregated by cluster.
double VoteEntropy(const CandidateSet &cands, std::span<const double> votes,
                   int members, const ClusterView &view);

// Annotation state of one document: model output, constraints, labels and
// the derived revised distributions and cluster view.
class DocumentState {
 public:
  DocumentState(const CorpusDocument &doc, std::vector<Span> spans,
                int max_antecedents, std::unique_ptr<ConstraintStore> links);

  DocumentState(const DocumentState &) = delete;
  DocumentState &operator=(const DocumentState &) = delete;
  DocumentState(DocumentState &&) = default;
  DocumentState &operator=(DocumentState &&) = default;

  // Installs model distributions (and optional committee labels, one row
  // per member) and refreshes the derived state.
  void SetModel(std::vector<AntecedentDistribution> dists,
                std::vector<std::vector<int>> member_labels = {});

  // Recomputes revised distributions, labels and the view from the current
  // links. Called after every answer.
  void Refresh();

  const CorpusDocument &document() const { return *doc_; }
  const std::string &doc_id() const { return doc_->doc.doc_id; }
  std::span<const Span> spans() const { return spans_; }
  size_t size() const { return spans_.size(); }
  int max_antecedents() const { return max_antecedents_; }
  std::optional<size_t> IndexOf(const Span &s) const;

  const ConstraintStore &links() const { return *links_; }
  ConstraintStore &mutable_links() { return *links_; }

  const std::vector<AntecedentDistribution> &model() const { return model_; }
  const std::vector<AntecedentDistribution> &revised() const {
    return revised_;
  }
  const std::vector<std::vector<int>> &member_labels() const {
    return member_labels_;
  }
  int num_members() const { return static_cast<int>(member_labels_.size()); }
  const std::vector<int> &labels() const { return labels_; }
  const ClusterView &view() const { return view_; }
  // The model's own clusters, before any annotation.
  const Clustering &model_clusters() const { return model_clusters_; }
  // Current working clusters (excluded spans removed).
  Clustering ViewClusters() const;

  // Fixes the label of a span regardless of the model.
  void FixLabel(size_t span, int label);
  bool HasFixedLabel(size_t span) const;
  void Exclude(size_t span);
  bool IsExcluded(size_t span) const { return excluded_[span]; }
  const std::vector<bool> &excluded() const { return excluded_; }
  bool IsQueried(size_t span) const { return links_->IsQueried(spans_[span]); }

  // A span can be asked about: not queried, not excluded, has at least one
  // real candidate, and its antecedent is not already settled by the links.
  bool IsEligible(size_t span) const;
  // Highest revised real candidate (span index), earliest on ties; -1 for
  // an empty window.
  int ProposedAntecedent(size_t span) const;

 private:
  const CorpusDocument *doc_;
  std::vector<Span> spans_;
  int max_antecedents_;
  std::unique_ptr<ConstraintStore> links_;
  std::unordered_map<Span, size_t, SpanHash> index_;

  std::vector<AntecedentDistribution> model_;
  std::vector<std::vector<int>> member_labels_;
  Clustering model_clusters_;
  std::vector<AntecedentDistribution> revised_;
  std::vector<int> labels_;
  std::vector<std::optional<int>> fixed_labels_;
  std::vector<bool> excluded_;
  ClusterView view_;
};

struct SelectionResult {
  size_t span_index = 0;
  Span span;
  double score = 0;
  Strategy strategy = Strategy::kClusteredEntropy;
};

// Highest clustered entropy among eligible spans; earliest on ties. With
// `clustered` false the raw candidate entropy is used instead. nullopt when
// no span is eligible.
std::optional<SelectionResult> SelectClusteredEntropy(
    const DocumentState &state, bool clustered = true);

// Highest revised cluster vote entropy among eligible spans. Requires
// committee labels on the state.
std::optional<SelectionResult> SelectClusteredQbc(const DocumentState &state,
                                                  bool clustered = true);

// LCC/MCU batch for L annotations: n = min(L/2, #clustered) clustered
// spans with the smallest own-cluster probability, then m = min(L - n,
// #unclustered) unclustered spans with the largest best-cluster
// probability. Only eligible spans with scores below 1 are considered.
std::vector<SelectionResult> SelectLccMcu(const DocumentState &state, int L,
                                          bool clustered = true);

// Uniformly random eligible span.
std::optional<SelectionResult> SelectRandom(const DocumentState &state,
                                            Rng &rng);

struct PairSelection {
  size_t span_index = 0;
  size_t antecedent_index = 0;
  double score = 0;
};

// Pair (i, y) of a span and one of its real candidates whose relation is
// still unknown, maximizing the binary entropy of the revised P(ant(i)=y).
// Earliest span, then earliest candidate, on ties.
std::optional<PairSelection> SelectPairwiseEntropy(const DocumentState &state);

}  // namespace corefal

#endif  // COREFAL_SELECTORS_H_
