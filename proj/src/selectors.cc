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

#include "corefal/selectors.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace corefal {
namespace {

// Probabilities this close to 1 count as settled.
constexpr double kCertain = 1.0 - 1e-12;

class UnionFind {
 public:
  explicit UnionFind(size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int Find(int x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  // Keeps the smaller root, so roots stay at the earliest member.
  void Union(int a, int b) {
    a = Find(a);
    b = Find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<int> parent_;
};

void OneHot(std::vector<double> *probs, size_t slot) {
  std::fill(probs->begin(), probs->end(), 0.0);
  (*probs)[slot] = 1.0;
}

}  // namespace

const char *ToString(Strategy s) {
  switch (s) {
    case Strategy::kClusteredEntropy:
      return "clustered_entropy";
    case Strategy::kClusteredQbc:
      return "clustered_qbc";
    case Strategy::kLccMcu:
      return "lcc_mcu";
    case Strategy::kRandom:
      return "random";
    case Strategy::kPairwiseEntropy:
      return "pairwise_entropy";
  }
  return "unknown";
}

std::optional<Strategy> StrategyFromString(std::string_view name) {
  for (Strategy s :
       {Strategy::kClusteredEntropy, Strategy::kClusteredQbc,
        Strategy::kLccMcu, Strategy::kRandom, Strategy::kPairwiseEntropy}) {
    if (name == ToString(s)) return s;
  }
  return std::nullopt;
}

Clustering ClusterView::Clusters(std::span<const Span> spans,
                                 const std::vector<bool> &excluded) const {
  Clustering out(cluster_size.size());
  for (size_t i = 0; i < spans.size(); ++i) {
    if (!excluded.empty() && excluded[i]) continue;
    out[cluster_of[i]].push_back(spans[i]);
  }
  return DropSingletons(Canonicalize(std::move(out)));
}

ClusterView BuildClusterView(std::span<const Span> spans,
                             std::span<const int> labels,
                             const ConstraintStore &links,
                             const std::vector<bool> &excluded) {
  std::unordered_map<Span, int, SpanHash> ids;
  for (size_t i = 0; i < spans.size(); ++i) ids.emplace(spans[i], i);
  // Spans that only appear in the links get ids past the document spans so
  // that must-link chains through them still connect.
  auto id_of = [&](const Span &s) {
    auto [it, inserted] = ids.emplace(s, static_cast<int>(ids.size()));
    return it->second;
  };
  std::vector<std::pair<int, int>> ml, cl;
  for (const LinkOp &op : links.history()) {
    const int a = id_of(op.a);
    const int b = id_of(op.b);
    (op.kind == LinkKind::kMustLink ? ml : cl).emplace_back(a, b);
  }

  UnionFind uf(ids.size());
  for (auto [a, b] : ml) uf.Union(a, b);
  auto cannot_link = [&](int ra, int rb) {
    for (auto [a, b] : cl) {
      const int fa = uf.Find(a);
      const int fb = uf.Find(b);
      if ((fa == ra && fb == rb) || (fa == rb && fb == ra)) return true;
    }
    return false;
  };
  auto is_excluded = [&](size_t i) {
    return !excluded.empty() && excluded[i];
  };
  for (size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l < 0 || is_excluded(i) || is_excluded(l)) continue;
    const int ri = uf.Find(static_cast<int>(i));
    const int rl = uf.Find(l);
    if (ri == rl || cannot_link(ri, rl)) continue;
    uf.Union(ri, rl);
  }

  ClusterView view;
  view.cluster_of.assign(spans.size(), -1);
  std::unordered_map<int, int> dense;
  for (size_t i = 0; i < spans.size(); ++i) {
    const int root = uf.Find(static_cast<int>(i));
    auto [it, inserted] =
        dense.emplace(root, static_cast<int>(view.cluster_size.size()));
    if (inserted) view.cluster_size.push_back(0);
    view.cluster_of[i] = it->second;
    ++view.cluster_size[it->second];
  }
  return view;
}

int MustLinkedSlot(const CandidateSet &cands, std::span<const Span> spans,
                   const ConstraintStore &links) {
  const Span &target = spans[cands.target];
  for (size_t s = 0; s < cands.antecedents.size(); ++s) {
    if (links.Query(target, spans[cands.antecedents[s]]) ==
        Relation::kMustLink) {
      return static_cast<int>(s);
    }
  }
  return -1;
}

AntecedentDistribution ReviseDistribution(const AntecedentDistribution &dist,
                                          std::span<const Span> spans,
                                          const ConstraintStore &links) {
  AntecedentDistribution out = dist;
  const CandidateSet &cands = dist.candidates;
  const Span &target = spans[cands.target];
  if (links.IsDiscourseNew(target)) {
    OneHot(&out.probs, cands.epsilon_slot());
    return out;
  }
  const int ml = MustLinkedSlot(cands, spans, links);
  if (ml >= 0) {
    OneHot(&out.probs, ml);
    return out;
  }
  bool changed = false;
  for (size_t s = 0; s < cands.antecedents.size(); ++s) {
    if (out.probs[s] != 0 && links.Query(target, spans[cands.antecedents[s]]) ==
                                 Relation::kCannotLink) {
      out.probs[s] = 0;
      changed = true;
    }
  }
  if (!changed) return out;
  const double total = std::accumulate(out.probs.begin(), out.probs.end(), 0.0);
  if (total <= 0) {
    OneHot(&out.probs, cands.epsilon_slot());
  } else {
    for (double &p : out.probs) p /= total;
  }
  return out;
}

std::vector<double> CountVotes(const CandidateSet &cands,
                               std::span<const int> member_labels) {
  std::vector<double> votes(cands.size(), 0.0);
  for (int label : member_labels) {
    int slot = label == kNoAntecedent ? -1 : cands.SlotOf(label);
    if (slot < 0) slot = static_cast<int>(cands.epsilon_slot());
    votes[slot] += 1;
  }
  return votes;
}

std::vector<double> ReviseVotes(const CandidateSet &cands,
                                std::vector<double> votes, int members,
                                std::span<const Span> spans,
                                const ConstraintStore &links) {
  const Span &target = spans[cands.target];
  auto concentrate = [&](size_t slot) {
    std::fill(votes.begin(), votes.end(), 0.0);
    votes[slot] = members;
  };
  if (links.IsDiscourseNew(target)) {
    concentrate(cands.epsilon_slot());
    return votes;
  }
  const int ml = MustLinkedSlot(cands, spans, links);
  if (ml >= 0) {
    concentrate(ml);
    return votes;
  }
  for (size_t s = 0; s < cands.antecedents.size(); ++s) {
    if (votes[s] != 0 && links.Query(target, spans[cands.antecedents[s]]) ==
                             Relation::kCannotLink) {
      votes[s] = 0;
    }
  }
  return votes;
}

std::vector<Outcome> AggregateByCluster(const CandidateSet &cands,
                                        std::span<const double> slot_mass,
                                        const ClusterView &view) {
  std::vector<Outcome> out;
  for (size_t s = 0; s < cands.antecedents.size(); ++s) {
    const int c = view.cluster_of[cands.antecedents[s]];
    auto it = std::find_if(out.begin(), out.end(),
                           [c](const Outcome &o) { return o.cluster == c; });
    if (it == out.end()) {
      out.push_back({c, slot_mass[s]});
    } else {
      it->mass += slot_mass[s];
    }
  }
  out.push_back({ClusterView::kEpsilonOutcome, slot_mass[cands.epsilon_slot()]});
  return out;
}

double ClusterProbability(const AntecedentDistribution &dist, int cluster,
                          const ClusterView &view) {
  if (cluster == ClusterView::kEpsilonOutcome) return dist.epsilon();
  double total = 0;
  const auto &ants = dist.candidates.antecedents;
  for (size_t s = 0; s < ants.size(); ++s) {
    if (view.cluster_of[ants[s]] == cluster) total += dist.probs[s];
  }
  return total;
}

double Entropy(std::span<const double> probs) {
  double h = 0;
  for (double p : probs) {
    if (p > 0) h -= p * std::log(p);
  }
  return h;
}

double ClusteredEntropy(const AntecedentDistribution &dist,
                        const ClusterView &view) {
  std::vector<double> mass;
  for (const Outcome &o : AggregateByCluster(dist.candidates, dist.probs, view)) {
    mass.push_back(o.mass);
  }
  return Entropy(mass);
}

double RawEntropy(const AntecedentDistribution &dist) {
  return Entropy(dist.probs);
}

double VoteEntropy(const CandidateSet &cands, std::span<const double> votes,
                   int members, const ClusterView &view) {
  std::vector<double> frac;
  for (const Outcome &o : AggregateByCluster(cands, votes, view)) {
    frac.push_back(o.mass / members);
  }
  return Entropy(frac);
}

// ---------------------------------------------------------------------------
// DocumentState

DocumentState::DocumentState(const CorpusDocument &doc, std::vector<Span> spans,
                             int max_antecedents,
                             std::unique_ptr<ConstraintStore> links)
    : doc_(&doc),
      spans_(std::move(spans)),
      max_antecedents_(max_antecedents),
      links_(std::move(links)),
      fixed_labels_(spans_.size()),
      excluded_(spans_.size(), false) {
  for (size_t i = 0; i < spans_.size(); ++i) index_.emplace(spans_[i], i);
}

std::optional<size_t> DocumentState::IndexOf(const Span &s) const {
  auto it = index_.find(s);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void DocumentState::SetModel(std::vector<AntecedentDistribution> dists,
                             std::vector<std::vector<int>> member_labels) {
  if (dists.size() != spans_.size()) {
    throw std::invalid_argument("one distribution per span expected");
  }
  for (const auto &row : member_labels) {
    if (row.size() != spans_.size()) {
      throw std::invalid_argument("one committee label per span expected");
    }
  }
  model_ = std::move(dists);
  member_labels_ = std::move(member_labels);
  std::vector<int> labels;
  for (const auto &d : model_) labels.push_back(d.ArgmaxLabel());
  model_clusters_ = ClustersFromLabels(spans_, labels);
  Refresh();
}

void DocumentState::Refresh() {
  revised_.clear();
  revised_.reserve(model_.size());
  labels_.assign(spans_.size(), kNoAntecedent);
  for (size_t i = 0; i < model_.size(); ++i) {
    AntecedentDistribution d = ReviseDistribution(model_[i], spans_, *links_);
    // An invalid mention cannot be anyone's antecedent.
    bool zeroed = false;
    const auto &ants = d.candidates.antecedents;
    for (size_t s = 0; s < ants.size(); ++s) {
      if (excluded_[ants[s]] && d.probs[s] > 0 && d.probs[s] < 1) {
        d.probs[s] = 0;
        zeroed = true;
      }
    }
    if (zeroed) {
      const double total = std::accumulate(d.probs.begin(), d.probs.end(), 0.0);
      if (total <= 0) {
        OneHot(&d.probs, d.candidates.epsilon_slot());
      } else {
        for (double &p : d.probs) p /= total;
      }
    }
    if (fixed_labels_[i]) {
      labels_[i] = *fixed_labels_[i];
    } else if (!excluded_[i]) {
      labels_[i] = d.ArgmaxLabel();
    }
    revised_.push_back(std::move(d));
  }
  view_ = BuildClusterView(spans_, labels_, *links_, excluded_);
}

Clustering DocumentState::ViewClusters() const {
  return view_.Clusters(spans_, excluded_);
}

void DocumentState::FixLabel(size_t span, int label) {
  fixed_labels_.at(span) = label;
}

bool DocumentState::HasFixedLabel(size_t span) const {
  return fixed_labels_.at(span).has_value();
}

void DocumentState::Exclude(size_t span) { excluded_.at(span) = true; }

bool DocumentState::IsEligible(size_t span) const {
  if (IsQueried(span) || excluded_[span]) return false;
  const CandidateSet &cands = model_[span].candidates;
  if (cands.antecedents.empty()) return false;
  if (links_->IsDiscourseNew(spans_[span])) return false;
  return MustLinkedSlot(cands, spans_, *links_) < 0;
}

int DocumentState::ProposedAntecedent(size_t span) const {
  const AntecedentDistribution &d = revised_[span];
  const int slot = d.ArgmaxAntecedentSlot();
  if (slot < 0) return -1;
  return static_cast<int>(d.candidates.antecedents[slot]);
}

// ---------------------------------------------------------------------------
// Selection

namespace {

SelectionResult MakeResult(const DocumentState &state, size_t i, double score,
                           Strategy strategy) {
  return {i, state.spans()[i], score, strategy};
}

template <typename ScoreFn>
std::optional<SelectionResult> ArgmaxEligible(const DocumentState &state,
                                              Strategy strategy,
                                              ScoreFn score) {
  std::optional<SelectionResult> best;
  for (size_t i = 0; i < state.size(); ++i) {
    if (!state.IsEligible(i)) continue;
    const double s = score(i);
    if (!best || s > best->score) best = MakeResult(state, i, s, strategy);
  }
  return best;
}

}  // namespace

std::optional<SelectionResult> SelectClusteredEntropy(
    const DocumentState &state, bool clustered) {
  return ArgmaxEligible(state, Strategy::kClusteredEntropy, [&](size_t i) {
    const AntecedentDistribution &d = state.revised()[i];
    return clustered ? ClusteredEntropy(d, state.view()) : RawEntropy(d);
  });
}

std::optional<SelectionResult> SelectClusteredQbc(const DocumentState &state,
                                                  bool clustered) {
  const int members = state.num_members();
  if (members < 1) {
    throw std::invalid_argument("committee selection needs member labels");
  }
  return ArgmaxEligible(state, Strategy::kClusteredQbc, [&](size_t i) {
    const CandidateSet &cands = state.model()[i].candidates;
    std::vector<int> labels;
    for (const auto &row : state.member_labels()) labels.push_back(row[i]);
    const std::vector<double> votes =
        ReviseVotes(cands, CountVotes(cands, labels), members, state.spans(),
                    state.links());
    if (clustered) return VoteEntropy(cands, votes, members, state.view());
    std::vector<double> frac;
    for (double v : votes) frac.push_back(v / members);
    return Entropy(frac);
  });
}

std::vector<SelectionResult> SelectLccMcu(const DocumentState &state, int L,
                                          bool clustered) {
  if (L <= 0) return {};
  const ClusterView &view = state.view();
  std::vector<SelectionResult> in_cluster, singletons;
  for (size_t i = 0; i < state.size(); ++i) {
    if (!state.IsEligible(i)) continue;
    const AntecedentDistribution &d = state.revised()[i];
    const int label = state.labels()[i];
    if (view.IsClustered(i)) {
      double s;
      if (label == kNoAntecedent) {
        s = d.epsilon();
      } else if (clustered) {
        s = ClusterProbability(d, view.cluster_of[i], view);
      } else {
        const int slot = d.candidates.SlotOf(label);
        s = slot < 0 ? 0 : d.probs[slot];
      }
      if (s < kCertain) {
        in_cluster.push_back(MakeResult(state, i, s, Strategy::kLccMcu));
      }
    } else {
      double s = 0;
      if (clustered) {
        for (const Outcome &o :
             AggregateByCluster(d.candidates, d.probs, view)) {
          if (o.cluster != ClusterView::kEpsilonOutcome) {
            s = std::max(s, o.mass);
          }
        }
      } else {
        for (size_t k = 0; k < d.candidates.antecedents.size(); ++k) {
          s = std::max(s, d.probs[k]);
        }
      }
      if (s < kCertain) {
        singletons.push_back(MakeResult(state, i, s, Strategy::kLccMcu));
      }
    }
  }
  std::stable_sort(in_cluster.begin(), in_cluster.end(),
                   [](const SelectionResult &a, const SelectionResult &b) {
                     return a.score < b.score;
                   });
  std::stable_sort(singletons.begin(), singletons.end(),
                   [](const SelectionResult &a, const SelectionResult &b) {
                     return a.score > b.score;
                   });
  const size_t n = std::min<size_t>(L / 2, in_cluster.size());
  const size_t m = std::min<size_t>(L - n, singletons.size());
  std::vector<SelectionResult> out(in_cluster.begin(), in_cluster.begin() + n);
  out.insert(out.end(), singletons.begin(), singletons.begin() + m);
  return out;
}

std::optional<SelectionResult> SelectRandom(const DocumentState &state,
                                            Rng &rng) {
  std::vector<size_t> pool;
  for (size_t i = 0; i < state.size(); ++i) {
    if (state.IsEligible(i)) pool.push_back(i);
  }
  if (pool.empty()) return std::nullopt;
  return MakeResult(state, pool[rng.Index(pool.size())], 0, Strategy::kRandom);
}

std::optional<PairSelection> SelectPairwiseEntropy(
    const DocumentState &state) {
  std::optional<PairSelection> best;
  const auto spans = state.spans();
  for (size_t i = 0; i < state.size(); ++i) {
    if (state.IsExcluded(i)) continue;
    const AntecedentDistribution &d = state.revised()[i];
    const CandidateSet &cands = d.candidates;
    if (cands.antecedents.empty()) continue;
    if (state.links().IsDiscourseNew(spans[i])) continue;
    if (MustLinkedSlot(cands, spans, state.links()) >= 0) continue;
    for (size_t s = 0; s < cands.antecedents.size(); ++s) {
      const size_t y = cands.antecedents[s];
      if (state.IsExcluded(y)) continue;
      if (state.links().Query(spans[i], spans[y]) != Relation::kUnknown) {
        continue;
      }
      const double p = d.probs[s];
      const double h = Entropy(std::vector<double>{p, 1 - p});
      if (!best || h > best->score) best = PairSelection{i, y, h};
    }
  }
  return best;
}

}  // namespace corefal
