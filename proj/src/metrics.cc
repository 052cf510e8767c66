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

#include "corefal/metrics.h"

#include <map>
#include <set>

#include "corefal/matching.h"

namespace corefal {
namespace {

struct Ratio {
  double num = 0;
  double den = 0;
};

using ClusterIndex = std::map<Span, int>;

ClusterIndex IndexOf(const Clustering &clusters) {
  ClusterIndex index;
  for (size_t c = 0; c < clusters.size(); ++c) {
    for (const Span &s : clusters[c]) index[s] = static_cast<int>(c);
  }
  return index;
}

// MUC recall of `key` against `response`: links of each key cluster that
// survive the partition induced by the response.
Ratio MucRatio(const Clustering &key, const Clustering &response) {
  const ClusterIndex index = IndexOf(response);
  Ratio r;
  for (const Cluster &k : key) {
    std::set<int> parts;
    int unmatched = 0;
    for (const Span &s : k) {
      auto it = index.find(s);
      if (it == index.end()) {
        ++unmatched;
      } else {
        parts.insert(it->second);
      }
    }
    const double partitions = static_cast<double>(parts.size() + unmatched);
    r.num += static_cast<double>(k.size()) - partitions;
    r.den += static_cast<double>(k.size()) - 1;
  }
  return r;
}

// B-cubed recall of `key` against `response`.
Ratio BCubedRatio(const Clustering &key, const Clustering &response) {
  const ClusterIndex index = IndexOf(response);
  Ratio r;
  for (const Cluster &k : key) {
    std::map<int, int> overlap;
    for (const Span &s : k) {
      auto it = index.find(s);
      if (it != index.end()) ++overlap[it->second];
    }
    for (const auto &[c, count] : overlap) {
      r.num += static_cast<double>(count) * count / static_cast<double>(k.size());
    }
    r.den += static_cast<double>(k.size());
  }
  return r;
}

double Phi4(const Cluster &a, const Cluster &b) {
  std::set<Span> in_a(a.begin(), a.end());
  int common = 0;
  for (const Span &s : b) common += in_a.count(s);
  return 2.0 * common / static_cast<double>(a.size() + b.size());
}

double CeafSimilarity(const Clustering &gold, const Clustering &pred) {
  if (gold.empty() || pred.empty()) return 0;
  std::vector<std::vector<double>> w(gold.size(),
                                     std::vector<double>(pred.size()));
  for (size_t g = 0; g < gold.size(); ++g) {
    for (size_t p = 0; p < pred.size(); ++p) w[g][p] = Phi4(gold[g], pred[p]);
  }
  const std::vector<int> assignment = MaxWeightAssignment(w);
  double total = 0;
  for (size_t g = 0; g < gold.size(); ++g) {
    if (assignment[g] >= 0) total += w[g][assignment[g]];
  }
  return total;
}

std::vector<ClusteringPair> Cleaned(std::span<const ClusteringPair> docs) {
  std::vector<ClusteringPair> out;
  out.reserve(docs.size());
  for (const ClusteringPair &d : docs) {
    out.push_back({DropSingletons(d.gold), DropSingletons(d.pred)});
  }
  return out;
}

}  // namespace

ScoreTriple MakeScoreTriple(double precision_num, double precision_den,
                            double recall_num, double recall_den) {
  ScoreTriple t;
  t.precision = precision_den > 0 ? precision_num / precision_den : 0;
  t.recall = recall_den > 0 ? recall_num / recall_den : 0;
  t.f1 = t.precision + t.recall > 0
             ? 2 * t.precision * t.recall / (t.precision + t.recall)
             : 0;
  return t;
}

ScoreTriple Muc(std::span<const ClusteringPair> docs) {
  Ratio p, r;
  for (const ClusteringPair &d : Cleaned(docs)) {
    const Ratio dr = MucRatio(d.gold, d.pred);
    const Ratio dp = MucRatio(d.pred, d.gold);
    r.num += dr.num;
    r.den += dr.den;
    p.num += dp.num;
    p.den += dp.den;
  }
  return MakeScoreTriple(p.num, p.den, r.num, r.den);
}

ScoreTriple BCubed(std::span<const ClusteringPair> docs) {
  Ratio p, r;
  for (const ClusteringPair &d : Cleaned(docs)) {
    const Ratio dr = BCubedRatio(d.gold, d.pred);
    const Ratio dp = BCubedRatio(d.pred, d.gold);
    r.num += dr.num;
    r.den += dr.den;
    p.num += dp.num;
    p.den += dp.den;
  }
  return MakeScoreTriple(p.num, p.den, r.num, r.den);
}

ScoreTriple CeafE(std::span<const ClusteringPair> docs) {
  double similarity = 0;
  double gold_entities = 0;
  double pred_entities = 0;
  for (const ClusteringPair &d : Cleaned(docs)) {
    similarity += CeafSimilarity(d.gold, d.pred);
    gold_entities += static_cast<double>(d.gold.size());
    pred_entities += static_cast<double>(d.pred.size());
  }
  return MakeScoreTriple(similarity, pred_entities, similarity, gold_entities);
}

ScoreTriple MentionDetection(std::span<const ClusteringPair> docs) {
  double correct = 0;
  double gold_total = 0;
  double pred_total = 0;
  for (const ClusteringPair &d : Cleaned(docs)) {
    std::set<Span> gold;
    for (const Cluster &c : d.gold) gold.insert(c.begin(), c.end());
    std::set<Span> pred;
    for (const Cluster &c : d.pred) pred.insert(c.begin(), c.end());
    for (const Span &s : pred) correct += gold.count(s);
    gold_total += static_cast<double>(gold.size());
    pred_total += static_cast<double>(pred.size());
  }
  return MakeScoreTriple(correct, pred_total, correct, gold_total);
}

ScoreTriple Muc(const Clustering &gold, const Clustering &pred) {
  ClusteringPair d{gold, pred};
  return Muc(std::span<const ClusteringPair>(&d, 1));
}

ScoreTriple BCubed(const Clustering &gold, const Clustering &pred) {
  ClusteringPair d{gold, pred};
  return BCubed(std::span<const ClusteringPair>(&d, 1));
}

ScoreTriple CeafE(const Clustering &gold, const Clustering &pred) {
  ClusteringPair d{gold, pred};
  return CeafE(std::span<const ClusteringPair>(&d, 1));
}

CorefScores Evaluate(std::span<const ClusteringPair> docs) {
  CorefScores s;
  s.muc = Muc(docs);
  s.b_cubed = BCubed(docs);
  s.ceaf_e = CeafE(docs);
  s.avg_f1 = (s.muc.f1 + s.b_cubed.f1 + s.ceaf_e.f1) / 3.0;
  s.mention = MentionDetection(docs);
  return s;
}

CorefScores Evaluate(const Clustering &gold, const Clustering &pred) {
  ClusteringPair d{gold, pred};
  return Evaluate(std::span<const ClusteringPair>(&d, 1));
}

double AvgF1(const Clustering &gold, const Clustering &pred) {
  return Evaluate(gold, pred).avg_f1;
}

}  // namespace corefal
