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

// Coreference evaluation: MUC, B-cubed, CEAF-e, their mean F1 and mention
// detection F1. Singleton clusters are removed from both sides before
// scoring. Multi-document variants pool numerators and denominators over
// documents, as the reference CoNLL scorer does.

#ifndef COREFAL_METRICS_H_
#define COREFAL_METRICS_H_

#include <span>

#include "corefal/corpus.h"

namespace corefal {

struct ScoreTriple {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// F1 is 0 when precision + recall is 0; ratios with a zero denominator
// are 0.
ScoreTriple MakeScoreTriple(double precision_num, double precision_den,
                            double recall_num, double recall_den);

struct ClusteringPair {
  Clustering gold;
  Clustering pred;
};

ScoreTriple Muc(std::span<const ClusteringPair> docs);
ScoreTriple BCubed(std::span<const ClusteringPair> docs);
ScoreTriple CeafE(std::span<const ClusteringPair> docs);

ScoreTriple Muc(const Clustering &gold, const Clustering &pred);
ScoreTriple BCubed(const Clustering &gold, const Clustering &pred);
ScoreTriple CeafE(const Clustering &gold, const Clustering &pred);

struct CorefScores {
  ScoreTriple muc;
  ScoreTriple b_cubed;
  ScoreTriple ceaf_e;
  // Mean of the three F1 values.
  double avg_f1 = 0;
  // Exact-span micro F1 between gold mentions and predicted clustered
  // mentions.
  ScoreTriple mention;
};

CorefScores Evaluate(std::span<const ClusteringPair> docs);
CorefScores Evaluate(const Clustering &gold, const Clustering &pred);

double AvgF1(const Clustering &gold, const Clustering &pred);
ScoreTriple MentionDetection(std::span<const ClusteringPair> docs);

}  // namespace corefal

#endif  // COREFAL_METRICS_H_
