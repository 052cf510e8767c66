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

// Annotation time model calibrated on measured answer times.

#ifndef COREFAL_COST_MODEL_H_
#define COREFAL_COST_MODEL_H_

#include <cstdint>
#include <stdexcept>

#include "corefal/annotator.h"
#include "json.hpp"

namespace corefal {

class CostModelError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Mean seconds per answer.
inline constexpr double kInitialQuestionSeconds = 15.96;
inline constexpr double kFollowupSeconds = 15.57;
// A follow-up-style question asked without the pairwise step first.
inline constexpr double kOnlyFollowupSeconds = 28.01;
// Pairwise questions per not-coreferent discrete answer, as published
// (15.57 / 15.96 rounded to three places).
inline constexpr double kPairwisePerNotCoreferent = 0.976;

// t = 15.96 p
double TimePairwise(int64_t p);
// t = 15.96 d_c + 15.57 d_nc
double TimeDiscrete(int64_t d_c, int64_t d_nc);
// Pairwise questions answerable in the time of the discrete ones:
// p = d_c + 0.976 d_nc.
double PairwiseEquivalent(int64_t d_c, int64_t d_nc);

// Largest number of distinct pairwise questions for m top spans with at
// most K antecedents each: K(K-1)/2 + (m-K)K, or m(m-1)/2 when m < K.
int64_t MaxPairwiseQuestions(int64_t m, int64_t K);

// Worst-case discrete time for m mentions (every answer "no", each costing
// an initial and a follow-up question) over the worst-case pairwise time.
// Throws CostModelError when there are no pairwise questions to compare
// against.
double FullLabelCostRatio(int64_t m, int64_t K);

enum class FullLabelCost {
  // Initial plus follow-up question for every mention.
  kTwoStage,
  // The measured time of follow-up-only questions for every mention.
  kOnlyFollowup,
};

// Worst-case seconds to label a document of m mentions exhaustively.
double FullLabelSeconds(int64_t m, FullLabelCost mode);

struct BudgetLedger {
  int64_t p = 0;
  int64_t d_c = 0;
  int64_t d_nc = 0;

  // Derived from the counters, never accumulated.
  double elapsed_seconds() const { return TimePairwise(p) + TimeDiscrete(d_c, d_nc); }
  double pairwise_equivalent() const {
    return static_cast<double>(p) + PairwiseEquivalent(d_c, d_nc);
  }
  int64_t questions() const { return p + d_c + d_nc; }

  void Record(Protocol protocol, Verdict verdict);
  BudgetLedger &operator+=(const BudgetLedger &other);
  bool operator==(const BudgetLedger &) const = default;
};

nlohmann::json ToJson(const BudgetLedger &ledger);

}  // namespace corefal

#endif  // COREFAL_COST_MODEL_H_
