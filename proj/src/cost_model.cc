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

#include "corefal/cost_model.h"

namespace corefal {

double TimePairwise(int64_t p) {
  return kInitialQuestionSeconds * static_cast<double>(p);
}

double TimeDiscrete(int64_t d_c, int64_t d_nc) {
  return kInitialQuestionSeconds * static_cast<double>(d_c) +
         kFollowupSeconds * static_cast<double>(d_nc);
}

double PairwiseEquivalent(int64_t d_c, int64_t d_nc) {
  return static_cast<double>(d_c) +
         kPairwisePerNotCoreferent * static_cast<double>(d_nc);
}

int64_t MaxPairwiseQuestions(int64_t m, int64_t K) {
  if (m < 0 || K < 1) throw CostModelError("need m >= 0 and K >= 1");
  if (m < K) return m * (m - 1) / 2;
  return K * (K - 1) / 2 + (m - K) * K;
}

double FullLabelCostRatio(int64_t m, int64_t K) {
  const int64_t pairs = MaxPairwiseQuestions(m, K);
  if (pairs == 0) {
    throw CostModelError("no pairwise questions for m=" + std::to_string(m) +
                         ", K=" + std::to_string(K) + "; ratio undefined");
  }
  return FullLabelSeconds(m, FullLabelCost::kTwoStage) / TimePairwise(pairs);
}

double FullLabelSeconds(int64_t m, FullLabelCost mode) {
  const double per_mention = mode == FullLabelCost::kTwoStage
                                 ? kInitialQuestionSeconds + kFollowupSeconds
                                 : kOnlyFollowupSeconds;
  return per_mention * static_cast<double>(m);
}

void BudgetLedger::Record(Protocol protocol, Verdict verdict) {
  if (protocol == Protocol::kPairwise) {
    ++p;
  } else if (verdict == Verdict::kCoreferent) {
    ++d_c;
  } else {
    ++d_nc;
  }
}

BudgetLedger &BudgetLedger::operator+=(const BudgetLedger &other) {
  p += other.p;
  d_c += other.d_c;
  d_nc += other.d_nc;
  return *this;
}

nlohmann::json ToJson(const BudgetLedger &ledger) {
  return {{"p", ledger.p},
          {"d_c", ledger.d_c},
          {"d_nc", ledger.d_nc},
          {"elapsed_seconds", ledger.elapsed_seconds()},
          {"pairwise_equivalent", ledger.pairwise_equivalent()}};
}

}  // namespace corefal
