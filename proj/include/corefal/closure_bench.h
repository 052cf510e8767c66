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

// Timing of incremental link closures against recomputation from the full
// insertion history, one insertion at a time.

#ifndef COREFAL_CLOSURE_BENCH_H_
#define COREFAL_CLOSURE_BENCH_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "corefal/constraints.h"
#include "corefal/corpus.h"

namespace corefal {

struct ClosureBenchConfig {
  int insertions = 1600;
  // Mentions of the synthetic document the answers are simulated on.
  int mentions = 1600;
  int max_antecedents = 100;
  uint64_t seed = 1;
  // Timed copies of each incremental insertion; the median is reported.
  int incremental_repeats = 5;
};

struct ClosureBenchRow {
  int insertion = 0;  // 1-based
  double incremental_ms = 0;
  double recompute_ms = 0;
};

struct ClosureBenchResult {
  std::vector<ClosureBenchRow> rows;
  // Median recompute over median incremental time across the last
  // kFinalWindow rows.
  double final_ratio = 0;

  static constexpr size_t kFinalWindow = 32;
};

// Link insertions from simulated discrete answers on one document: mentions
// are visited in random order, the proposed antecedent is a random earlier
// candidate (half of the time a gold one), and a "no" adds the cannot-link
// plus the must-link to the first mention of the entity. Truncated to n.
std::vector<LinkOp> SimulatedInsertions(const CorpusDocument &doc, int n,
                                        int max_antecedents, uint64_t seed);

ClosureBenchResult RunClosureBench(const ClosureBenchConfig &config);
ClosureBenchResult TimeInsertions(std::span<const LinkOp> ops,
                                  int incremental_repeats);

// Medians of consecutive windows of `window` values (the last window may be
// shorter).
std::vector<double> WindowedMedians(std::span<const double> values,
                                    size_t window);

void WriteClosureBenchCsv(std::ostream &out, const ClosureBenchResult &result);

}  // namespace corefal

#endif  // COREFAL_CLOSURE_BENCH_H_
