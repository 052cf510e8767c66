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

#ifndef COREFAL_MATCHING_H_
#define COREFAL_MATCHING_H_

#include <vector>

namespace corefal {

// Maximum-weight one-to-one assignment between rows and columns of a
// (possibly rectangular) nonnegative weight matrix, via the Hungarian
// method in O(n^3). Returns the column assigned to each row, -1 for rows
// left unassigned when there are more rows than columns.
std::vector<int> MaxWeightAssignment(
    const std::vector<std::vector<double>> &weights);

}  // namespace corefal

#endif  // COREFAL_MATCHING_H_
