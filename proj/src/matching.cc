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

#include "corefal/matching.h"

#include <algorithm>
#include <limits>

namespace corefal {

std::vector<int> MaxWeightAssignment(
    const std::vector<std::vector<double>> &weights) {
  const int rows = static_cast<int>(weights.size());
  if (rows == 0) return {};
  int cols = 0;
  double max_weight = 0;
  for (const auto &row : weights) {
    cols = std::max(cols, static_cast<int>(row.size()));
    for (double w : row) max_weight = std::max(max_weight, w);
  }
  if (cols == 0) return std::vector<int>(rows, -1);

  // Square cost matrix; padding cells cost max_weight (weight 0).
  const int n = std::max(rows, cols);
  auto cost = [&](int r, int c) {
    if (r < rows && c < static_cast<int>(weights[r].size())) {
      return max_weight - weights[r][c];
    }
    return max_weight;
  };

  // Shortest augmenting path formulation with potentials; 1-based arrays
  // with index 0 as the virtual source.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> match_col(n + 1, 0), way(n + 1, 0);
  for (int r = 1; r <= n; ++r) {
    match_col[0] = r;
    int c0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[c0] = true;
      const int r0 = match_col[c0];
      double delta = inf;
      int c1 = 0;
      for (int c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double cur = cost(r0 - 1, c - 1) - u[r0] - v[c];
        if (cur < minv[c]) {
          minv[c] = cur;
          way[c] = c0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          c1 = c;
        }
      }
      for (int c = 0; c <= n; ++c) {
        if (used[c]) {
          u[match_col[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      c0 = c1;
    } while (match_col[c0] != 0);
    do {
      const int c1 = way[c0];
      match_col[c0] = match_col[c1];
      c0 = c1;
    } while (c0 != 0);
  }

  std::vector<int> assignment(rows, -1);
  for (int c = 1; c <= n; ++c) {
    const int r = match_col[c] - 1;
    if (r >= 0 && r < rows && c - 1 < static_cast<int>(weights[r].size())) {
      assignment[r] = c - 1;
    }
  }
  return assignment;
}

}  // namespace corefal
