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

// Shared helpers for the unit tests.

#ifndef COREFAL_TESTS_TEST_UTIL_H_
#define COREFAL_TESTS_TEST_UTIL_H_

#include <string>
#include <vector>

#include "corefal/corpus.h"
#include "corefal/random.h"

namespace corefal::testing {

// Positional command-line arguments of the test binary.
const std::vector<std::string> &Args();

// Document of n single-token mentions "w0 w1 ...", one sentence.
inline CorpusDocument TokenDocument(const std::string &id, int n,
                                    Clustering clusters) {
  CorpusDocument d;
  d.doc.doc_id = id;
  for (int i = 0; i < n; ++i) d.doc.tokens.push_back("w" + std::to_string(i));
  d.doc.sentences = {{0, n - 1}};
  d.clusters = Canonicalize(std::move(clusters));
  return d;
}

inline Span S(int i) { return {i, i}; }

// Random partition of the single-token spans 0..n-1; every span ends up in
// a cluster, singletons dropped.
inline Clustering RandomClustering(Rng &rng, int n, int max_clusters) {
  std::vector<Cluster> c(max_clusters);
  for (int i = 0; i < n; ++i) c[rng.Index(max_clusters)].push_back(S(i));
  return Canonicalize(DropSingletons(c));
}

}  // namespace corefal::testing

#endif  // COREFAL_TESTS_TEST_UTIL_H_
