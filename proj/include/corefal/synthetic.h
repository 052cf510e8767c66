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

#ifndef COREFAL_SYNTHETIC_H_
#define COREFAL_SYNTHETIC_H_

#include <cstdint>
#include <string>

#include "corefal/corpus.h"
#include "json.hpp"

namespace corefal {

// Generator for desk-scale coreference corpora.
//
// Each document is a sequence of sentences mixing filler words with entity
// mentions. The first mention of an entity is its full name; later mentions
// are the full name or the surname (string-predictive forms) or, with
// probability `noise`, a pronoun that many entities share. Entities
// occasionally share a surname, so surname matches are not fully reliable
// either. Entities mentioned once are not part of the gold clustering.
struct SyntheticConfig {
  int num_docs = 60;
  int min_mentions = 20;
  int max_mentions = 60;
  // Probability that a mention introduces a new entity; cluster sizes come
  // out roughly geometric.
  double new_entity_prob = 0.35;
  // Probability that an existing entity is chosen by recency rank r is
  // proportional to recency_decay^r.
  double recency_decay = 0.6;
  // Fraction of non-initial mentions realized as a non-predictive form.
  double noise = 0.3;
  double shared_surname_prob = 0.15;
  bool speakers = true;
  uint64_t seed = 1;
  std::string id_prefix = "syn";
};

nlohmann::json ToJson(const SyntheticConfig &config);
SyntheticConfig SyntheticConfigFromJson(const nlohmann::json &j);

Corpus GenerateSyntheticCorpus(const SyntheticConfig &config);

// Single document with `num_mentions` generated mentions; used by the
// closure benchmark.
CorpusDocument GenerateSyntheticDocument(const SyntheticConfig &config,
                                         int num_mentions, uint64_t seed,
                                         const std::string &doc_id);

}  // namespace corefal

#endif  // COREFAL_SYNTHETIC_H_
