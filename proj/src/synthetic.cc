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

#include "corefal/synthetic.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "corefal/random.h"

namespace corefal {
namespace {

constexpr std::array<const char *, 32> kFirstNames = {
    "Anna",  "Boris", "Clara",  "David", "Elena",  "Felix", "Greta", "Hugo",
    "Irene", "Jonas", "Karin",  "Lukas", "Maria",  "Nils",  "Olga",  "Paul",
    "Quinn", "Rosa",  "Simon",  "Tanja", "Ulrich", "Vera",  "Walter", "Xenia",
    "Yusuf", "Zora",  "Arthur", "Bella", "Carl",   "Dana",  "Emil",  "Frida"};

constexpr std::array<const char *, 40> kSurnames = {
    "Adler",   "Berger",  "Conrad", "Dietz",   "Engel",  "Fischer", "Graf",
    "Hahn",    "Ibsen",   "Jung",   "Keller",  "Lang",   "Meyer",   "Neumann",
    "Otto",    "Peters",  "Quast",  "Richter", "Schulz", "Thiel",   "Uhl",
    "Vogel",   "Wagner",  "Xander", "Young",   "Zimmer", "Arndt",   "Brandt",
    "Claasen", "Dorn",    "Ebert",  "Frank",   "Gruber", "Horn",    "Ilg",
    "Jansen",  "Krause",  "Lorenz", "Marx",    "Nagel"};

constexpr std::array<const char *, 24> kFiller = {
    "said",   "the",    "report", "on",     "that",   "was",
    "in",     "a",      "city",   "later",  "met",    "with",
    "about",  "plans",  "for",    "new",    "after",  "long",
    "talks",  "and",    "then",   "left",   "today",  "again"};

constexpr std::array<const char *, 3> kPronouns = {"he", "she", "it"};

struct Entity {
  std::string first;
  std::string surname;
  int pronoun = 0;
  int last_mention = -1;
};

}  // namespace

CorpusDocument GenerateSyntheticDocument(const SyntheticConfig &config,
                                         int num_mentions, uint64_t seed,
                                         const std::string &doc_id) {
  Rng rng(seed);
  std::vector<Entity> entities;
  std::set<std::string> used_names;
  // Entity per mention, chosen first so cluster structure is independent of
  // the surface realization.
  std::vector<int> entity_of;
  for (int m = 0; m < num_mentions; ++m) {
    const bool fresh = entities.empty() || rng.Bernoulli(config.new_entity_prob);
    if (fresh) {
      Entity e;
      for (int attempt = 0; attempt < 64; ++attempt) {
        e.first = kFirstNames[rng.Index(kFirstNames.size())];
        if (!entities.empty() && rng.Bernoulli(config.shared_surname_prob)) {
          e.surname = entities[rng.Index(entities.size())].surname;
        } else {
          e.surname = kSurnames[rng.Index(kSurnames.size())];
        }
        if (!used_names.count(e.first + " " + e.surname)) break;
      }
      used_names.insert(e.first + " " + e.surname);
      e.pronoun = static_cast<int>(rng.Index(kPronouns.size()));
      entities.push_back(e);
      entity_of.push_back(static_cast<int>(entities.size()) - 1);
    } else {
      // Recency-weighted choice among existing entities.
      std::vector<int> order(entities.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return entities[a].last_mention > entities[b].last_mention;
      });
      std::vector<double> weights(order.size());
      double w = 1.0;
      for (double &x : weights) {
        x = w;
        w *= config.recency_decay;
      }
      entity_of.push_back(order[rng.Weighted(weights)]);
    }
    entities[entity_of.back()].last_mention = m;
  }

  CorpusDocument cdoc;
  Document &doc = cdoc.doc;
  doc.doc_id = doc_id;
  std::vector<std::string> speakers;
  std::map<int, Cluster> by_entity;
  std::vector<bool> seen(entities.size(), false);
  int m = 0;
  while (m < num_mentions) {
    const int sentence_start = static_cast<int>(doc.tokens.size());
    const std::string speaker = "spk" + std::to_string(rng.Index(3));
    const int in_sentence = 1 + static_cast<int>(rng.Index(3));
    auto filler = [&](int count) {
      for (int f = 0; f < count; ++f) {
        doc.tokens.push_back(kFiller[rng.Index(kFiller.size())]);
      }
    };
    for (int k = 0; k < in_sentence && m < num_mentions; ++k, ++m) {
      filler(static_cast<int>(rng.Index(4)) + (k == 0 ? 0 : 1));
      Entity &e = entities[entity_of[m]];
      const int start = static_cast<int>(doc.tokens.size());
      if (!seen[entity_of[m]]) {
        doc.tokens.push_back(e.first);
        doc.tokens.push_back(e.surname);
        seen[entity_of[m]] = true;
      } else if (rng.Bernoulli(config.noise)) {
        doc.tokens.push_back(kPronouns[e.pronoun]);
      } else if (rng.Bernoulli(0.5)) {
        doc.tokens.push_back(e.first);
        doc.tokens.push_back(e.surname);
      } else {
        doc.tokens.push_back(e.surname);
      }
      by_entity[entity_of[m]].push_back(
          Span{start, static_cast<int>(doc.tokens.size()) - 1});
    }
    filler(1 + static_cast<int>(rng.Index(3)));
    doc.tokens.push_back(".");
    doc.sentences.emplace_back(sentence_start,
                               static_cast<int>(doc.tokens.size()) - 1);
    speakers.resize(doc.tokens.size(), speaker);
  }
  if (config.speakers) doc.speakers = std::move(speakers);

  Clustering clusters;
  for (auto &[id, cluster] : by_entity) {
    if (cluster.size() >= 2) clusters.push_back(std::move(cluster));
  }
  cdoc.clusters = Canonicalize(std::move(clusters));
  return cdoc;
}

Corpus GenerateSyntheticCorpus(const SyntheticConfig &config) {
  Corpus corpus;
  Rng rng(config.seed);
  for (int d = 0; d < config.num_docs; ++d) {
    const int span = std::max(0, config.max_mentions - config.min_mentions);
    const int mentions =
        config.min_mentions + static_cast<int>(rng.Index(span + 1));
    char id[32];
    std::snprintf(id, sizeof(id), "_%04d", d);
    corpus.push_back(GenerateSyntheticDocument(config, mentions, rng.Next(),
                                               config.id_prefix + id));
  }
  return corpus;
}

nlohmann::json ToJson(const SyntheticConfig &c) {
  return {{"num_docs", c.num_docs},
          {"min_mentions", c.min_mentions},
          {"max_mentions", c.max_mentions},
          {"new_entity_prob", c.new_entity_prob},
          {"recency_decay", c.recency_decay},
          {"noise", c.noise},
          {"shared_surname_prob", c.shared_surname_prob},
          {"speakers", c.speakers},
          {"seed", c.seed},
          {"id_prefix", c.id_prefix}};
}

SyntheticConfig SyntheticConfigFromJson(const nlohmann::json &j) {
  SyntheticConfig c;
  c.num_docs = j.value("num_docs", c.num_docs);
  c.min_mentions = j.value("min_mentions", c.min_mentions);
  c.max_mentions = j.value("max_mentions", c.max_mentions);
  c.new_entity_prob = j.value("new_entity_prob", c.new_entity_prob);
  c.recency_decay = j.value("recency_decay", c.recency_decay);
  c.noise = j.value("noise", c.noise);
  c.shared_surname_prob = j.value("shared_surname_prob", c.shared_surname_prob);
  c.speakers = j.value("speakers", c.speakers);
  c.seed = j.value("seed", c.seed);
  c.id_prefix = j.value("id_prefix", c.id_prefix);
  return c;
}

}  // namespace corefal
