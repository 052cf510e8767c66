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

// Question/answer protocol. A pairwise question asks whether a mention and
// a proposed antecedent corefer. The discrete protocol follows a "no" with
// a request for the first mention of the entity, which the annotator may
// decline because the target has no antecedent or is not a mention at all.

#ifndef COREFAL_ANNOTATOR_H_
#define COREFAL_ANNOTATOR_H_

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "corefal/corpus.h"
#include "corefal/selectors.h"
#include "json.hpp"

namespace corefal {

class AnnotationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Protocol { kPairwise, kDiscrete };
enum class Verdict { kCoreferent, kNotCoreferent };
enum class FollowupKind {
  kNotAsked,
  kFirstAntecedent,
  kAbstainInvalidMention,
  kAbstainNoAntecedent,
};

const char *ToString(Protocol p);
const char *ToString(Verdict v);
const char *ToString(FollowupKind k);
std::optional<Protocol> ProtocolFromString(std::string_view name);

struct Followup {
  FollowupKind kind = FollowupKind::kNotAsked;
  // Only meaningful for kFirstAntecedent.
  Span span;

  bool operator==(const Followup &) const = default;
};

struct Query {
  std::string doc_id;
  Span target;
  Span proposed;
  Protocol protocol = Protocol::kDiscrete;

  bool operator==(const Query &) const = default;
};

struct Answer {
  Verdict verdict = Verdict::kCoreferent;
  Followup followup;
  std::optional<double> initial_seconds;
  std::optional<double> followup_seconds;

  bool operator==(const Answer &) const = default;
};

// Throws AnnotationError when the answer does not fit the query: a
// follow-up must be present exactly for discrete "no" answers, and a first
// antecedent must precede the target.
void ValidateAnswer(const Query &q, const Answer &a);

// Simulated annotator answering from gold clusters.
class GoldAnnotator {
 public:
  explicit GoldAnnotator(const Clustering &gold);

  Verdict AnswerPairwise(const Span &m, const Span &a) const;
  // Earliest gold mention of m's entity, or an abstention.
  Followup AnswerFollowup(const Span &m) const;
  Answer AnswerQuery(const Query &q) const;

 private:
  std::map<Span, int> cluster_of_;
  std::vector<Span> first_mention_;
};

struct ApplyResult {
  // Descriptions of link insertions that contradicted earlier answers.
  std::vector<std::string> conflicts;

  bool ok() const { return conflicts.empty(); }
};

// Records the answer on the document state: links, fixed labels, the
// discourse-new and queried marks, exclusion of invalid mentions. The state
// is refreshed afterwards. Spans of the query and of a first-antecedent
// answer must belong to the document's candidate spans (AnnotationError
// otherwise).
ApplyResult ApplyAnswer(const Query &q, const Answer &a, DocumentState *state);

// One line of the append-only answer log.
struct AnswerRecord {
  Query query;
  Answer answer;
  std::string timestamp;
  std::string session_id;
};

nlohmann::json ToJson(const AnswerRecord &r);
AnswerRecord AnswerRecordFromJson(const nlohmann::json &j);
// The answer part of a record, as posted by annotation clients.
nlohmann::json AnswerToJson(const Answer &a);
Answer AnswerFromJson(const nlohmann::json &j);

// UTC time as ISO 8601 with milliseconds.
std::string NowTimestamp();

}  // namespace corefal

#endif  // COREFAL_ANNOTATOR_H_
