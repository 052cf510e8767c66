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

#ifndef COREFAL_CORPUS_H_
#define COREFAL_CORPUS_H_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace corefal {

// Raised for malformed input files and violated document invariants.
class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parse failure that knows which input line triggered it (1-based, 0 when
// the failure is not tied to a line).
class ParseError : public CorpusError {
 public:
  ParseError(const std::string &message, size_t line)
      : CorpusError(line > 0 ? "line " + std::to_string(line) + ": " + message
                             : message),
        line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

// A mention candidate: an inclusive token range. Spans order by (start, end),
// which is document order throughout the library.
struct Span {
  int start = 0;
  int end = 0;

  friend auto operator<=>(const Span &, const Span &) = default;
  int length() const { return end - start + 1; }
};

std::string ToString(const Span &span);

struct SpanHash {
  size_t operator()(const Span &s) const {
    return std::hash<uint64_t>()((static_cast<uint64_t>(s.start) << 32) ^
                                 static_cast<uint32_t>(s.end));
  }
};

// Tokenized text. Sentence ranges are inclusive token ranges that partition
// [0, tokens.size()).
struct Document {
  std::string doc_id;
  std::vector<std::string> tokens;
  std::vector<std::pair<int, int>> sentences;
  std::optional<std::vector<std::string>> speakers;

  bool operator==(const Document &) const = default;

  // Surface string of a span, tokens joined by single spaces.
  std::string Text(const Span &span) const;
  // Speaker of the first token of the span, or empty when unknown.
  std::string SpeakerOf(const Span &span) const;
  // Index of the sentence containing `token`, -1 if out of range.
  int SentenceOf(int token) const;
};

// A gold or predicted partition of mentions. Each inner vector is one entity,
// spans sorted in document order.
using Cluster = std::vector<Span>;
using Clustering = std::vector<Cluster>;

struct CorpusDocument {
  Document doc;
  std::optional<Clustering> clusters;

  bool operator==(const CorpusDocument &) const = default;

  // All gold mentions, sorted and deduplicated. Empty without gold.
  std::vector<Span> GoldMentions() const;
};

using Corpus = std::vector<CorpusDocument>;

// Throws CorpusError when the document or its clustering is malformed.
void Validate(const CorpusDocument &doc);

// Sorts spans inside clusters and clusters by their first span.
Clustering Canonicalize(Clustering clusters);

// Drops clusters with fewer than two mentions.
Clustering DropSingletons(const Clustering &clusters);

// CoNLL-2012 skeleton reader; coreference is taken from the last column and
// document boundaries from "#begin document" / "#end document" lines.
Corpus ReadConll(std::istream &in);
Corpus IngestConll(const std::filesystem::path &path);

// Native JSONL: one document object per line.
nlohmann::json ToJson(const CorpusDocument &doc);
CorpusDocument CorpusDocumentFromJson(const nlohmann::json &j);
nlohmann::json SpanToJson(const Span &span);
Span SpanFromJson(const nlohmann::json &j);
nlohmann::json ClusteringToJson(const Clustering &clusters);
Clustering ClusteringFromJson(const nlohmann::json &j);

Corpus ReadJsonl(std::istream &in);
void WriteJsonl(std::ostream &out, const Corpus &corpus);
Corpus LoadJsonl(const std::filesystem::path &path);
void SaveJsonl(const std::filesystem::path &path, const Corpus &corpus);

// How the candidate ("top") spans of a document are produced.
struct CandidateMode {
  // Fraction of extra non-gold spans relative to the number of gold mentions.
  // Zero gives the gold mentions only.
  double distractor_rate = 0.0;
  uint64_t seed = 0;
};

// Gold mentions in document order, plus deterministic distractor spans drawn
// from sentence-internal ranges of at most five tokens.
std::vector<Span> CandidateSpans(const CorpusDocument &doc,
                                 const CandidateMode &mode = {});

// The antecedent window of span `target`: the up to K spans immediately
// preceding it, in document order, plus the dummy antecedent. The dummy is
// implicit and always sits after the real candidates.
struct CandidateSet {
  size_t target = 0;
  std::vector<size_t> antecedents;

  // Number of outcomes including the dummy antecedent.
  size_t size() const { return antecedents.size() + 1; }
  size_t epsilon_slot() const { return antecedents.size(); }
  // Slot of span index `span` among the antecedents, or -1.
  int SlotOf(size_t span) const;
};

CandidateSet AntecedentCandidates(std::span<const Span> spans, size_t i,
                                  int max_antecedents);

// Stable 64-bit FNV-1a hash, used to derive per-document random streams.
uint64_t StableHash(std::string_view text);

}  // namespace corefal

#endif  // COREFAL_CORPUS_H_
