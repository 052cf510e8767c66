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

#include "corefal/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace corefal {

using nlohmann::json;

std::string ToString(const Span &span) {
  return "(" + std::to_string(span.start) + "," + std::to_string(span.end) +
         ")";
}

std::string Document::Text(const Span &span) const {
  std::string text;
  for (int t = span.start; t <= span.end; ++t) {
    if (t < 0 || t >= static_cast<int>(tokens.size())) break;
    if (!text.empty()) text += ' ';
    text += tokens[t];
  }
  return text;
}

std::string Document::SpeakerOf(const Span &span) const {
  if (!speakers || span.start < 0 ||
      span.start >= static_cast<int>(speakers->size())) {
    return {};
  }
  return (*speakers)[span.start];
}

int Document::SentenceOf(int token) const {
  auto it = std::upper_bound(
      sentences.begin(), sentences.end(), token,
      [](int t, const std::pair<int, int> &s) { return t < s.first; });
  if (it == sentences.begin()) return -1;
  --it;
  if (token > it->second) return -1;
  return static_cast<int>(it - sentences.begin());
}

std::vector<Span> CorpusDocument::GoldMentions() const {
  std::vector<Span> mentions;
  if (!clusters) return mentions;
  for (const Cluster &c : *clusters) {
    mentions.insert(mentions.end(), c.begin(), c.end());
  }
  std::sort(mentions.begin(), mentions.end());
  mentions.erase(std::unique(mentions.begin(), mentions.end()),
                 mentions.end());
  return mentions;
}

void Validate(const CorpusDocument &cdoc) {
  const Document &doc = cdoc.doc;
  const int n = static_cast<int>(doc.tokens.size());
  if (n == 0) throw CorpusError("document '" + doc.doc_id + "' has no tokens");
  int expected = 0;
  for (const auto &[start, end] : doc.sentences) {
    if (start != expected || end < start || end >= n) {
      throw CorpusError("document '" + doc.doc_id +
                        "': sentence ranges do not partition the tokens");
    }
    expected = end + 1;
  }
  if (expected != n) {
    throw CorpusError("document '" + doc.doc_id +
                      "': sentence ranges do not cover all tokens");
  }
  if (doc.speakers && static_cast<int>(doc.speakers->size()) != n) {
    throw CorpusError("document '" + doc.doc_id +
                      "': speakers length differs from tokens");
  }
  if (!cdoc.clusters) return;
  std::set<Span> seen;
  for (const Cluster &c : *cdoc.clusters) {
    for (const Span &s : c) {
      if (s.start < 0 || s.end < s.start || s.end >= n) {
        throw CorpusError("document '" + doc.doc_id + "': invalid span " +
                          ToString(s));
      }
      if (!seen.insert(s).second) {
        throw CorpusError("document '" + doc.doc_id + "': span " +
                          ToString(s) + " appears in more than one cluster");
      }
    }
  }
}

Clustering Canonicalize(Clustering clusters) {
  for (Cluster &c : clusters) std::sort(c.begin(), c.end());
  std::erase_if(clusters, [](const Cluster &c) { return c.empty(); });
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster &a, const Cluster &b) { return a[0] < b[0]; });
  return clusters;
}

Clustering DropSingletons(const Clustering &clusters) {
  Clustering out;
  for (const Cluster &c : clusters) {
    if (c.size() >= 2) out.push_back(c);
  }
  return out;
}

json SpanToJson(const Span &span) { return json::array({span.start, span.end}); }

Span SpanFromJson(const json &j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
      !j[1].is_number_integer()) {
    throw CorpusError("span must be a [start, end] integer pair, got " +
                      j.dump());
  }
  Span s{j[0].get<int>(), j[1].get<int>()};
  if (s.start < 0 || s.end < s.start) {
    throw CorpusError("invalid span " + ToString(s));
  }
  return s;
}

json ClusteringToJson(const Clustering &clusters) {
  json out = json::array();
  for (const Cluster &c : clusters) {
    json jc = json::array();
    for (const Span &s : c) jc.push_back(SpanToJson(s));
    out.push_back(std::move(jc));
  }
  return out;
}

Clustering ClusteringFromJson(const json &j) {
  if (!j.is_array()) throw CorpusError("clusters must be an array");
  Clustering clusters;
  for (const json &jc : j) {
    if (!jc.is_array()) throw CorpusError("cluster must be an array of spans");
    Cluster c;
    for (const json &js : jc) c.push_back(SpanFromJson(js));
    clusters.push_back(std::move(c));
  }
  return clusters;
}

json ToJson(const CorpusDocument &cdoc) {
  const Document &doc = cdoc.doc;
  json j;
  j["doc_id"] = doc.doc_id;
  j["tokens"] = doc.tokens;
  json sentences = json::array();
  for (const auto &[s, e] : doc.sentences) sentences.push_back({s, e});
  j["sentences"] = std::move(sentences);
  j["speakers"] = doc.speakers ? json(*doc.speakers) : json(nullptr);
  j["clusters"] =
      cdoc.clusters ? ClusteringToJson(*cdoc.clusters) : json(nullptr);
  return j;
}

CorpusDocument CorpusDocumentFromJson(const json &j) {
  CorpusDocument cdoc;
  try {
    cdoc.doc.doc_id = j.at("doc_id").get<std::string>();
    cdoc.doc.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (const json &s : j.at("sentences")) {
      cdoc.doc.sentences.emplace_back(s.at(0).get<int>(), s.at(1).get<int>());
    }
    if (j.contains("speakers") && !j["speakers"].is_null()) {
      cdoc.doc.speakers = j["speakers"].get<std::vector<std::string>>();
    }
    if (j.contains("clusters") && !j["clusters"].is_null()) {
      cdoc.clusters = ClusteringFromJson(j["clusters"]);
    }
  } catch (const json::exception &e) {
    throw CorpusError(std::string("malformed document record: ") + e.what());
  }
  Validate(cdoc);
  return cdoc;
}

Corpus ReadJsonl(std::istream &in) {
  Corpus corpus;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error &e) {
      throw ParseError(e.what(), line_no);
    }
    try {
      corpus.push_back(CorpusDocumentFromJson(j));
    } catch (const CorpusError &e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return corpus;
}

void WriteJsonl(std::ostream &out, const Corpus &corpus) {
  for (const CorpusDocument &d : corpus) out << ToJson(d).dump() << '\n';
}

Corpus LoadJsonl(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open " + path.string());
  return ReadJsonl(in);
}

void SaveJsonl(const std::filesystem::path &path, const Corpus &corpus) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write " + path.string());
  WriteJsonl(out, corpus);
}

uint64_t StableHash(std::string_view text) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<Span> CandidateSpans(const CorpusDocument &cdoc,
                                 const CandidateMode &mode) {
  std::vector<Span> spans = cdoc.GoldMentions();
  const auto extra = static_cast<size_t>(
      std::llround(std::max(0.0, mode.distractor_rate) * spans.size()));
  if (extra == 0) return spans;

  std::set<Span> gold(spans.begin(), spans.end());
  std::vector<Span> pool;
  for (const auto &[s, e] : cdoc.doc.sentences) {
    for (int start = s; start <= e; ++start) {
      for (int end = start; end <= std::min(e, start + 4); ++end) {
        Span span{start, end};
        if (!gold.count(span)) pool.push_back(span);
      }
    }
  }
  // Partial Fisher-Yates with an explicit modulo so the draw does not depend
  // on the standard library's distribution implementation.
  std::mt19937_64 rng(mode.seed ^ StableHash(cdoc.doc.doc_id));
  const size_t take = std::min(extra, pool.size());
  for (size_t i = 0; i < take; ++i) {
    size_t j = i + rng() % (pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  spans.insert(spans.end(), pool.begin(), pool.begin() + take);
  std::sort(spans.begin(), spans.end());
  return spans;
}

int CandidateSet::SlotOf(size_t span) const {
  auto it = std::lower_bound(antecedents.begin(), antecedents.end(), span);
  if (it == antecedents.end() || *it != span) return -1;
  return static_cast<int>(it - antecedents.begin());
}

CandidateSet AntecedentCandidates(std::span<const Span> spans, size_t i,
                                  int max_antecedents) {
  if (i >= spans.size()) {
    throw std::out_of_range("span index " + std::to_string(i) +
                            " outside candidate list");
  }
  CandidateSet set;
  set.target = i;
  const size_t window =
      std::min(i, static_cast<size_t>(std::max(max_antecedents, 0)));
  for (size_t j = i - window; j < i; ++j) set.antecedents.push_back(j);
  return set;
}

}  // namespace corefal
