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

// Reader for the CoNLL-2012 skeleton/conll column format.
//
// Token lines carry whitespace separated columns. With the full layout the
// word form is column 3 and the speaker column 9; short two or three column
// files ("word ... coref") are accepted for hand-written fixtures. The last
// column always holds the coreference markup, e.g. "(12", "12)", "(3)" or
// "(0|(1", and "-" for no markup.

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "corefal/corpus.h"

namespace corefal {
namespace {

struct OpenSpan {
  int start;
  size_t line;
};

class DocumentBuilder {
 public:
  DocumentBuilder(std::string doc_id, size_t begin_line)
      : begin_line_(begin_line) {
    out_.doc.doc_id = std::move(doc_id);
  }

  void AddToken(const std::vector<std::string> &cols, size_t line) {
    const int index = static_cast<int>(out_.doc.tokens.size());
    out_.doc.tokens.push_back(cols.size() >= 4 ? cols[3] : cols[0]);
    if (cols.size() >= 12) speakers_.push_back(cols[9]);
    if (sentence_start_ < 0) sentence_start_ = index;
    ParseCoref(cols.back(), index, line);
  }

  void EndSentence() {
    if (sentence_start_ < 0) return;
    out_.doc.sentences.emplace_back(
        sentence_start_, static_cast<int>(out_.doc.tokens.size()) - 1);
    sentence_start_ = -1;
  }

  CorpusDocument Finish(size_t line) {
    EndSentence();
    for (const auto &[id, stack] : open_) {
      if (!stack.empty()) {
        throw ParseError("span of cluster " + std::to_string(id) +
                             " opened at line " +
                             std::to_string(stack.back().line) +
                             " is never closed before the end of document '" +
                             out_.doc.doc_id + "'",
                         line);
      }
    }
    if (out_.doc.tokens.empty()) {
      throw ParseError("document '" + out_.doc.doc_id + "' has no tokens",
                       begin_line_);
    }
    if (speakers_.size() == out_.doc.tokens.size()) {
      out_.doc.speakers = std::move(speakers_);
    }
    Clustering clusters;
    for (auto &[id, cluster] : closed_) {
      std::sort(cluster.begin(), cluster.end());
      cluster.erase(std::unique(cluster.begin(), cluster.end()),
                    cluster.end());
      clusters.push_back(std::move(cluster));
    }
    out_.clusters = Canonicalize(std::move(clusters));
    return std::move(out_);
  }

 private:
  static bool ParseId(const std::string &text, int *id) {
    if (text.empty()) return false;
    for (char c : text) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    *id = std::stoi(text);
    return true;
  }

  void ParseCoref(const std::string &column, int token, size_t line) {
    if (column == "-") return;
    std::stringstream pieces(column);
    std::string piece;
    while (std::getline(pieces, piece, '|')) {
      const bool opens = !piece.empty() && piece.front() == '(';
      const bool closes = !piece.empty() && piece.back() == ')';
      std::string body = piece.substr(opens ? 1 : 0);
      if (closes && !body.empty()) body.pop_back();
      int id = 0;
      if ((!opens && !closes) || !ParseId(body, &id)) {
        throw ParseError("malformed coreference markup '" + column + "'",
                         line);
      }
      if (opens && closes) {
        closed_[id].push_back(Span{token, token});
      } else if (opens) {
        open_[id].push_back(OpenSpan{token, line});
      } else {
        auto it = open_.find(id);
        if (it == open_.end() || it->second.empty()) {
          throw ParseError("unbalanced parentheses: cluster " +
                               std::to_string(id) +
                               " closed without a matching opening",
                           line);
        }
        closed_[id].push_back(Span{it->second.back().start, token});
        it->second.pop_back();
      }
    }
  }

  CorpusDocument out_;
  std::vector<std::string> speakers_;
  std::map<int, std::vector<OpenSpan>> open_;
  std::map<int, Cluster> closed_;
  int sentence_start_ = -1;
  size_t begin_line_;
};

std::vector<std::string> SplitColumns(const std::string &line) {
  std::vector<std::string> cols;
  std::istringstream in(line);
  std::string col;
  while (in >> col) cols.push_back(col);
  return cols;
}

// "#begin document (bc/cctv/00/cctv_0000); part 000" -> "bc/cctv/00/cctv_0000_000"
std::string DocIdFromHeader(const std::string &line) {
  std::string rest = line.substr(std::string("#begin document").size());
  std::string name;
  std::string part;
  auto open = rest.find('(');
  auto close = rest.find(')', open == std::string::npos ? 0 : open);
  if (open != std::string::npos && close != std::string::npos) {
    name = rest.substr(open + 1, close - open - 1);
  } else {
    name = rest;
  }
  auto part_pos = rest.find("part");
  if (part_pos != std::string::npos) {
    std::istringstream p(rest.substr(part_pos + 4));
    p >> part;
  }
  auto trim = [](std::string s) {
    s.erase(0, s.find_first_not_of(" \t;"));
    s.erase(s.find_last_not_of(" \t;") + 1);
    return s;
  };
  name = trim(name);
  return part.empty() ? name : name + "_" + part;
}

}  // namespace

Corpus ReadConll(std::istream &in) {
  Corpus corpus;
  std::optional<DocumentBuilder> current;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("#begin document", 0) == 0) {
      if (current) {
        throw ParseError("'#begin document' inside an open document", line_no);
      }
      current.emplace(DocIdFromHeader(line), line_no);
      continue;
    }
    if (line.rfind("#end document", 0) == 0) {
      if (!current) {
        throw ParseError("'#end document' without a matching begin", line_no);
      }
      corpus.push_back(current->Finish(line_no));
      current.reset();
      continue;
    }
    auto cols = SplitColumns(line);
    if (cols.empty()) {
      if (current) current->EndSentence();
      continue;
    }
    if (cols[0].front() == '#') continue;
    if (!current) throw ParseError("token line outside a document", line_no);
    if (cols.size() < 2) {
      throw ParseError("token line needs at least two columns", line_no);
    }
    current->AddToken(cols, line_no);
  }
  if (current) corpus.push_back(current->Finish(line_no));
  for (const CorpusDocument &d : corpus) Validate(d);
  return corpus;
}

Corpus IngestConll(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open " + path.string());
  return ReadConll(in);
}

}  // namespace corefal
