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

#include "corefal/constraints.h"

#include <algorithm>
#include <bit>
#include <istream>
#include <ostream>
#include <string>

namespace corefal {

using nlohmann::json;

const char *ToString(Relation r) {
  switch (r) {
    case Relation::kMustLink:
      return "ML";
    case Relation::kCannotLink:
      return "CL";
    case Relation::kUnknown:
      break;
  }
  return "Unknown";
}

LinkUpdate ConstraintStore::Add(const LinkOp &op) {
  return op.kind == LinkKind::kMustLink ? AddMustLink(op.a, op.b)
                                        : AddCannotLink(op.a, op.b);
}

// ---------------------------------------------------------------------------
// LinkStore

int LinkStore::Lookup(const Span &s) const {
  auto it = ids_.find(s);
  return it == ids_.end() ? -1 : it->second;
}

int LinkStore::Intern(const Span &s) {
  auto [it, inserted] = ids_.emplace(s, static_cast<int>(spans_.size()));
  if (inserted) {
    spans_.push_back(s);
    parent_.push_back(it->second);
    members_.push_back({it->second});
    cannot_.emplace_back();
  }
  return it->second;
}

int LinkStore::Find(int x) const {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

LinkUpdate LinkStore::AddMustLink(const Span &a, const Span &b) {
  LinkUpdate update;
  const int la = Lookup(a);
  const int lb = Lookup(b);
  if (la >= 0 && lb >= 0) {
    const int ra = Find(la);
    const int rb = Find(lb);
    if (ra == rb) {
      update.status = LinkStatus::kAlreadyKnown;
      update.merged_size = members_[ra].size();
      return update;
    }
    if (cannot_[ra].count(rb)) {
      update.status = LinkStatus::kConflict;
      return update;
    }
  }
  int big = Find(Intern(a));
  int small = Find(Intern(b));
  if (members_[big].size() < members_[small].size()) std::swap(big, small);

  // Every class that could not link with the absorbed class now cannot link
  // with the merged one.
  for (int other : cannot_[small]) {
    cannot_[other].erase(small);
    cannot_[other].insert(big);
    if (cannot_[big].insert(other).second) ++update.inherited_cannot_links;
  }
  cannot_[small].clear();
  parent_[small] = big;
  members_[big].insert(members_[big].end(), members_[small].begin(),
                       members_[small].end());
  members_[small].clear();
  members_[small].shrink_to_fit();

  update.merged_size = members_[big].size();
  history_.push_back({LinkKind::kMustLink, a, b});
  return update;
}

LinkUpdate LinkStore::AddCannotLink(const Span &a, const Span &b) {
  LinkUpdate update;
  if (a == b) {
    update.status = LinkStatus::kConflict;
    return update;
  }
  const int la = Lookup(a);
  const int lb = Lookup(b);
  if (la >= 0 && lb >= 0) {
    const int ra = Find(la);
    const int rb = Find(lb);
    if (ra == rb) {
      update.status = LinkStatus::kConflict;
      return update;
    }
    if (cannot_[ra].count(rb)) {
      update.status = LinkStatus::kAlreadyKnown;
      return update;
    }
  }
  const int ra = Find(Intern(a));
  const int rb = Find(Intern(b));
  cannot_[ra].insert(rb);
  cannot_[rb].insert(ra);
  history_.push_back({LinkKind::kCannotLink, a, b});
  return update;
}

Relation LinkStore::Query(const Span &a, const Span &b) const {
  if (a == b) return Relation::kMustLink;
  const int la = Lookup(a);
  const int lb = Lookup(b);
  if (la < 0 || lb < 0) return Relation::kUnknown;
  const int ra = Find(la);
  const int rb = Find(lb);
  if (ra == rb) return Relation::kMustLink;
  if (cannot_[ra].count(rb)) return Relation::kCannotLink;
  return Relation::kUnknown;
}

std::unique_ptr<ConstraintStore> LinkStore::Clone() const {
  return std::make_unique<LinkStore>(*this);
}

std::vector<Span> LinkStore::MustLinkClass(const Span &s) const {
  const int id = Lookup(s);
  if (id < 0) return {s};
  std::vector<Span> out;
  for (int m : members_[Find(id)]) out.push_back(spans_[m]);
  std::sort(out.begin(), out.end());
  return out;
}

size_t LinkStore::num_cannot_link_edges() const {
  size_t total = 0;
  for (const auto &edges : cannot_) total += edges.size();
  return total / 2;
}

// ---------------------------------------------------------------------------
// ReferenceStore

bool ReferenceStore::Test(const Bits &row, int j) {
  return (row[j / 64] >> (j % 64)) & 1u;
}

int ReferenceStore::Lookup(const Span &s) const {
  auto it = ids_.find(s);
  return it == ids_.end() ? -1 : it->second;
}

int ReferenceStore::Intern(const Span &s) {
  auto [it, inserted] = ids_.emplace(s, static_cast<int>(spans_.size()));
  if (inserted) spans_.push_back(s);
  return it->second;
}

ReferenceStore::Closure ReferenceStore::Recompute() const {
  const int n = static_cast<int>(spans_.size());
  const size_t words = (n + 63) / 64;
  Closure c;
  c.ml.assign(n, Bits(words, 0));
  c.cl.assign(n, Bits(words, 0));
  auto set = [](Bits &row, int j) { row[j / 64] |= uint64_t{1} << (j % 64); };

  for (int i = 0; i < n; ++i) set(c.ml[i], i);
  for (const LinkOp &op : history_) {
    const int a = ids_.at(op.a);
    const int b = ids_.at(op.b);
    auto &rel = op.kind == LinkKind::kMustLink ? c.ml : c.cl;
    set(rel[a], b);
    set(rel[b], a);
  }

  auto for_each_bit = [](const Bits &row, auto &&fn) {
    for (size_t w = 0; w < row.size(); ++w) {
      uint64_t bits = row[w];
      while (bits) {
        fn(static_cast<int>(w * 64 + std::countr_zero(bits)));
        bits &= bits - 1;
      }
    }
  };
  auto merge = [](Bits &dst, const Bits &src) {
    bool changed = false;
    for (size_t w = 0; w < dst.size(); ++w) {
      const uint64_t next = dst[w] | src[w];
      changed |= next != dst[w];
      dst[w] = next;
    }
    return changed;
  };

  // Apply both rules until nothing changes. CL(i, j) & ML(i, k) -> CL(j, k)
  // is written into row j only; the mirrored bit appears on a later pass
  // when row j is visited, since ML is reflexive.
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < n; ++i) {
      Bits row = c.ml[i];
      for_each_bit(row, [&](int j) { changed |= merge(c.ml[i], c.ml[j]); });
    }
    for (int i = 0; i < n; ++i) {
      Bits row = c.cl[i];
      for_each_bit(row, [&](int j) { changed |= merge(c.cl[j], c.ml[i]); });
    }
  }
  return c;
}

LinkUpdate ReferenceStore::Insert(const LinkOp &op) {
  LinkUpdate update;
  if (op.kind == LinkKind::kCannotLink && op.a == op.b) {
    update.status = LinkStatus::kConflict;
    return update;
  }
  const Relation known = Query(op.a, op.b);
  if ((op.kind == LinkKind::kMustLink && known == Relation::kMustLink) ||
      (op.kind == LinkKind::kCannotLink && known == Relation::kCannotLink)) {
    update.status = LinkStatus::kAlreadyKnown;
    return update;
  }

  const size_t old_spans = spans_.size();
  Intern(op.a);
  Intern(op.b);
  history_.push_back(op);
  Closure next = Recompute();

  bool contradiction = false;
  for (size_t i = 0; i < next.ml.size() && !contradiction; ++i) {
    for (size_t w = 0; w < next.ml[i].size(); ++w) {
      if (next.ml[i][w] & next.cl[i][w]) {
        contradiction = true;
        break;
      }
    }
  }
  if (contradiction) {
    history_.pop_back();
    for (size_t i = old_spans; i < spans_.size(); ++i) ids_.erase(spans_[i]);
    spans_.resize(old_spans);
    update.status = LinkStatus::kConflict;
    return update;
  }
  closure_ = std::move(next);
  if (op.kind == LinkKind::kMustLink) {
    const auto &row = closure_.ml[ids_.at(op.a)];
    for (uint64_t w : row) update.merged_size += std::popcount(w);
  }
  return update;
}

LinkUpdate ReferenceStore::AddMustLink(const Span &a, const Span &b) {
  return Insert({LinkKind::kMustLink, a, b});
}

LinkUpdate ReferenceStore::AddCannotLink(const Span &a, const Span &b) {
  return Insert({LinkKind::kCannotLink, a, b});
}

Relation ReferenceStore::Query(const Span &a, const Span &b) const {
  if (a == b) return Relation::kMustLink;
  const int ia = Lookup(a);
  const int ib = Lookup(b);
  if (ia < 0 || ib < 0 || ia >= static_cast<int>(closure_.ml.size()) ||
      ib >= static_cast<int>(closure_.ml.size())) {
    return Relation::kUnknown;
  }
  if (Test(closure_.ml[ia], ib)) return Relation::kMustLink;
  if (Test(closure_.cl[ia], ib)) return Relation::kCannotLink;
  return Relation::kUnknown;
}

std::unique_ptr<ConstraintStore> ReferenceStore::Clone() const {
  return std::make_unique<ReferenceStore>(*this);
}

std::vector<std::pair<Span, Span>> ReferenceStore::MustLinkPairs() const {
  std::vector<std::pair<Span, Span>> out;
  for (size_t i = 0; i < closure_.ml.size(); ++i) {
    for (size_t j = 0; j < closure_.ml.size(); ++j) {
      if (i != j && spans_[i] < spans_[j] &&
          Test(closure_.ml[i], static_cast<int>(j))) {
        out.emplace_back(spans_[i], spans_[j]);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<Span, Span>> ReferenceStore::CannotLinkPairs() const {
  std::vector<std::pair<Span, Span>> out;
  for (size_t i = 0; i < closure_.cl.size(); ++i) {
    for (size_t j = 0; j < closure_.cl.size(); ++j) {
      if (spans_[i] < spans_[j] && Test(closure_.cl[i], static_cast<int>(j))) {
        out.emplace_back(spans_[i], spans_[j]);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ReferenceClosureResult ReferenceClosure(std::span<const LinkOp> history) {
  ReferenceClosureResult result;
  for (size_t i = 0; i < history.size(); ++i) {
    if (result.store.Add(history[i]).conflict() && !result.first_conflict) {
      result.first_conflict = i;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// History serialization

json ToJson(const LinkOp &op) {
  return {{"op", op.kind == LinkKind::kMustLink ? "ml" : "cl"},
          {"a", SpanToJson(op.a)},
          {"b", SpanToJson(op.b)}};
}

LinkOp LinkOpFromJson(const json &j) {
  LinkOp op;
  const std::string kind = j.at("op").get<std::string>();
  if (kind == "ml") {
    op.kind = LinkKind::kMustLink;
  } else if (kind == "cl") {
    op.kind = LinkKind::kCannotLink;
  } else {
    throw CorpusError("unknown link op '" + kind + "'");
  }
  op.a = SpanFromJson(j.at("a"));
  op.b = SpanFromJson(j.at("b"));
  return op;
}

void WriteHistory(std::ostream &out, std::span<const LinkOp> history) {
  for (const LinkOp &op : history) out << ToJson(op).dump() << '\n';
}

std::vector<LinkOp> ReadHistory(std::istream &in) {
  std::vector<LinkOp> ops;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      ops.push_back(LinkOpFromJson(json::parse(line)));
    } catch (const json::exception &e) {
      throw ParseError(e.what(), line_no);
    } catch (const CorpusError &e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return ops;
}

}  // namespace corefal
