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

// Must-link / cannot-link constraint stores.
//
// Both stores answer the same questions about the closure of an insertion
// history under
//
//   ML(x, y) & ML(y, z) -> ML(x, z)
//   CL(x, y) & ML(x, z) -> CL(y, z)
//
// (both relations symmetric, ML reflexive). LinkStore maintains the closure
// incrementally: ML classes live in a disjoint-set forest and CL is a set of
// edges between class representatives, so a CL edge stands for CL between
// every pair of members of the two classes. ReferenceStore keeps the raw
// insertions and re-derives the closure from scratch after every insertion;
// it is the oracle for LinkStore and the "no incremental closures" ablation.

#ifndef COREFAL_CONSTRAINTS_H_
#define COREFAL_CONSTRAINTS_H_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "corefal/corpus.h"
#include "json.hpp"

namespace corefal {

enum class Relation { kUnknown, kMustLink, kCannotLink };
enum class LinkKind { kMustLink, kCannotLink };

const char *ToString(Relation r);

struct LinkOp {
  LinkKind kind = LinkKind::kMustLink;
  Span a;
  Span b;

  bool operator==(const LinkOp &) const = default;
};

enum class LinkStatus {
  kAdded,         // the closure grew
  kAlreadyKnown,  // the link was derivable; nothing changed
  kConflict,      // the opposite relation is derivable; nothing changed
};

struct LinkUpdate {
  LinkStatus status = LinkStatus::kAdded;
  // Size of the merged ML class after a must-link (0 otherwise).
  size_t merged_size = 0;
  // CL edges the merged class picked up from the class it absorbed.
  size_t inherited_cannot_links = 0;

  bool conflict() const { return status == LinkStatus::kConflict; }
};

class ConstraintStore {
 public:
  virtual ~ConstraintStore() = default;

  // Preconditions: a != b. Conflicting insertions leave the store unchanged.
  virtual LinkUpdate AddMustLink(const Span &a, const Span &b) = 0;
  virtual LinkUpdate AddCannotLink(const Span &a, const Span &b) = 0;
  virtual Relation Query(const Span &a, const Span &b) const = 0;
  virtual std::unique_ptr<ConstraintStore> Clone() const = 0;

  LinkUpdate Add(const LinkOp &op);

  void MarkQueried(const Span &s) { queried_.insert(s); }
  bool IsQueried(const Span &s) const { return queried_.count(s) > 0; }
  void MarkDiscourseNew(const Span &s) { discourse_new_.insert(s); }
  bool IsDiscourseNew(const Span &s) const {
    return discourse_new_.count(s) > 0;
  }
  size_t num_queried() const { return queried_.size(); }

  // Accepted (non-conflicting, non-redundant) insertions in order.
  const std::vector<LinkOp> &history() const { return history_; }

 protected:
  std::vector<LinkOp> history_;

 private:
  std::unordered_set<Span, SpanHash> queried_;
  std::unordered_set<Span, SpanHash> discourse_new_;
};

class LinkStore final : public ConstraintStore {
 public:
  LinkUpdate AddMustLink(const Span &a, const Span &b) override;
  LinkUpdate AddCannotLink(const Span &a, const Span &b) override;
  Relation Query(const Span &a, const Span &b) const override;
  std::unique_ptr<ConstraintStore> Clone() const override;

  // Members of the ML class containing `s`, in document order. A span that
  // was never linked is its own class.
  std::vector<Span> MustLinkClass(const Span &s) const;
  size_t num_spans() const { return spans_.size(); }
  // Number of CL edges between live class representatives.
  size_t num_cannot_link_edges() const;

 private:
  int Lookup(const Span &s) const;
  int Intern(const Span &s);
  int Find(int x) const;

  std::unordered_map<Span, int, SpanHash> ids_;
  std::vector<Span> spans_;
  mutable std::vector<int> parent_;
  std::vector<std::vector<int>> members_;
  std::vector<std::unordered_set<int>> cannot_;
};

class ReferenceStore final : public ConstraintStore {
 public:
  LinkUpdate AddMustLink(const Span &a, const Span &b) override;
  LinkUpdate AddCannotLink(const Span &a, const Span &b) override;
  Relation Query(const Span &a, const Span &b) const override;
  std::unique_ptr<ConstraintStore> Clone() const override;

  // Materialized closure, each unordered pair once with a < b.
  std::vector<std::pair<Span, Span>> MustLinkPairs() const;
  std::vector<std::pair<Span, Span>> CannotLinkPairs() const;

 private:
  using Bits = std::vector<uint64_t>;
  struct Closure {
    std::vector<Bits> ml;
    std::vector<Bits> cl;
  };

  LinkUpdate Insert(const LinkOp &op);
  int Intern(const Span &s);
  int Lookup(const Span &s) const;
  // Fixed point of the closure rules over all recorded insertions.
  Closure Recompute() const;
  static bool Test(const Bits &row, int j);

  std::unordered_map<Span, int, SpanHash> ids_;
  std::vector<Span> spans_;
  Closure closure_;
};

struct ReferenceClosureResult {
  ReferenceStore store;
  // Index of the first insertion contradicting the earlier ones.
  std::optional<size_t> first_conflict;
};

// Replays a history through ReferenceStore; conflicting insertions are
// skipped and the first one is reported.
ReferenceClosureResult ReferenceClosure(std::span<const LinkOp> history);

// Insertion history as JSONL: {"op": "ml"|"cl", "a": [s,e], "b": [s,e]}.
nlohmann::json ToJson(const LinkOp &op);
LinkOp LinkOpFromJson(const nlohmann::json &j);
void WriteHistory(std::ostream &out, std::span<const LinkOp> history);
std::vector<LinkOp> ReadHistory(std::istream &in);

}  // namespace corefal

#endif  // COREFAL_CONSTRAINTS_H_
