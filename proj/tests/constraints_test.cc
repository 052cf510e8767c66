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

#include <sstream>

#include "corefal/constraints.h"
#include "doctest.h"
#include "oracles.h"
#include "test_util.h"

namespace corefal {
namespace {

using testing::S;
using testing::NaiveClosure;

template <typename Store>
void ExpectAll(const Store &store, const std::vector<Span> &spans,
               Relation expected) {
  for (const Span &a : spans) {
    for (const Span &b : spans) {
      if (a != b) CHECK(store.Query(a, b) == expected);
    }
  }
}

TEST_CASE_TEMPLATE("store semantics", Store, LinkStore, ReferenceStore) {
  const Span a = S(0), a2 = S(1), b = S(2), x = S(3), c = S(4);

  SUBCASE("must-link is transitive") {
    Store s;
    s.AddMustLink(a, b);
    s.AddMustLink(b, c);
    CHECK(s.Query(a, c) == Relation::kMustLink);
    CHECK(s.Query(c, a) == Relation::kMustLink);
  }
  SUBCASE("merging classes carries cannot-links along") {
    Store s;
    s.AddMustLink(a, a2);
    s.AddCannotLink(b, x);
    const LinkUpdate u = s.AddMustLink(a, b);
    CHECK(u.status == LinkStatus::kAdded);
    ExpectAll(s, {a, a2, b}, Relation::kMustLink);
    CHECK(s.Query(a, x) == Relation::kCannotLink);
    CHECK(s.Query(a2, x) == Relation::kCannotLink);
  }
  SUBCASE("cannot-link spreads over the must-link class") {
    Store s;
    s.AddMustLink(a, a2);
    s.AddCannotLink(a, b);
    CHECK(s.Query(a2, b) == Relation::kCannotLink);
    CHECK(s.Query(b, a2) == Relation::kCannotLink);
  }
  SUBCASE("cannot-link then must-link") {
    Store s;
    s.AddCannotLink(a, b);
    s.AddMustLink(b, c);
    CHECK(s.Query(a, c) == Relation::kCannotLink);
  }
  SUBCASE("fresh store knows nothing") {
    Store s;
    CHECK(s.Query(a, b) == Relation::kUnknown);
    s.AddCannotLink(a, b);
    CHECK(s.Query(b, a) == Relation::kCannotLink);
    CHECK(s.Query(a, c) == Relation::kUnknown);
  }
  SUBCASE("contradictions are reported and change nothing") {
    Store s;
    s.AddCannotLink(a, b);
    CHECK(s.AddMustLink(a, b).conflict());
    CHECK(s.Query(a, b) == Relation::kCannotLink);
    Store t;
    t.AddMustLink(a, b);
    CHECK(t.AddCannotLink(b, a).conflict());
    CHECK(t.Query(a, b) == Relation::kMustLink);
    CHECK(t.history().size() == 1);
  }
  SUBCASE("re-adding a derivable link is a no-op") {
    Store s;
    s.AddMustLink(a, b);
    s.AddMustLink(b, c);
    CHECK(s.AddMustLink(a, c).status == LinkStatus::kAlreadyKnown);
    s.AddCannotLink(a, x);
    CHECK(s.AddCannotLink(c, x).status == LinkStatus::kAlreadyKnown);
    CHECK(s.history().size() == 3);
  }
}

TEST_CASE("incremental store agrees with both oracles on random histories") {
  Rng rng(20260411);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng.Index(29));
    const int inserts = static_cast<int>(rng.Index(120));
    const double ml_rate = rng.Uniform();
    LinkStore inc;
    ReferenceStore ref;
    NaiveClosure naive(n);
    for (int k = 0; k < inserts; ++k) {
      const int a = static_cast<int>(rng.Index(n));
      int b = static_cast<int>(rng.Index(n - 1));
      if (b >= a) ++b;
      const LinkKind kind =
          rng.Bernoulli(ml_rate) ? LinkKind::kMustLink : LinkKind::kCannotLink;
      const LinkStatus expect = naive.Add(kind, a, b);
      const LinkOp op{kind, S(a), S(b)};
      REQUIRE(inc.Add(op).status == expect);
      REQUIRE(ref.Add(op).status == expect);
    }
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (a == b) continue;
        REQUIRE(inc.Query(S(a), S(b)) == naive.Query(a, b));
        REQUIRE(ref.Query(S(a), S(b)) == naive.Query(a, b));
      }
    }
  }
}

TEST_CASE("reference closure reports the first conflict") {
  const std::vector<LinkOp> history{
      {LinkKind::kMustLink, S(0), S(1)},
      {LinkKind::kMustLink, S(1), S(2)},
      {LinkKind::kCannotLink, S(2), S(3)},
      {LinkKind::kMustLink, S(3), S(0)},
      {LinkKind::kCannotLink, S(0), S(2)},
  };
  const ReferenceClosureResult r = ReferenceClosure(history);
  REQUIRE(r.first_conflict);
  CHECK(*r.first_conflict == 3);
  const auto ml = r.store.MustLinkPairs();
  CHECK(std::find(ml.begin(), ml.end(), std::pair{S(0), S(2)}) != ml.end());

  const ReferenceClosureResult empty = ReferenceClosure({});
  CHECK_FALSE(empty.first_conflict);
  CHECK(empty.store.MustLinkPairs().empty());
  CHECK(empty.store.CannotLinkPairs().empty());
}

TEST_CASE("link store bookkeeping") {
  LinkStore s;
  s.AddMustLink(S(0), S(1));
  s.AddCannotLink(S(2), S(5));
  const LinkUpdate u = s.AddMustLink(S(1), S(2));
  CHECK(u.merged_size == 3);
  CHECK(u.inherited_cannot_links == 1);
  CHECK(s.MustLinkClass(S(2)) == std::vector<Span>{S(0), S(1), S(2)});
  CHECK(s.MustLinkClass(S(9)) == std::vector<Span>{S(9)});
  CHECK(s.num_cannot_link_edges() == 1);

  s.MarkQueried(S(4));
  s.MarkDiscourseNew(S(4));
  const auto copy = s.Clone();
  CHECK(copy->IsQueried(S(4)));
  CHECK(copy->IsDiscourseNew(S(4)));
  CHECK(copy->Query(S(0), S(5)) == Relation::kCannotLink);
  copy->AddMustLink(S(7), S(8));
  CHECK(s.Query(S(7), S(8)) == Relation::kUnknown);
}

TEST_CASE("history round-trips through jsonl") {
  LinkStore s;
  s.AddMustLink({0, 1}, {4, 6});
  s.AddCannotLink({4, 6}, {8, 8});
  std::stringstream buf;
  WriteHistory(buf, s.history());
  CHECK(buf.str().find(R"("op":"ml")") != std::string::npos);
  const std::vector<LinkOp> back = ReadHistory(buf);
  CHECK(back == s.history());
}

}  // namespace
}  // namespace corefal
