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

#include "corefal/service.h"

#include <unistd.h>

#include <filesystem>
#include <map>
#include <thread>

#include "corefal/synthetic.h"
#include "doctest.h"
#include "httplib.h"

namespace corefal {
namespace {

using nlohmann::json;

Corpus ServiceCorpus() {
  SyntheticConfig s;
  s.num_docs = 4;
  s.min_mentions = 10;
  s.max_mentions = 16;
  s.seed = 3;
  return GenerateSyntheticCorpus(s);
}

// Answers a query from the gold clusters, the way a careful annotator
// would.
json GoldAnswer(const Corpus &corpus, const json &q) {
  const std::string doc_id = q.at("doc_id");
  const Span target = SpanFromJson(q.at("target"));
  const Span proposed = SpanFromJson(q.at("proposed"));
  const CorpusDocument *doc = nullptr;
  for (const CorpusDocument &d : corpus) {
    if (d.doc.doc_id == doc_id) doc = &d;
  }
  REQUIRE(doc != nullptr);
  const Cluster *tc = nullptr;
  for (const Cluster &c : *doc->clusters) {
    if (std::find(c.begin(), c.end(), target) != c.end()) tc = &c;
  }
  const bool same =
      tc && std::find(tc->begin(), tc->end(), proposed) != tc->end();
  json a;
  if (same) {
    a["verdict"] = "coreferent";
    return a;
  }
  a["verdict"] = "not_coreferent";
  if (q.at("protocol") == "pairwise") return a;
  if (!tc) {
    a["followup"] = {{"kind", "abstain_invalid_mention"}};
    return a;
  }
  const Span first = *std::min_element(tc->begin(), tc->end());
  if (first < target) {
    a["followup"] = {{"kind", "first_antecedent"}, {"span", SpanToJson(first)}};
  } else {
    a["followup"] = {{"kind", "abstain_no_antecedent"}};
  }
  return a;
}

class TestServer {
 public:
  explicit TestServer(AnnotationService *service) {
    service->Register(&server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~TestServer() {
    server_.stop();
    thread_.join();
  }

  httplib::Client Client() const { return httplib::Client("127.0.0.1", port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

struct Reply {
  int status = 0;
  json body;
};

Reply Post(httplib::Client &c, const std::string &path, const std::string &body) {
  auto r = c.Post(path, body, "application/json");
  REQUIRE(r);
  return {r->status, json::parse(r->body)};
}

Reply Post(httplib::Client &c, const std::string &path, const json &body) {
  return Post(c, path, body.dump());
}

Reply Get(httplib::Client &c, const std::string &path) {
  auto r = c.Get(path);
  REQUIRE(r);
  return {r->status, json::parse(r->body)};
}

std::string NewSession(httplib::Client &c, const json &body = json::object()) {
  const Reply r = Post(c, "/sessions", body);
  REQUIRE(r.status == 200);
  return r.body.at("session_id");
}

std::filesystem::path TempLog(const std::string &name) {
  auto p = std::filesystem::temp_directory_path() /
           ("corefal_" + name + "_" + std::to_string(getpid()) + ".jsonl");
  std::filesystem::remove(p);
  return p;
}

std::shared_ptr<const Scorer> Oracle(const Corpus &corpus) {
  return std::make_shared<OracleNoiseScorer>(corpus, 0.3, 7);
}

TEST_CASE("coreferent answers become must-links") {
  const Corpus corpus = ServiceCorpus();
  AnnotationService service(corpus, Oracle(corpus), {});
  TestServer server(&service);
  auto c = server.Client();
  const std::string id = NewSession(c);

  bool saw_ml = false;
  for (int k = 0; k < 40 && !saw_ml; ++k) {
    const Reply q = Get(c, "/sessions/" + id + "/next");
    REQUIRE(q.status == 200);
    if (q.body.value("done", false)) break;
    CHECK(q.body.at("protocol") == "discrete");
    CHECK(q.body.at("tokens").is_array());
    const json a = GoldAnswer(corpus, q.body);
    const Reply r = Post(c, "/sessions/" + id + "/answer", a);
    REQUIRE(r.status == 200);
    CHECK(r.body.at("accepted") == true);
    if (a.at("verdict") == "coreferent") {
      const Reply p = Get(c, "/sessions/" + id + "/progress");
      bool found = false;
      for (const json &l : p.body.at("links")) {
        const json pair = {l.at("a"), l.at("b")};
        if (l.at("op") == "ml" && l.at("doc_id") == q.body.at("doc_id") &&
            (pair == json{q.body.at("proposed"), q.body.at("target")} ||
             pair == json{q.body.at("target"), q.body.at("proposed")})) {
          found = true;
        }
      }
      CHECK(found);
      saw_ml = true;
    }
  }
  CHECK(saw_ml);
}

TEST_CASE("error statuses") {
  const Corpus corpus = ServiceCorpus();
  AnnotationService service(corpus, Oracle(corpus), {});
  TestServer server(&service);
  auto c = server.Client();

  CHECK(Get(c, "/sessions/nope/next").status == 404);
  CHECK(Get(c, "/sessions/nope/progress").status == 404);
  CHECK(Post(c, "/sessions/nope/answer", json{{"verdict", "coreferent"}}).status ==
        404);
  CHECK(Post(c, "/sessions", std::string("{not json")).status == 400);
  CHECK(Post(c, "/sessions", json{{"doc_ids", {"missing"}}}).status == 422);
  CHECK(Post(c, "/sessions", json{{"protocol", "ternary"}}).status == 422);

  const std::string id =
      NewSession(c, {{"doc_ids", {corpus[1].doc.doc_id}}});
  // Nothing asked yet.
  CHECK(Post(c, "/sessions/" + id + "/answer", json{{"verdict", "coreferent"}})
            .status == 409);

  const Reply q = Get(c, "/sessions/" + id + "/next");
  REQUIRE(q.status == 200);
  CHECK(q.body.at("doc_id") == corpus[1].doc.doc_id);
  // Asking again returns the same outstanding question.
  CHECK(Get(c, "/sessions/" + id + "/next").body == q.body);

  const std::string answer = "/sessions/" + id + "/answer";
  CHECK(Post(c, answer, std::string("[")).status == 400);
  CHECK(Post(c, answer, json{{"verdict", "maybe"}}).status == 422);
  // A discrete "no" needs a follow-up.
  CHECK(Post(c, answer, json{{"verdict", "not_coreferent"}}).status == 422);
  CHECK(Post(c, answer,
             json{{"verdict", "not_coreferent"},
                  {"followup", {{"kind", "not_asked"}}}})
            .status == 422);
  // Stale query fields.
  json stale = GoldAnswer(corpus, q.body);
  stale["target"] = json::array({9999, 9999});
  CHECK(Post(c, answer, stale).status == 409);
  stale = GoldAnswer(corpus, q.body);
  stale["doc_id"] = corpus[0].doc.doc_id;
  CHECK(Post(c, answer, stale).status == 409);

  json good = GoldAnswer(corpus, q.body);
  good["doc_id"] = q.body.at("doc_id");
  good["target"] = q.body.at("target");
  good["proposed"] = q.body.at("proposed");
  CHECK(Post(c, answer, good).status == 200);
  // Answering the same question twice.
  CHECK(Post(c, answer, good).status == 409);

  const Reply p = Get(c, "/sessions/" + id + "/progress");
  CHECK(p.body.at("answered") == 1);
  CHECK(p.body.at("outstanding") == false);
}

TEST_CASE("pairwise_entropy sessions must be pairwise") {
  const Corpus corpus = ServiceCorpus();
  ServiceOptions o;
  o.strategy = Strategy::kPairwiseEntropy;
  o.protocol = Protocol::kPairwise;
  AnnotationService service(corpus, Oracle(corpus), o);
  CHECK(service.CreateSession({{"protocol", "discrete"}}).status == 422);
  const ServiceResponse r = service.CreateSession(json::object());
  REQUIRE(r.status == 200);
  const std::string id = r.body.at("session_id");
  const ServiceResponse q = service.Next(id);
  REQUIRE(q.status == 200);
  CHECK(q.body.at("protocol") == "pairwise");
  const ServiceResponse a =
      service.SubmitAnswer(id, {{"verdict", "not_coreferent"}});
  CHECK(a.status == 200);
  CHECK(service.Progress(id).body.at("ledger").at("p") == 1);
}

TEST_CASE("concurrent sessions keep separate ledgers") {
  const Corpus corpus = ServiceCorpus();
  ServiceOptions o;
  o.queries_per_doc = 3;
  AnnotationService service(corpus, Oracle(corpus), o);
  TestServer server(&service);

  std::map<std::string, std::map<std::string, int>> expected;
  std::vector<std::string> ids;
  {
    auto c = server.Client();
    ids = {NewSession(c), NewSession(c, {{"protocol", "pairwise"}})};
  }
  CHECK(ids[0] != ids[1]);
  std::vector<std::thread> workers;
  for (int w = 0; w < 2; ++w) {
    workers.emplace_back([&, w] {
      auto c = server.Client();
      std::map<std::string, int> tally;
      for (;;) {
        const Reply q = Get(c, "/sessions/" + ids[w] + "/next");
        if (q.status != 200 || q.body.value("done", false)) break;
        const json a = GoldAnswer(corpus, q.body);
        if (Post(c, "/sessions/" + ids[w] + "/answer", a).status != 200) break;
        if (q.body.at("protocol") == "pairwise") {
          ++tally["p"];
        } else if (a.at("verdict") == "coreferent") {
          ++tally["d_c"];
        } else {
          ++tally["d_nc"];
        }
      }
      expected[ids[w]] = tally;
    });
  }
  for (std::thread &t : workers) t.join();

  for (const std::string &id : ids) {
    const ServiceResponse p = service.Progress(id);
    const json &ledger = p.body.at("ledger");
    std::map<std::string, int> &tally = expected[id];
    CHECK(ledger.at("p") == tally["p"]);
    CHECK(ledger.at("d_c") == tally["d_c"]);
    CHECK(ledger.at("d_nc") == tally["d_nc"]);
    CHECK(p.body.at("answered") == tally["p"] + tally["d_c"] + tally["d_nc"]);
    CHECK(p.body.at("answered") == 4 * 3);
    CHECK(p.body.at("documents_done") == 4);
  }
}

TEST_CASE("replaying the log restores sessions") {
  const Corpus corpus = ServiceCorpus();
  const auto log = TempLog("replay");
  ServiceOptions o;
  o.log_path = log.string();
  o.queries_per_doc = 4;
  std::vector<std::string> ids;
  std::vector<json> before;
  {
    AnnotationService service(corpus, Oracle(corpus), o);
    ids = {service.CreateSession(json::object()).body.at("session_id"),
           service.CreateSession({{"doc_ids", {corpus[2].doc.doc_id}},
                                  {"protocol", "pairwise"}})
               .body.at("session_id")};
    for (int k = 0; k < 7; ++k) {
      for (const std::string &id : ids) {
        const ServiceResponse q = service.Next(id);
        if (q.body.value("done", false)) continue;
        REQUIRE(service.SubmitAnswer(id, GoldAnswer(corpus, q.body)).status ==
                200);
      }
    }
    for (const std::string &id : ids) before.push_back(service.Progress(id).body);
  }
  AnnotationService fresh(corpus, Oracle(corpus), o);
  CHECK(fresh.Replay(log) == static_cast<size_t>(
                                 before[0].at("answered").get<int>() +
                                 before[1].at("answered").get<int>()));
  for (size_t i = 0; i < ids.size(); ++i) {
    CHECK(fresh.Progress(ids[i]).body == before[i]);
  }
  // New sessions do not reuse replayed ids.
  const std::string next = fresh.CreateSession(json::object()).body.at("session_id");
  CHECK(next != ids[0]);
  CHECK(next != ids[1]);

  // Continuing after replay asks what the original would have asked.
  ServiceOptions no_log = o;
  no_log.log_path.clear();
  AnnotationService copy(corpus, Oracle(corpus), no_log);
  copy.Replay(log);
  CHECK(copy.Next(ids[0]).body == fresh.Next(ids[0]).body);
  std::filesystem::remove(log);
}

TEST_CASE("timing study sessions") {
  const Corpus corpus = ServiceCorpus();
  ServiceOptions o;
  o.mode = ServiceMode::kTimingStudy;
  o.timing_questions = 6;
  AnnotationService service(corpus, Oracle(corpus), o);
  const std::string id = service.CreateSession(json::object()).body.at("session_id");
  CHECK(service.Progress(id).body.at("remaining") == 6);
  int asked = 0;
  for (;;) {
    const ServiceResponse q = service.Next(id);
    REQUIRE(q.status == 200);
    if (q.body.value("done", false)) break;
    json a = GoldAnswer(corpus, q.body);
    a["initial_seconds"] = 3.5;
    REQUIRE(service.SubmitAnswer(id, a).status == 200);
    ++asked;
  }
  CHECK(asked == 6);
  const json p = service.Progress(id).body;
  CHECK(p.at("mode") == "timing_study");
  CHECK(p.at("remaining") == 0);
  CHECK(p.at("answered") == 6);

  // Same seed and session id, same questions.
  AnnotationService twin(corpus, Oracle(corpus), o);
  const std::string tid = twin.CreateSession(json::object()).body.at("session_id");
  CHECK(tid == id);
  AnnotationService first(corpus, Oracle(corpus), o);
  first.CreateSession(json::object());
  CHECK(twin.Next(tid).body == first.Next(id).body);
}

TEST_CASE("the service needs gold mentions and one model") {
  Corpus corpus = ServiceCorpus();
  ServiceOptions o;
  o.strategy = Strategy::kClusteredQbc;
  CHECK_THROWS(AnnotationService(corpus, Oracle(corpus), o));
  CHECK_THROWS(AnnotationService(corpus, nullptr, {}));
  Corpus bare = corpus;
  bare[0].clusters.reset();
  CHECK_THROWS(AnnotationService(bare, Oracle(corpus), {}));
}

}  // namespace
}  // namespace corefal
