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

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "corefal/active_learning.h"
#include "corefal/cost_model.h"
#include "httplib.h"

namespace corefal {

using json = nlohmann::json;

namespace {

ServiceResponse Error(int status, const std::string &message) {
  return {status, json{{"error", message}}};
}

json QueryJson(const Query &q, const CorpusDocument &doc) {
  return json{{"doc_id", q.doc_id},
              {"tokens", doc.doc.tokens},
              {"target", SpanToJson(q.target)},
              {"proposed", SpanToJson(q.proposed)},
              {"protocol", ToString(q.protocol)}};
}

}  // namespace

const char *ToString(ServiceMode m) {
  return m == ServiceMode::kLive ? "live" : "timing_study";
}

std::optional<ServiceMode> ServiceModeFromString(std::string_view name) {
  if (name == "live") return ServiceMode::kLive;
  if (name == "timing_study") return ServiceMode::kTimingStudy;
  return std::nullopt;
}

struct AnnotationService::Session {
  std::mutex mu;
  std::string id;
  Protocol protocol = Protocol::kDiscrete;
  std::vector<size_t> docs;
  // Live mode cursor into docs.
  size_t cursor = 0;
  int queries_in_doc = 0;
  std::vector<size_t> pending;
  Rng rng{0};
  // Timing-study mode: remaining sampled questions.
  std::vector<Query> sampled;

  std::map<std::string, std::unique_ptr<DocumentState>> states;
  std::optional<Query> outstanding;
  std::string issued_at;
  BudgetLedger ledger;
  int answered = 0;
};

AnnotationService::AnnotationService(const Corpus &corpus,
                                     std::shared_ptr<const Scorer> scorer,
                                     ServiceOptions options)
    : corpus_(corpus), scorer_(std::move(scorer)), options_(std::move(options)) {
  if (!scorer_) throw std::invalid_argument("service needs a scorer");
  if (options_.strategy == Strategy::kClusteredQbc) {
    throw std::invalid_argument("the service scores with a single model");
  }
  for (size_t i = 0; i < corpus_.size(); ++i) {
    if (!corpus_[i].clusters) {
      throw std::invalid_argument("document " + corpus_[i].doc.doc_id +
                                  " has no mentions");
    }
    doc_index_[corpus_[i].doc.doc_id] = i;
  }
  if (!options_.log_path.empty()) {
    log_ = std::fopen(options_.log_path.c_str(), "a");
    if (!log_) {
      throw std::runtime_error("cannot open answer log " + options_.log_path);
    }
  }
}

AnnotationService::~AnnotationService() {
  if (log_) std::fclose(log_);
}

void AnnotationService::Append(const json &line) {
  if (!log_) return;
  const std::string text = line.dump() + "\n";
  std::lock_guard<std::mutex> lock(log_mu_);
  if (std::fwrite(text.data(), 1, text.size(), log_) != text.size() ||
      std::fflush(log_) != 0 || fsync(fileno(log_)) != 0) {
    throw std::runtime_error("answer log write failed");
  }
}

std::shared_ptr<AnnotationService::Session> AnnotationService::Find(
    const std::string &id) {
  std::lock_guard<std::mutex> lock(sessions_mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::shared_ptr<AnnotationService::Session> AnnotationService::MakeSession(
    const std::string &id, std::vector<size_t> docs, Protocol protocol) {
  auto s = std::make_shared<Session>();
  s->id = id;
  s->protocol = protocol;
  s->docs = std::move(docs);
  s->rng = Rng(MixSeed(options_.seed, StableHash(id)));
  if (options_.mode == ServiceMode::kTimingStudy) {
    // Random target with a non-empty window, random earlier candidate.
    std::vector<std::pair<size_t, size_t>> pool;
    std::vector<std::vector<Span>> spans;
    for (size_t d = 0; d < s->docs.size(); ++d) {
      spans.push_back(CandidateSpans(corpus_[s->docs[d]],
                                     {options_.distractor_rate, options_.seed}));
      for (size_t i = 1; i < spans.back().size(); ++i) pool.push_back({d, i});
    }
    s->rng.Shuffle(std::span<std::pair<size_t, size_t>>(pool));
    const size_t n = std::min(pool.size(),
                              static_cast<size_t>(options_.timing_questions));
    for (size_t k = 0; k < n; ++k) {
      const auto [d, i] = pool[k];
      const CandidateSet cands =
          AntecedentCandidates(spans[d], i, options_.max_antecedents);
      const size_t a = cands.antecedents[s->rng.Index(cands.antecedents.size())];
      s->sampled.push_back({corpus_[s->docs[d]].doc.doc_id, spans[d][i],
                            spans[d][a], protocol});
    }
  }
  return s;
}

ServiceResponse AnnotationService::CreateSession(const json &body) {
  if (!body.is_null() && !body.is_object()) {
    return Error(400, "session request must be an object");
  }
  std::vector<size_t> docs;
  Protocol protocol = options_.protocol;
  try {
    if (body.is_object() && body.contains("doc_ids")) {
      for (const json &d : body.at("doc_ids")) {
        const std::string id = d.get<std::string>();
        auto it = doc_index_.find(id);
        if (it == doc_index_.end()) return Error(422, "unknown document " + id);
        docs.push_back(it->second);
      }
    } else {
      for (size_t i = 0; i < corpus_.size(); ++i) docs.push_back(i);
    }
    if (body.is_object() && body.contains("protocol")) {
      const auto p = ProtocolFromString(body.at("protocol").get<std::string>());
      if (!p) return Error(422, "unknown protocol");
      protocol = *p;
    }
  } catch (const json::exception &e) {
    return Error(422, e.what());
  }
  if (docs.empty()) return Error(422, "session has no documents");
  if (options_.strategy == Strategy::kPairwiseEntropy &&
      protocol != Protocol::kPairwise) {
    return Error(422, "pairwise_entropy selection needs the pairwise protocol");
  }

  std::string id;
  {
    std::lock_guard<std::mutex> lock(sessions_mu_);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%06d", next_session_++);
    id = buf;
  }
  auto session = MakeSession(id, docs, protocol);
  json doc_ids = json::array();
  for (size_t d : docs) doc_ids.push_back(corpus_[d].doc.doc_id);
  Append(json{{"event", "session"},
              {"session_id", id},
              {"doc_ids", doc_ids},
              {"protocol", ToString(protocol)},
              {"timestamp", NowTimestamp()}});
  {
    std::lock_guard<std::mutex> lock(sessions_mu_);
    sessions_[id] = session;
  }
  return {200, json{{"session_id", id}}};
}

namespace {

std::unique_ptr<DocumentState> ScoredState(const CorpusDocument &doc,
                                           const Scorer &scorer,
                                           const ServiceOptions &options) {
  std::vector<Span> spans =
      CandidateSpans(doc, {options.distractor_rate, options.seed});
  ScorerOutput out = scorer.Score(doc.doc, spans, options.max_antecedents);
  auto state = std::make_unique<DocumentState>(
      doc, std::move(spans), options.max_antecedents, MakeConstraintStore(true));
  state->SetModel(std::move(out.distributions));
  return state;
}

}  // namespace

bool AnnotationService::Advance(Session &s) {
  ++s.cursor;
  s.queries_in_doc = 0;
  s.pending.clear();
  return s.cursor < s.docs.size();
}

std::optional<Query> AnnotationService::EnsureQuery(Session &s) {
  if (s.outstanding) return s.outstanding;
  if (options_.mode == ServiceMode::kTimingStudy) {
    if (s.sampled.empty()) return std::nullopt;
    s.outstanding = s.sampled.front();
    s.sampled.erase(s.sampled.begin());
    s.issued_at = NowTimestamp();
    return s.outstanding;
  }
  while (s.cursor < s.docs.size()) {
    const CorpusDocument &doc = corpus_[s.docs[s.cursor]];
    auto &state = s.states[doc.doc.doc_id];
    if (!state) state = ScoredState(doc, *scorer_, options_);
    if (options_.queries_per_doc && s.queries_in_doc >= *options_.queries_per_doc) {
      Advance(s);
      continue;
    }
    AnnotateOptions opts;
    opts.strategy = options_.strategy;
    opts.protocol = s.protocol;
    opts.max_queries = options_.queries_per_doc;
    const int left = options_.queries_per_doc
                         ? *options_.queries_per_doc - s.queries_in_doc
                         : static_cast<int>(state->size());
    auto q = NextQuery(*state, opts, &s.pending, left, &s.rng);
    if (!q) {
      Advance(s);
      continue;
    }
    s.outstanding = q;
    s.issued_at = NowTimestamp();
    return q;
  }
  return std::nullopt;
}

ServiceResponse AnnotationService::Next(const std::string &session_id) {
  auto s = Find(session_id);
  if (!s) return Error(404, "unknown session " + session_id);
  std::lock_guard<std::mutex> lock(s->mu);
  const auto q = EnsureQuery(*s);
  if (!q) return {200, json{{"done", true}}};
  return {200, QueryJson(*q, corpus_[doc_index_.at(q->doc_id)])};
}

ServiceResponse AnnotationService::Apply(Session &s, const AnswerRecord &record,
                                         bool log) {
  const Query &q = record.query;
  auto &state = s.states[q.doc_id];
  if (!state) state = ScoredState(corpus_[doc_index_.at(q.doc_id)], *scorer_, options_);
  try {
    ValidateAnswer(q, record.answer);
    if (record.answer.followup.kind == FollowupKind::kFirstAntecedent &&
        !state->IndexOf(record.answer.followup.span)) {
      return Error(422, "first antecedent " +
                            ToString(record.answer.followup.span) +
                            " is not a candidate mention");
    }
  } catch (const AnnotationError &e) {
    return Error(422, e.what());
  }
  if (log) {
    json line = ToJson(record);
    line["issued_at"] = s.issued_at;
    Append(line);
  }
  ApplyResult result;
  try {
    result = ApplyAnswer(q, record.answer, state.get());
  } catch (const AnnotationError &e) {
    return Error(422, e.what());
  }
  s.ledger.Record(q.protocol, record.answer.verdict);
  ++s.answered;
  ++s.queries_in_doc;
  s.outstanding.reset();
  return {200, json{{"accepted", true}, {"conflicts", result.conflicts}}};
}

ServiceResponse AnnotationService::SubmitAnswer(const std::string &session_id,
                                                const json &body) {
  auto s = Find(session_id);
  if (!s) return Error(404, "unknown session " + session_id);
  if (!body.is_object()) return Error(400, "answer must be a JSON object");
  std::lock_guard<std::mutex> lock(s->mu);
  if (!s->outstanding) return Error(409, "no outstanding query");
  AnswerRecord record;
  record.query = *s->outstanding;
  try {
    record.answer = AnswerFromJson(body);
    // The query fields are optional but must name the outstanding query.
    if (body.contains("doc_id") &&
        body.at("doc_id").get<std::string>() != record.query.doc_id) {
      return Error(409, "answer is for a different document");
    }
    if ((body.contains("target") &&
         SpanFromJson(body.at("target")) != record.query.target) ||
        (body.contains("proposed") &&
         SpanFromJson(body.at("proposed")) != record.query.proposed)) {
      return Error(409, "answer is for a stale query");
    }
  } catch (const AnnotationError &e) {
    return Error(422, e.what());
  } catch (const CorpusError &e) {
    return Error(422, e.what());
  } catch (const json::exception &e) {
    return Error(422, e.what());
  }
  record.timestamp = NowTimestamp();
  record.session_id = s->id;
  return Apply(*s, record, true);
}

ServiceResponse AnnotationService::Progress(const std::string &session_id) {
  auto s = Find(session_id);
  if (!s) return Error(404, "unknown session " + session_id);
  std::lock_guard<std::mutex> lock(s->mu);
  json links = json::array();
  for (const auto &[doc_id, state] : s->states) {
    for (const LinkOp &op : state->links().history()) {
      links.push_back(
          {{"doc_id", doc_id},
           {"op", op.kind == LinkKind::kMustLink ? "ml" : "cl"},
           {"a", SpanToJson(op.a)},
           {"b", SpanToJson(op.b)}});
    }
  }
  json body{{"session_id", s->id},
            {"mode", ToString(options_.mode)},
            {"protocol", ToString(s->protocol)},
            {"answered", s->answered},
            {"ledger", ToJson(s->ledger)},
            {"outstanding", s->outstanding.has_value()},
            {"links", links}};
  if (options_.mode == ServiceMode::kLive) {
    body["documents"] = s->docs.size();
    // A document whose question quota is used up counts as done before the
    // next request moves past it.
    size_t done = std::min(s->cursor, s->docs.size());
    if (done < s->docs.size() && !s->outstanding && options_.queries_per_doc &&
        s->queries_in_doc >= *options_.queries_per_doc) {
      ++done;
    }
    body["documents_done"] = done;
  } else {
    body["remaining"] = s->sampled.size() + (s->outstanding ? 1 : 0);
  }
  return {200, body};
}

size_t AnnotationService::Replay(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read answer log " + path.string());
  size_t replayed = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.value("event", std::string()) == "session") {
      std::vector<size_t> docs;
      for (const json &d : j.at("doc_ids")) {
        docs.push_back(doc_index_.at(d.get<std::string>()));
      }
      const std::string id = j.at("session_id").get<std::string>();
      const auto protocol = ProtocolFromString(j.at("protocol").get<std::string>());
      if (!protocol) throw std::runtime_error("bad protocol in answer log");
      auto s = MakeSession(id, std::move(docs), *protocol);
      std::lock_guard<std::mutex> lock(sessions_mu_);
      sessions_[id] = s;
      if (id.size() > 1 && id[0] == 's') {
        next_session_ = std::max(next_session_, std::stoi(id.substr(1)) + 1);
      }
      continue;
    }
    const AnswerRecord record = AnswerRecordFromJson(j);
    auto s = Find(record.session_id);
    if (!s) throw std::runtime_error("answer for unknown session " + record.session_id);
    std::lock_guard<std::mutex> lock(s->mu);
    // Bring the queue to the logged question, then apply it.
    if (options_.mode == ServiceMode::kTimingStudy) {
      if (!s->sampled.empty() && s->sampled.front() == record.query) {
        s->sampled.erase(s->sampled.begin());
      }
    } else {
      while (s->cursor < s->docs.size() &&
             corpus_[s->docs[s->cursor]].doc.doc_id != record.query.doc_id) {
        Advance(*s);
      }
      if (s->outstanding && !(*s->outstanding == record.query)) s->pending.clear();
    }
    s->outstanding = record.query;
    s->issued_at = j.value("issued_at", std::string());
    const ServiceResponse r = Apply(*s, record, false);
    if (r.status != 200) {
      throw std::runtime_error("answer log line rejected: " + r.body.dump());
    }
    ++replayed;
  }
  return replayed;
}

void AnnotationService::Register(httplib::Server *server) {
  auto reply = [](httplib::Response &res, const ServiceResponse &r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto parse = [](const httplib::Request &req, json *out) {
    if (req.body.empty()) {
      *out = json();
      return true;
    }
    *out = json::parse(req.body, nullptr, false);
    return !out->is_discarded();
  };
  server->Post("/sessions", [this, reply, parse](const httplib::Request &req,
                                                 httplib::Response &res) {
    json body;
    if (!parse(req, &body)) return reply(res, Error(400, "malformed JSON"));
    reply(res, CreateSession(body));
  });
  server->Get(R"(/sessions/([^/]+)/next)",
              [this, reply](const httplib::Request &req, httplib::Response &res) {
                reply(res, Next(req.matches[1]));
              });
  server->Post(R"(/sessions/([^/]+)/answer)",
               [this, reply, parse](const httplib::Request &req,
                                    httplib::Response &res) {
                 json body;
                 if (!parse(req, &body)) {
                   return reply(res, Error(400, "malformed JSON"));
                 }
                 reply(res, SubmitAnswer(req.matches[1], body));
               });
  server->Get(R"(/sessions/([^/]+)/progress)",
              [this, reply](const httplib::Request &req, httplib::Response &res) {
                reply(res, Progress(req.matches[1]));
              });
  server->set_exception_handler(
      [reply](const httplib::Request &, httplib::Response &res,
              std::exception_ptr ep) {
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception &e) {
          reply(res, Error(500, e.what()));
        }
      });
}

bool ServeForever(AnnotationService *service, const std::string &host, int port) {
  httplib::Server server;
  service->Register(&server);
  return server.listen(host, port);
}

}  // namespace corefal
