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

// HTTP annotation service for human annotators.
//
//   POST /sessions                 -> {"session_id"}
//   GET  /sessions/{id}/next       -> {"doc_id", "tokens", "target",
//                                      "proposed", "protocol"} or {"done"}
//   POST /sessions/{id}/answer     -> {"accepted", "conflicts"}
//   GET  /sessions/{id}/progress   -> ledger, counts and recorded links
//
// Each session works through a queue of documents with at most one
// outstanding question. Accepted answers are appended to a JSONL log and
// flushed to disk before they are acknowledged; replaying the log into a
// fresh service with the same corpus and scorer restores the sessions.

#ifndef COREFAL_SERVICE_H_
#define COREFAL_SERVICE_H_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "corefal/annotator.h"
#include "corefal/corpus.h"
#include "corefal/scorer.h"
#include "corefal/selectors.h"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace corefal {

enum class ServiceMode {
  // The next question is selected after every answer.
  kLive,
  // Questions are sampled up front at random from the session's documents.
  kTimingStudy,
};

const char *ToString(ServiceMode m);
std::optional<ServiceMode> ServiceModeFromString(std::string_view name);

struct ServiceOptions {
  ServiceMode mode = ServiceMode::kLive;
  Strategy strategy = Strategy::kClusteredEntropy;
  Protocol protocol = Protocol::kDiscrete;
  int max_antecedents = 20;
  double distractor_rate = 0.0;
  uint64_t seed = 1;
  // Live mode: questions per document before moving on (unset: until no
  // span is eligible).
  std::optional<int> queries_per_doc;
  // Timing-study mode: questions sampled per session.
  int timing_questions = 15;
  // Answer log; empty disables logging.
  std::string log_path;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

class AnnotationService {
 public:
  // The corpus must outlive the service. Candidate spans come from the gold
  // mentions (plus distractors), so every document needs clusters.
  AnnotationService(const Corpus &corpus, std::shared_ptr<const Scorer> scorer,
                    ServiceOptions options);
  ~AnnotationService();

  AnnotationService(const AnnotationService &) = delete;
  AnnotationService &operator=(const AnnotationService &) = delete;

  // Body (all optional): {"doc_ids": [...], "protocol": "pairwise"|"discrete"}.
  ServiceResponse CreateSession(const nlohmann::json &body);
  ServiceResponse Next(const std::string &session_id);
  ServiceResponse SubmitAnswer(const std::string &session_id,
                               const nlohmann::json &body);
  ServiceResponse Progress(const std::string &session_id);

  // Re-applies an answer log; returns the number of answers replayed.
  size_t Replay(const std::filesystem::path &log);

  // Routes the endpoints on `server`.
  void Register(httplib::Server *server);

 private:
  struct Session;

  std::shared_ptr<Session> Find(const std::string &id);
  std::shared_ptr<Session> MakeSession(const std::string &id,
                                       std::vector<size_t> docs,
                                       Protocol protocol);
  void Append(const nlohmann::json &line);
  // Requires the session lock.
  std::optional<Query> EnsureQuery(Session &s);
  bool Advance(Session &s);
  ServiceResponse Apply(Session &s, const AnswerRecord &record, bool log);

  const Corpus &corpus_;
  std::shared_ptr<const Scorer> scorer_;
  ServiceOptions options_;
  std::map<std::string, size_t> doc_index_;

  std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  int next_session_ = 1;

  std::mutex log_mu_;
  std::FILE *log_ = nullptr;
};

// Blocks serving on host:port until the process is stopped.
bool ServeForever(AnnotationService *service, const std::string &host, int port);

}  // namespace corefal

#endif  // COREFAL_SERVICE_H_
