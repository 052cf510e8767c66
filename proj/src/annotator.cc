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

#include "corefal/annotator.h"

#include <chrono>
#include <cstdio>
#include <ctime>

namespace corefal {

using nlohmann::json;

const char *ToString(Protocol p) {
  return p == Protocol::kPairwise ? "pairwise" : "discrete";
}

const char *ToString(Verdict v) {
  return v == Verdict::kCoreferent ? "coreferent" : "not_coreferent";
}

const char *ToString(FollowupKind k) {
  switch (k) {
    case FollowupKind::kNotAsked:
      return "not_asked";
    case FollowupKind::kFirstAntecedent:
      return "first_antecedent";
    case FollowupKind::kAbstainInvalidMention:
      return "abstain_invalid_mention";
    case FollowupKind::kAbstainNoAntecedent:
      return "abstain_no_antecedent";
  }
  return "unknown";
}

std::optional<Protocol> ProtocolFromString(std::string_view name) {
  if (name == "pairwise") return Protocol::kPairwise;
  if (name == "discrete") return Protocol::kDiscrete;
  return std::nullopt;
}

void ValidateAnswer(const Query &q, const Answer &a) {
  const bool asked = a.followup.kind != FollowupKind::kNotAsked;
  if (q.protocol == Protocol::kPairwise && asked) {
    throw AnnotationError("pairwise answers carry no follow-up");
  }
  if (q.protocol == Protocol::kDiscrete) {
    if (a.verdict == Verdict::kCoreferent && asked) {
      throw AnnotationError("coreferent answers carry no follow-up");
    }
    if (a.verdict == Verdict::kNotCoreferent && !asked) {
      throw AnnotationError("a not-coreferent discrete answer needs a follow-up");
    }
  }
  if (a.followup.kind == FollowupKind::kFirstAntecedent) {
    const Span &s = a.followup.span;
    if (s.start < 0 || s.end < s.start) {
      throw AnnotationError("malformed antecedent span " + ToString(s));
    }
    if (!(s < q.target)) {
      throw AnnotationError("antecedent " + ToString(s) +
                            " does not precede " + ToString(q.target));
    }
  }
  for (const auto &t : {a.initial_seconds, a.followup_seconds}) {
    if (t && *t < 0) throw AnnotationError("negative duration");
  }
}

GoldAnnotator::GoldAnnotator(const Clustering &gold) {
  for (size_t c = 0; c < gold.size(); ++c) {
    if (gold[c].empty()) continue;
    Span first = gold[c].front();
    for (const Span &s : gold[c]) {
      cluster_of_[s] = static_cast<int>(first_mention_.size());
      first = std::min(first, s);
    }
    first_mention_.push_back(first);
  }
}

Verdict GoldAnnotator::AnswerPairwise(const Span &m, const Span &a) const {
  auto im = cluster_of_.find(m);
  auto ia = cluster_of_.find(a);
  if (im == cluster_of_.end() || ia == cluster_of_.end()) {
    return Verdict::kNotCoreferent;
  }
  return im->second == ia->second ? Verdict::kCoreferent
                                  : Verdict::kNotCoreferent;
}

Followup GoldAnnotator::AnswerFollowup(const Span &m) const {
  auto it = cluster_of_.find(m);
  if (it == cluster_of_.end()) return {FollowupKind::kAbstainInvalidMention, {}};
  const Span &first = first_mention_[it->second];
  if (first == m) return {FollowupKind::kAbstainNoAntecedent, {}};
  return {FollowupKind::kFirstAntecedent, first};
}

Answer GoldAnnotator::AnswerQuery(const Query &q) const {
  Answer a;
  a.verdict = AnswerPairwise(q.target, q.proposed);
  if (q.protocol == Protocol::kDiscrete && a.verdict == Verdict::kNotCoreferent) {
    a.followup = AnswerFollowup(q.target);
  }
  return a;
}

ApplyResult ApplyAnswer(const Query &q, const Answer &a, DocumentState *state) {
  ValidateAnswer(q, a);
  auto index_of = [&](const Span &s, const char *what) {
    auto idx = state->IndexOf(s);
    if (!idx) {
      throw AnnotationError(std::string(what) + " " + ToString(s) +
                            " is not a candidate mention of " +
                            state->doc_id());
    }
    return *idx;
  };
  const size_t m = index_of(q.target, "target");
  const size_t a_idx = index_of(q.proposed, "proposed antecedent");
  if (!(q.proposed < q.target)) {
    throw AnnotationError("proposed antecedent must precede the target");
  }
  std::optional<size_t> hat;
  if (a.followup.kind == FollowupKind::kFirstAntecedent) {
    hat = index_of(a.followup.span, "antecedent");
  }

  ConstraintStore &links = state->mutable_links();
  ApplyResult result;
  auto add = [&](LinkKind kind, const Span &x, const Span &y) {
    const LinkUpdate u = links.Add({kind, x, y});
    if (u.conflict()) {
      result.conflicts.push_back(
          std::string(kind == LinkKind::kMustLink ? "ml" : "cl") + "(" +
          ToString(x) + ", " + ToString(y) + ") contradicts earlier answers");
    }
    return !u.conflict();
  };

  if (a.verdict == Verdict::kCoreferent) {
    if (add(LinkKind::kMustLink, q.proposed, q.target)) {
      state->FixLabel(m, static_cast<int>(a_idx));
    }
  } else {
    add(LinkKind::kCannotLink, q.proposed, q.target);
    switch (a.followup.kind) {
      case FollowupKind::kFirstAntecedent:
        if (add(LinkKind::kMustLink, a.followup.span, q.target)) {
          state->FixLabel(m, static_cast<int>(*hat));
        }
        break;
      case FollowupKind::kAbstainNoAntecedent:
        links.MarkDiscourseNew(q.target);
        state->FixLabel(m, kNoAntecedent);
        break;
      case FollowupKind::kAbstainInvalidMention:
        state->Exclude(m);
        state->FixLabel(m, kNoAntecedent);
        break;
      case FollowupKind::kNotAsked:
        break;
    }
  }
  links.MarkQueried(q.target);
  state->Refresh();
  return result;
}

json AnswerToJson(const Answer &a) {
  json followup = {{"kind", ToString(a.followup.kind)}};
  if (a.followup.kind == FollowupKind::kFirstAntecedent) {
    followup["span"] = SpanToJson(a.followup.span);
  }
  json j = {{"verdict", ToString(a.verdict)}, {"followup", followup}};
  j["initial_seconds"] =
      a.initial_seconds ? json(*a.initial_seconds) : json(nullptr);
  j["followup_seconds"] =
      a.followup_seconds ? json(*a.followup_seconds) : json(nullptr);
  return j;
}

Answer AnswerFromJson(const json &j) {
  if (!j.is_object()) throw AnnotationError("answer must be an object");
  Answer a;
  const std::string verdict = j.at("verdict").get<std::string>();
  if (verdict == "coreferent") {
    a.verdict = Verdict::kCoreferent;
  } else if (verdict == "not_coreferent") {
    a.verdict = Verdict::kNotCoreferent;
  } else {
    throw AnnotationError("unknown verdict '" + verdict + "'");
  }
  if (j.contains("followup") && !j["followup"].is_null()) {
    const json &f = j["followup"];
    const std::string kind = f.at("kind").get<std::string>();
    if (kind == "not_asked") {
      a.followup.kind = FollowupKind::kNotAsked;
    } else if (kind == "first_antecedent") {
      a.followup.kind = FollowupKind::kFirstAntecedent;
      a.followup.span = SpanFromJson(f.at("span"));
    } else if (kind == "abstain_invalid_mention") {
      a.followup.kind = FollowupKind::kAbstainInvalidMention;
    } else if (kind == "abstain_no_antecedent") {
      a.followup.kind = FollowupKind::kAbstainNoAntecedent;
    } else {
      throw AnnotationError("unknown follow-up kind '" + kind + "'");
    }
  }
  auto seconds = [&](const char *key) -> std::optional<double> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_number()) {
      throw AnnotationError(std::string(key) + " must be a number");
    }
    return j[key].get<double>();
  };
  a.initial_seconds = seconds("initial_seconds");
  a.followup_seconds = seconds("followup_seconds");
  return a;
}

json ToJson(const AnswerRecord &r) {
  json j = AnswerToJson(r.answer);
  j["doc_id"] = r.query.doc_id;
  j["target"] = SpanToJson(r.query.target);
  j["proposed"] = SpanToJson(r.query.proposed);
  j["protocol"] = ToString(r.query.protocol);
  j["timestamp"] = r.timestamp;
  if (!r.session_id.empty()) j["session_id"] = r.session_id;
  return j;
}

AnswerRecord AnswerRecordFromJson(const json &j) {
  AnswerRecord r;
  r.answer = AnswerFromJson(j);
  r.query.doc_id = j.at("doc_id").get<std::string>();
  r.query.target = SpanFromJson(j.at("target"));
  r.query.proposed = SpanFromJson(j.at("proposed"));
  const auto protocol =
      ProtocolFromString(j.value("protocol", std::string("discrete")));
  if (!protocol) throw AnnotationError("unknown protocol");
  r.query.protocol = *protocol;
  r.timestamp = j.value("timestamp", std::string());
  r.session_id = j.value("session_id", std::string());
  return r;
}

std::string NowTimestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t secs = std::chrono::system_clock::to_time_t(now);
  const auto millis = std::chrono::duration_cast<std::chrono::milliseconds>(
                          now.time_since_epoch())
                          .count() %
                      1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof(out), "%s.%03dZ", buf, static_cast<int>(millis));
  return out;
}

}  // namespace corefal
