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

#include "corefal/closure_bench.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>

#include "corefal/random.h"
#include "corefal/synthetic.h"

namespace corefal {
namespace {

using Clock = std::chrono::steady_clock;

double Millis(Clock::duration d) {
  return std::chrono::duration<double, std::milli>(d).count();
}

double Median(std::vector<double> v) {
  if (v.empty()) return 0;
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return (lo + hi) / 2;
}

}  // namespace

std::vector<LinkOp> SimulatedInsertions(const CorpusDocument &doc, int n,
                                        int max_antecedents, uint64_t seed) {
  const std::vector<Span> spans = CandidateSpans(doc);
  std::map<Span, int> cluster_of;
  std::vector<Span> first;
  for (const Cluster &c : doc.clusters.value_or(Clustering{})) {
    for (const Span &s : c) cluster_of[s] = static_cast<int>(first.size());
    first.push_back(*std::min_element(c.begin(), c.end()));
  }

  std::vector<size_t> order;
  for (size_t i = 1; i < spans.size(); ++i) order.push_back(i);
  Rng rng(seed);
  rng.Shuffle(std::span<size_t>(order));

  std::vector<LinkOp> ops;
  for (size_t i : order) {
    if (static_cast<int>(ops.size()) >= n) break;
    const Span &m = spans[i];
    const CandidateSet cands = AntecedentCandidates(spans, i, max_antecedents);
    auto it = cluster_of.find(m);
    std::vector<size_t> gold;
    for (size_t a : cands.antecedents) {
      auto ia = cluster_of.find(spans[a]);
      if (it != cluster_of.end() && ia != cluster_of.end() &&
          ia->second == it->second) {
        gold.push_back(a);
      }
    }
    size_t proposed;
    if (!gold.empty() && rng.Bernoulli(0.5)) {
      proposed = gold[rng.Index(gold.size())];
    } else {
      proposed = cands.antecedents[rng.Index(cands.antecedents.size())];
    }
    const Span &a = spans[proposed];
    if (std::find(gold.begin(), gold.end(), proposed) != gold.end()) {
      ops.push_back({LinkKind::kMustLink, a, m});
      continue;
    }
    ops.push_back({LinkKind::kCannotLink, a, m});
    if (it != cluster_of.end() && first[it->second] != m &&
        static_cast<int>(ops.size()) < n) {
      ops.push_back({LinkKind::kMustLink, first[it->second], m});
    }
  }
  return ops;
}

ClosureBenchResult TimeInsertions(std::span<const LinkOp> ops,
                                  int incremental_repeats) {
  ClosureBenchResult result;
  LinkStore incremental;
  ReferenceStore reference;
  std::vector<double> samples;
  for (size_t k = 0; k < ops.size(); ++k) {
    const LinkOp &op = ops[k];
    ClosureBenchRow row;
    row.insertion = static_cast<int>(k + 1);

    samples.clear();
    for (int r = 0; r < incremental_repeats; ++r) {
      std::unique_ptr<ConstraintStore> copy = incremental.Clone();
      const auto t0 = Clock::now();
      copy->Add(op);
      samples.push_back(Millis(Clock::now() - t0));
    }
    const auto t0 = Clock::now();
    incremental.Add(op);
    samples.push_back(Millis(Clock::now() - t0));
    row.incremental_ms = Median(samples);

    const auto t1 = Clock::now();
    reference.Add(op);
    row.recompute_ms = Millis(Clock::now() - t1);
    result.rows.push_back(row);
  }

  const size_t window =
      std::min(ClosureBenchResult::kFinalWindow, result.rows.size());
  std::vector<double> inc, rec;
  for (size_t k = result.rows.size() - window; k < result.rows.size(); ++k) {
    inc.push_back(result.rows[k].incremental_ms);
    rec.push_back(result.rows[k].recompute_ms);
  }
  const double denom = Median(inc);
  result.final_ratio = denom > 0 ? Median(rec) / denom : 0;
  return result;
}

ClosureBenchResult RunClosureBench(const ClosureBenchConfig &config) {
  if (config.insertions < 1) {
    throw std::invalid_argument("closure bench needs at least one insertion");
  }
  SyntheticConfig syn;
  syn.seed = config.seed;
  syn.id_prefix = "bench";
  const CorpusDocument doc = GenerateSyntheticDocument(
      syn, config.mentions, MixSeed(config.seed, 0xbe7c), "bench_0000");
  const std::vector<LinkOp> ops = SimulatedInsertions(
      doc, config.insertions, config.max_antecedents, config.seed);
  return TimeInsertions(ops, config.incremental_repeats);
}

std::vector<double> WindowedMedians(std::span<const double> values,
                                    size_t window) {
  std::vector<double> out;
  if (window == 0) return out;
  for (size_t start = 0; start < values.size(); start += window) {
    const size_t end = std::min(values.size(), start + window);
    out.push_back(Median({values.begin() + start, values.begin() + end}));
  }
  return out;
}

void WriteClosureBenchCsv(std::ostream &out, const ClosureBenchResult &result) {
  out << "insertion,incremental_ms,recompute_ms,ratio\n";
  char buf[128];
  for (const ClosureBenchRow &r : result.rows) {
    const double ratio = r.incremental_ms > 0 ? r.recompute_ms / r.incremental_ms : 0;
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.2f\n", r.insertion,
                  r.incremental_ms, r.recompute_ms, ratio);
    out << buf;
  }
}

}  // namespace corefal
