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

// corefal: simulation, benchmarking, scoring and the annotation service.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "corefal/active_learning.h"
#include "corefal/closure_bench.h"
#include "corefal/corpus.h"
#include "corefal/metrics.h"
#include "corefal/scorer.h"
#include "corefal/service.h"
#include "corefal/synthetic.h"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace corefal {
namespace {

json ReadJsonFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return json::parse(in);
}

void WriteText(const fs::path &path, const std::string &text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int Simulate(const std::string &config_path, const std::string &out_dir) {
  ExperimentConfig config;
  try {
    config = ExperimentConfigFromJson(ReadJsonFile(config_path));
  } catch (const ConfigError &e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return 2;
  } catch (const json::exception &e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return 2;
  }
  const Corpora corpora = LoadCorpora(config);
  RunResult run = RunActiveLearning(config.loop, corpora.train, corpora.dev);

  fs::create_directories(out_dir);
  std::ostringstream csv;
  WriteCurveCsvHeader(csv);
  WriteCurveCsv(csv, run);
  json report{{"experiment", ToJson(config)}, {"run", ToJson(run)}};
  if (config.fully_labelled_baseline) {
    const RunResult base = RunFullyLabelledBaseline(
        config.loop, corpora.train, corpora.dev,
        run.final_report().budget_seconds);
    WriteCurveCsv(csv, base);
    report["fully_labelled"] = ToJson(base);
  }
  WriteText(fs::path(out_dir) / "curve.csv", csv.str());
  WriteText(fs::path(out_dir) / "report.json", report.dump(2) + "\n");

  const RoundReport &last = run.final_report();
  std::printf("%s: %d rounds, %.1f s of annotation, final avg F1 %.4f\n",
              config.loop.run_id.c_str(), static_cast<int>(run.rounds.size()),
              last.budget_seconds, last.dev.avg_f1);
  return 0;
}

int ClosureBench(const ClosureBenchConfig &config, const std::string &csv_path) {
  const ClosureBenchResult result = RunClosureBench(config);
  if (csv_path.empty()) {
    WriteClosureBenchCsv(std::cout, result);
  } else {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write " + csv_path);
    WriteClosureBenchCsv(out, result);
  }
  const ClosureBenchRow &last = result.rows.back();
  std::fprintf(stderr,
               "insertion %d: incremental %.4f ms, recompute %.4f ms, "
               "ratio over last %zu rows %.1f\n",
               last.insertion, last.incremental_ms, last.recompute_ms,
               std::min(ClosureBenchResult::kFinalWindow, result.rows.size()),
               result.final_ratio);
  return 0;
}

// Clusterings keyed by doc_id from a JSONL file of documents (or bare
// {"doc_id", "clusters"} lines).
std::map<std::string, Clustering> ReadClusterings(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::map<std::string, Clustering> out;
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      out[j.at("doc_id").get<std::string>()] =
          ClusteringFromJson(j.value("clusters", json::array()));
    } catch (const std::exception &e) {
      throw ParseError(path + ": " + e.what(), n);
    }
  }
  return out;
}

void PrintTriple(const char *name, const ScoreTriple &t) {
  std::printf("%-8s %9.4f %9.4f %9.4f\n", name, t.precision, t.recall, t.f1);
}

int Eval(const std::string &gold_path, const std::string &pred_path,
         const std::string &csv_path) {
  const auto gold = ReadClusterings(gold_path);
  const auto pred = ReadClusterings(pred_path);
  std::vector<ClusteringPair> pairs;
  for (const auto &[id, clusters] : gold) {
    auto it = pred.find(id);
    pairs.push_back({clusters, it == pred.end() ? Clustering{} : it->second});
  }
  for (const auto &[id, clusters] : pred) {
    if (!gold.count(id)) {
      std::fprintf(stderr, "warning: %s has no gold clustering, skipped\n",
                   id.c_str());
    }
  }
  const CorefScores s = Evaluate(pairs);
  std::printf("%-8s %9s %9s %9s\n", "metric", "P", "R", "F1");
  PrintTriple("muc", s.muc);
  PrintTriple("b3", s.b_cubed);
  PrintTriple("ceafe", s.ceaf_e);
  PrintTriple("mention", s.mention);
  std::printf("%-8s %29.4f\n", "avg_f1", s.avg_f1);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write " + csv_path);
    out << "metric,precision,recall,f1\n";
    auto row = [&](const char *name, const ScoreTriple &t) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f\n", name, t.precision,
                    t.recall, t.f1);
      out << buf;
    };
    row("muc", s.muc);
    row("b3", s.b_cubed);
    row("ceafe", s.ceaf_e);
    row("mention", s.mention);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "avg,,,%.6f\n", s.avg_f1);
    out << buf;
  }
  return 0;
}

struct ServeArgs {
  std::string corpus;
  std::string host = "127.0.0.1";
  int port = 0;
  std::string mode = "live";
  std::string strategy = "clustered_entropy";
  std::string protocol = "discrete";
  std::string scorer = "mention_ranker";
  double noise = 0.3;
  int train_docs = 20;
  int max_antecedents = 20;
  int queries_per_doc = 0;
  int timing_questions = 15;
  uint64_t seed = 1;
  std::string log;
  std::string replay;
};

int Serve(const ServeArgs &args) {
  auto mode = ServiceModeFromString(args.mode);
  auto strategy = StrategyFromString(args.strategy);
  auto protocol = ProtocolFromString(args.protocol);
  if (!mode || !strategy || !protocol) {
    std::cerr << "unknown mode, strategy or protocol\n";
    return 2;
  }
  int port = args.port;
  if (port == 0) {
    const char *env = std::getenv("COREFAL_PORT");
    port = env ? std::atoi(env) : 8080;
  }
  const Corpus corpus = LoadJsonl(args.corpus);

  std::shared_ptr<Scorer> scorer;
  if (args.scorer == "oracle_noise") {
    scorer = std::make_shared<OracleNoiseScorer>(corpus, args.noise, args.seed);
  } else if (args.scorer == "mention_ranker") {
    MentionRanker::Options opts;
    opts.seed = args.seed;
    auto ranker = std::make_shared<MentionRanker>(opts);
    std::vector<TrainingDocument> train;
    for (int i = 0; i < args.train_docs && i < static_cast<int>(corpus.size());
         ++i) {
      const CorpusDocument &d = corpus[i];
      if (!d.clusters) continue;
      train.push_back({&d.doc, CandidateSpans(d, {0.0, args.seed}), *d.clusters});
    }
    if (!train.empty()) {
      TrainOptions topts;
      topts.max_antecedents = args.max_antecedents;
      topts.seed = args.seed;
      ranker->Train(train, topts);
    }
    scorer = ranker;
  } else {
    std::cerr << "unknown scorer " << args.scorer << "\n";
    return 2;
  }

  ServiceOptions options;
  options.mode = *mode;
  options.strategy = *strategy;
  options.protocol = *protocol;
  options.max_antecedents = args.max_antecedents;
  options.seed = args.seed;
  if (args.queries_per_doc > 0) options.queries_per_doc = args.queries_per_doc;
  options.timing_questions = args.timing_questions;
  options.log_path = args.log;
  // An existing log is replayed first; replayed lines are not re-appended.
  const bool resume = !args.log.empty() && fs::exists(args.log);
  AnnotationService service(corpus, scorer, options);
  if (!args.replay.empty() && args.replay != args.log) {
    std::fprintf(stderr, "replayed %zu answers\n", service.Replay(args.replay));
  }
  if (resume) {
    std::fprintf(stderr, "replayed %zu answers\n", service.Replay(args.log));
  }
  std::fprintf(stderr, "serving %zu documents on %s:%d (%s)\n", corpus.size(),
               args.host.c_str(), port, args.mode.c_str());
  return ServeForever(&service, args.host, port) ? 0 : 1;
}

}  // namespace
}  // namespace corefal

int main(int argc, char **argv) {
  using namespace corefal;
  CLI::App app{"Active-learning laboratory for coreference annotation"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  auto *simulate = app.add_subcommand("simulate", "Run a simulated active-learning experiment");
  simulate->add_option("config", config_path, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("-o,--out", out_dir, "Output directory for curve.csv and report.json");

  ClosureBenchConfig bench;
  std::string bench_csv;
  auto *closure = app.add_subcommand("closure-bench", "Time incremental closures against recomputation");
  closure->add_option("-n,--insertions", bench.insertions)->check(CLI::PositiveNumber);
  closure->add_option("--mentions", bench.mentions)->check(CLI::PositiveNumber);
  closure->add_option("-k,--max-antecedents", bench.max_antecedents)->check(CLI::PositiveNumber);
  closure->add_option("--repeats", bench.incremental_repeats)->check(CLI::NonNegativeNumber);
  closure->add_option("--seed", bench.seed);
  closure->add_option("--csv", bench_csv, "Write the table here instead of stdout");

  std::string gold_path, pred_path, eval_csv;
  auto *eval = app.add_subcommand("eval", "Score predicted clusterings against gold");
  eval->add_option("gold", gold_path)->required()->check(CLI::ExistingFile);
  eval->add_option("pred", pred_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--csv", eval_csv);

  ServeArgs serve_args;
  auto *serve = app.add_subcommand("serve", "Run the HTTP annotation service");
  serve->add_option("corpus", serve_args.corpus, "Corpus JSONL with gold mentions")
      ->required()
      ->check(CLI::ExistingFile);
  serve->add_option("--host", serve_args.host);
  serve->add_option("--port", serve_args.port, "Defaults to $COREFAL_PORT, then 8080");
  serve->add_option("--mode", serve_args.mode)->check(CLI::IsMember({"live", "timing_study"}));
  serve->add_option("--strategy", serve_args.strategy);
  serve->add_option("--protocol", serve_args.protocol)->check(CLI::IsMember({"pairwise", "discrete"}));
  serve->add_option("--scorer", serve_args.scorer)->check(CLI::IsMember({"mention_ranker", "oracle_noise"}));
  serve->add_option("--noise", serve_args.noise);
  serve->add_option("--train-docs", serve_args.train_docs);
  serve->add_option("-k,--max-antecedents", serve_args.max_antecedents);
  serve->add_option("--queries-per-doc", serve_args.queries_per_doc, "0 means unlimited");
  serve->add_option("--timing-questions", serve_args.timing_questions);
  serve->add_option("--seed", serve_args.seed);
  serve->add_option("--log", serve_args.log, "Append-only answer log (JSONL); replayed on start");
  serve->add_option("--replay", serve_args.replay, "Answer log to replay before serving");

  std::string conll_in, jsonl_out;
  auto *convert = app.add_subcommand("convert", "Convert CoNLL-2012 to JSONL");
  convert->add_option("input", conll_in)->required()->check(CLI::ExistingFile);
  convert->add_option("output", jsonl_out)->required();

  std::string syn_config, syn_out;
  int syn_docs = 0;
  uint64_t syn_seed = 0;
  auto *generate = app.add_subcommand("generate", "Write a synthetic corpus as JSONL");
  generate->add_option("output", syn_out)->required();
  generate->add_option("--config", syn_config, "Generator settings (JSON)")->check(CLI::ExistingFile);
  generate->add_option("--docs", syn_docs);
  generate->add_option("--seed", syn_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return Simulate(config_path, out_dir);
    if (*closure) return ClosureBench(bench, bench_csv);
    if (*eval) return Eval(gold_path, pred_path, eval_csv);
    if (*serve) return Serve(serve_args);
    if (*convert) {
      const Corpus corpus = IngestConll(conll_in);
      SaveJsonl(jsonl_out, corpus);
      std::fprintf(stderr, "%zu documents\n", corpus.size());
      return 0;
    }
    if (*generate) {
      SyntheticConfig config;
      if (!syn_config.empty()) {
        config = SyntheticConfigFromJson(ReadJsonFile(syn_config));
      }
      if (syn_docs > 0) config.num_docs = syn_docs;
      if (generate->count("--seed")) config.seed = syn_seed;
      SaveJsonl(syn_out, GenerateSyntheticCorpus(config));
      return 0;
    }
  } catch (const ConfigError &e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
