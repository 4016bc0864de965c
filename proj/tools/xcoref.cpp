// Copyright 2026 The xcoref Authors.
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

// xcoref command-line tool. Reports go to stdout as JSON, diagnostics to
// stderr. Exit status: 0 success, 1 validation error, 2 runtime error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xcoref/bench.hpp"
#include "xcoref/io.hpp"
#include "xcoref/synth.hpp"
#include "xcoref/topics.hpp"
#include "xcoref/trainer.hpp"

namespace {

using namespace xcoref;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Logging, filtered by COREF_LOG=error|info|debug (default info).

enum class Level { kError = 0, kInfo = 1, kDebug = 2 };
Level log_level = Level::kInfo;

void set_log_level() {
  const char* env = std::getenv("COREF_LOG");
  if (!env || !*env) return;
  const std::string v = env;
  if (v == "error") log_level = Level::kError;
  else if (v == "info") log_level = Level::kInfo;
  else if (v == "debug") log_level = Level::kDebug;
  else throw Error(ErrorCode::kInvalidArgument, "COREF_LOG must be error, info or debug");
}

void log(Level level, const std::string& msg) {
  if (level > log_level) return;
  static const char* names[] = {"error", "info", "debug"};
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << '\n';
}

int fail(std::string_view code, const std::string& message, int status) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
  return status;
}

void emit(const json& report, const std::string& path = {}) {
  std::cout << report.dump(2) << '\n';
  if (!path.empty()) {
    auto out = detail::open_out(path);
    out << report.dump(2) << '\n';
  }
}

MentionKind parse_mode(const std::string& s) {
  auto k = parse_kind(s);
  if (!k) throw Error(ErrorCode::kInvalidArgument, "mode must be entity or event");
  return *k;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// Entity clustering for event mode: the given file, or gold from `corpus`.
std::optional<Clustering> entity_clusters(const std::string& path, const Corpus* gold_source) {
  if (!path.empty()) return load_clustering_or_corpus(path, MentionKind::kEntity);
  if (gold_source) return gold_source->gold_clustering(MentionKind::kEntity);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string corpus, embeddings, dev_corpus, dev_embeddings, mode = "entity", config, out, log;
  std::string entity_clusters, dev_entity_clusters, topics, dev_topics;
  int epochs = 0, patience = 0, d_arg = 0, d_f = 0, k = 0, d_p = 0;
  double lr = 0;
  std::uint64_t seed = 0;
  bool no_arg_feature = false;
};

void add_train(CLI::App& app, TrainArgs& a, std::function<int()>& action) {
  auto* sub = app.add_subcommand("train", "Train a model with teacher forcing and dev early stopping");
  sub->add_option("--corpus", a.corpus, "Training corpus (JSONL)")->required();
  sub->add_option("--embeddings", a.embeddings, "Training embeddings (XEMB)")->required();
  sub->add_option("--dev-corpus", a.dev_corpus, "Dev corpus (JSONL)")->required();
  sub->add_option("--dev-embeddings", a.dev_embeddings, "Dev embeddings (XEMB)")->required();
  auto* mode = sub->add_option("--mode", a.mode, "entity or event");
  sub->add_option("--config", a.config, "JSON file overriding Config defaults");
  sub->add_option("--out", a.out, "Checkpoint path")->required();
  sub->add_option("--log", a.log, "Per-epoch log (JSONL)");
  sub->add_option("--entity-clusters", a.entity_clusters, "Event mode: training entity clusters");
  sub->add_option("--dev-entity-clusters", a.dev_entity_clusters, "Event mode: dev entity clusters");
  sub->add_option("--topics", a.topics, "Training topics (JSONL); default topic_gold");
  sub->add_option("--dev-topics", a.dev_topics, "Dev topics (JSONL); default topic_gold");
  auto* epochs = sub->add_option("--epochs", a.epochs, "max_epochs");
  auto* patience = sub->add_option("--patience", a.patience, "Early-stopping patience");
  auto* lr = sub->add_option("--lr", a.lr, "Adam learning rate");
  auto* seed = sub->add_option("--seed", a.seed, "Initialization seed");
  auto* d_arg = sub->add_option("--d-arg", a.d_arg, "Argument LSTM hidden size");
  auto* d_f = sub->add_option("--d-f", a.d_f, "Argument feature size");
  auto* k = sub->add_option("--k", a.k, "Cosine perspectives");
  auto* d_p = sub->add_option("--d-p", a.d_p, "Perspective size");
  auto* no_arg = sub->add_flag("--no-arg-feature", a.no_arg_feature, "Zero the argument feature");

  action = [&a, mode, epochs, patience, lr, seed, d_arg, d_f, k, d_p, no_arg]() -> int {
    // Mode defaults, then the config file, then flags.
    Config c = Config::for_mode(parse_mode(a.mode));
    if (!a.config.empty()) c = load_config(a.config, c);
    if (mode->count()) c.mode = parse_mode(a.mode);
    if (epochs->count()) c.max_epochs = a.epochs;
    if (patience->count()) c.patience = a.patience;
    if (lr->count()) c.learning_rate = a.lr;
    if (seed->count()) c.seed = a.seed;
    if (d_arg->count()) c.d_arg = a.d_arg;
    if (d_f->count()) c.d_f = a.d_f;
    if (k->count()) c.k = a.k;
    if (d_p->count()) c.d_p = a.d_p;
    if (no_arg->count()) c.use_arg_feature = false;

    const auto train_corpus = load_corpus(a.corpus, c.mode);
    const auto dev_corpus = load_corpus(a.dev_corpus, c.mode);
    const auto train_emb = load_embeddings(a.embeddings, train_corpus);
    const auto dev_emb = load_embeddings(a.dev_embeddings, dev_corpus, train_emb.dim());
    c.d_tok = train_emb.dim();
    c.validate();

    EngineOptions to, dop;
    to.kind = dop.kind = c.mode;
    if (!a.topics.empty()) to.topics = load_topics(a.topics);
    if (!a.dev_topics.empty()) dop.topics = load_topics(a.dev_topics);
    std::optional<Clustering> train_ent, dev_ent;
    if (c.event_mode()) {
      train_ent = entity_clusters(a.entity_clusters, &train_corpus);
      dev_ent = entity_clusters(a.dev_entity_clusters, &dev_corpus);
      to.entity_clustering = &*train_ent;
      dop.entity_clustering = &*dev_ent;
    }
    log(Level::kInfo, "training " + std::string(kind_name(c.mode)) + " model on " +
                          std::to_string(train_corpus.documents().size()) + " documents, d_tok " +
                          std::to_string(c.d_tok));
    log(Level::kDebug, "config " + to_json(c).dump());

    std::optional<std::ofstream> log_out;
    if (!a.log.empty()) log_out = detail::open_out(a.log);
    const TrainData td{&train_corpus, &train_emb, to};
    const TrainData dd{&dev_corpus, &dev_emb, dop};
    const auto started = std::chrono::steady_clock::now();
    const auto result = train<float>(td, dd, c, [&](const EpochLog& e) {
      log(Level::kInfo, "epoch " + std::to_string(e.epoch) + " loss " + std::to_string(e.train_loss) +
                            " dev conll " + std::to_string(e.dev_conll_f1));
      if (log_out) *log_out << to_json(e).dump() << '\n';
    });
    save_checkpoint(a.out, result.params, c);
    log(Level::kInfo, "wrote " + a.out + " after " + std::to_string(seconds_since(started)) + "s");
    emit({{"best_epoch", result.best_epoch},
          {"best_dev_conll_f1", result.best_dev_f1},
          {"epochs_run", static_cast<int>(result.log.size()) - 1},
          {"untrained_dev_conll_f1", result.log.front().dev_conll_f1}});
    return 0;
  };
}

// ---------------------------------------------------------------------------
// infer

struct InferArgs {
  std::string corpus, embeddings, model, topics, entity_clusters, out, state_out;
  std::optional<std::uint64_t> shuffle;
};

void add_infer(CLI::App& app, InferArgs& a, std::function<int()>& action) {
  auto* sub = app.add_subcommand("infer", "Predict clusters for a corpus");
  sub->add_option("--corpus", a.corpus, "Corpus (JSONL)")->required();
  sub->add_option("--embeddings", a.embeddings, "Embeddings (XEMB)")->required();
  sub->add_option("--model", a.model, "Checkpoint")->required();
  sub->add_option("--topics", a.topics, "Topics (JSONL); default topic_gold");
  sub->add_option("--entity-clusters", a.entity_clusters, "Event mode: entity clusters (required)");
  sub->add_option("--out", a.out, "Predictions (JSONL)")->required();
  sub->add_option("--state-out", a.state_out, "Engine state for later streaming");
  sub->add_option("--shuffle-seed", a.shuffle, "Process documents in a seeded random order");

  action = [&a]() -> int {
    const auto [params, c] = load_checkpoint<float>(a.model);
    if (c.event_mode() && a.entity_clusters.empty()) {
      throw Error(ErrorCode::kMissingEntityClusters, "event mode needs --entity-clusters");
    }
    const auto corpus = load_corpus(a.corpus, c.mode);
    const auto emb = load_embeddings(a.embeddings, corpus, c.d_tok);
    EngineOptions o;
    o.kind = c.mode;
    o.shuffle_seed = a.shuffle;
    if (!a.topics.empty()) o.topics = load_topics(a.topics);
    std::optional<Clustering> ent;
    if (c.event_mode()) {
      ent = load_clustering_or_corpus(a.entity_clusters, MentionKind::kEntity);
      o.entity_clustering = &*ent;
    }
    const auto started = std::chrono::steady_clock::now();
    const auto state = run_corpus<float>(corpus, emb, params, c, o);
    log(Level::kInfo, "inference took " + std::to_string(seconds_since(started)) + "s");
    save_predictions(a.out, state.links);
    if (!a.state_out.empty()) save_state(a.state_out, state);
    emit({{"documents", state.doc_order.size()},
          {"mentions", state.trace.mentions()},
          {"clusters", state.clusters.size()},
          {"scorer_invocations", state.trace.scorer_invocations}});
    return 0;
  };
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string pred, gold, mode = "entity", out;
  bool exclude_singletons = false;
};

void add_eval(CLI::App& app, EvalArgs& a, std::function<int()>& action) {
  auto* sub = app.add_subcommand("eval", "Score predictions with MUC, B-cubed, CEAF-e and CoNLL F1");
  sub->add_option("--pred", a.pred, "Predictions or corpus (JSONL)")->required();
  sub->add_option("--gold", a.gold, "Gold corpus or clustering (JSONL)")->required();
  sub->add_option("--mode", a.mode, "entity or event");
  sub->add_flag("--exclude-singletons", a.exclude_singletons, "Drop singleton gold and predicted clusters");
  sub->add_option("--out", a.out, "Also write the report here");

  action = [&a]() -> int {
    const auto kind = parse_mode(a.mode);
    const auto pred = load_clustering_or_corpus(a.pred, kind);
    const auto gold = load_clustering_or_corpus(a.gold, kind);
    MetricOptions opt;
    opt.exclude_singletons = a.exclude_singletons;
    emit(to_json(evaluate_coref(pred, gold, opt)), a.out);
    return 0;
  };
}

// ---------------------------------------------------------------------------
// topics

struct TopicsArgs {
  std::string corpus, out, stopwords, mode = "entity";
  int k = 20, restarts = 10;
  std::uint64_t seed = 0;
};

void add_topics(CLI::App& app, TopicsArgs& a, std::function<int()>& action) {
  auto* sub = app.add_subcommand("topics", "Cluster documents into topics with TF-IDF k-means");
  sub->add_option("--corpus", a.corpus, "Corpus (JSONL)")->required();
  sub->add_option("--k", a.k, "Number of topics")->capture_default_str();
  sub->add_option("--seed", a.seed, "k-means seed")->capture_default_str();
  sub->add_option("--restarts", a.restarts, "Seeded restarts")->capture_default_str();
  sub->add_option("--stopwords", a.stopwords, "Stop-word list, one per line");
  sub->add_option("--mode", a.mode, "Corpus mode");
  sub->add_option("--out", a.out, "Topics (JSONL)")->required();

  action = [&a]() -> int {
    const auto corpus = load_corpus(a.corpus, parse_mode(a.mode));
    const auto stop = a.stopwords.empty() ? default_stopword_set() : load_stopwords(a.stopwords);
    const auto f = tfidf_features(corpus, stop);
    const auto topics = topic_clustering(f, a.k, a.seed, a.restarts);
    {
      auto out = detail::open_out(a.out);
      write_topics(out, topics);
    }
    json report = {{"documents", f.doc_ids.size()}, {"k", a.k}, {"vocabulary", f.vocabulary.size()}};
    const auto gold = gold_topics(corpus);
    if (gold.size() == corpus.documents().size()) report["quality"] = to_json(clustering_quality(topics, gold));
    emit(report);
    return 0;
  };
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string corpus, embeddings, model, report, topics, entity_clusters;
};

void add_bench(CLI::App& app, BenchArgs& a, std::function<int()>& action) {
  auto* sub = app.add_subcommand("bench", "Count scorer invocations against pairwise scoring");
  sub->add_option("--corpus", a.corpus, "Corpus with gold clusters (JSONL)")->required();
  sub->add_option("--embeddings", a.embeddings, "Embeddings (XEMB)")->required();
  sub->add_option("--model", a.model, "Checkpoint")->required();
  sub->add_option("--topics", a.topics, "Topics (JSONL); default topic_gold");
  sub->add_option("--entity-clusters", a.entity_clusters, "Event mode: entity clusters; default gold");
  sub->add_option("--report", a.report, "Report path")->required();

  action = [&a]() -> int {
    const auto [params, c] = load_checkpoint<float>(a.model);
    const auto corpus = load_corpus(a.corpus, c.mode);
    const auto emb = load_embeddings(a.embeddings, corpus, c.d_tok);
    EngineOptions o;
    o.kind = c.mode;
    o.teacher_forced = true;
    if (!a.topics.empty()) o.topics = load_topics(a.topics);
    std::optional<Clustering> ent;
    if (c.event_mode()) {
      ent = entity_clusters(a.entity_clusters, &corpus);
      o.entity_clustering = &*ent;
    }
    const auto gold = corpus.gold_clustering(c.mode);
    const auto started = std::chrono::steady_clock::now();
    const auto state = run_corpus<float>(corpus, emb, params, c, o);
    const double seq_seconds = seconds_since(started);
    const auto m = state.trace.mentions();
    const auto r = sequential_bound_check(state.trace, gold.num_clusters(), m, pairwise_count(corpus, o));
    json report = {{"m", m},
                   {"c", r.c},
                   {"sequential_invocations", r.invocations},
                   {"bound_cm", r.bound_cm},
                   {"bound_with_singleton", r.bound_with_s},
                   {"within_cm", r.within_cm},
                   {"pairwise_count", r.pairwise},
                   {"ratio", r.ratio}};
    log(Level::kInfo, "sequential run took " + std::to_string(seq_seconds) + "s");
    if (corpus.documents().size() > 1) {
      const auto order = order_documents(corpus);
      Corpus head(corpus.mode());
      for (std::size_t i = 0; i + 1 < order.size(); ++i) head.add_document(corpus.doc(order[i]));
      const auto& last = corpus.doc(order.back());
      const auto prefix = run_corpus<float>(head, emb, params, c, o);
      report["streaming"] = to_json(streaming_cost(prefix, last, emb.at(last.doc_id), params, c, o));
      report["streaming"]["doc_id"] = last.doc_id;
    }
    emit(report, a.report);
    return 0;
  };
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  SynthConfig sc;
  std::optional<std::uint64_t> sample_seed;
  std::string out_dir;
};

void add_gen(CLI::App& app, GenArgs& a, std::function<int()>& action) {
  auto* sub = app.add_subcommand("gen", "Generate a synthetic corpus with embeddings");
  auto& sc = a.sc;
  sub->add_option("--n-topics", sc.n_topics)->capture_default_str();
  sub->add_option("--docs-per-topic", sc.docs_per_topic)->capture_default_str();
  sub->add_option("--clusters-per-topic", sc.clusters_per_topic)->capture_default_str();
  sub->add_option("--mentions-per-doc", sc.mentions_per_doc)->capture_default_str();
  sub->add_option("--d-tok", sc.d_tok)->capture_default_str();
  sub->add_option("--separation", sc.separation)->capture_default_str();
  sub->add_flag("--event", sc.event_mode, "Event mentions with entity arguments");
  sub->add_option("--args-per-event", sc.args_per_event)->capture_default_str();
  sub->add_option("--arg-separation", sc.arg_separation)->capture_default_str();
  sub->add_option("--arg-noise", sc.arg_noise)->capture_default_str();
  sub->add_option("--vocab-per-topic", sc.vocab_per_topic)->capture_default_str();
  sub->add_option("--seed", sc.seed, "World seed")->capture_default_str();
  sub->add_option("--sample-seed", a.sample_seed, "Fresh documents from the same world");
  sub->add_option("--out-dir", a.out_dir, "Output directory")->required();

  action = [&a]() -> int {
    a.sc.sample_seed = a.sample_seed;
    const auto s = generate_synthetic(a.sc);
    std::error_code ec;
    std::filesystem::create_directories(a.out_dir, ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot create '" + a.out_dir + "': " + ec.message());
    const auto dir = std::filesystem::path(a.out_dir);
    {
      auto out = detail::open_out((dir / "corpus.jsonl").string());
      write_corpus(out, s.corpus);
    }
    save_embeddings((dir / "embeddings.xemb").string(), s.embeddings);
    {
      auto out = detail::open_out((dir / "topics.jsonl").string());
      write_topics(out, s.topics);
    }
    if (a.sc.event_mode) {
      auto out = detail::open_out((dir / "entity_clusters.jsonl").string());
      write_clustering(out, s.entity_gold);
    }
    emit({{"documents", s.corpus.documents().size()},
          {"mentions", s.gold.size()},
          {"clusters", s.gold.num_clusters()},
          {"mode", kind_name(s.corpus.mode())}});
    return 0;
  };
}

// ---------------------------------------------------------------------------
// stream

struct StreamArgs {
  std::string state, doc, embeddings, model, out, state_out, topic, entity_clusters;
};

void add_stream(CLI::App& app, StreamArgs& a, std::function<int()>& action) {
  auto* sub = app.add_subcommand("stream", "Add new documents to a saved engine state");
  sub->add_option("--state", a.state, "Engine state from infer --state-out")->required();
  sub->add_option("--doc", a.doc, "New document(s) (JSONL)")->required();
  sub->add_option("--embeddings", a.embeddings, "Embeddings of the new documents (XEMB)")->required();
  sub->add_option("--model", a.model, "Checkpoint")->required();
  sub->add_option("--topic", a.topic, "Topic for the new documents; default topic_gold");
  sub->add_option("--entity-clusters", a.entity_clusters, "Event mode: entity clusters (required)");
  sub->add_option("--out", a.out, "Predictions for the new mentions (JSONL)")->required();
  sub->add_option("--state-out", a.state_out, "Updated engine state");

  action = [&a]() -> int {
    const auto [params, c] = load_checkpoint<float>(a.model);
    if (c.event_mode() && a.entity_clusters.empty()) {
      throw Error(ErrorCode::kMissingEntityClusters, "event mode needs --entity-clusters");
    }
    auto state = load_state<float>(a.state);
    if (state.kind != c.mode) throw Error(ErrorCode::kInvalidArgument, "state and model modes differ");
    const auto docs = load_corpus(a.doc, c.mode);
    const auto emb = load_embeddings(a.embeddings, docs, c.d_tok);
    EngineOptions o;
    o.kind = c.mode;
    std::optional<Clustering> ent;
    if (c.event_mode()) {
      ent = load_clustering_or_corpus(a.entity_clusters, MentionKind::kEntity);
      o.entity_clustering = &*ent;
    }
    std::vector<LinkRecord> links;
    const auto before = state.trace.scorer_invocations;
    for (std::size_t i : order_documents(docs)) {
      const auto& d = docs.doc(i);
      if (!a.topic.empty()) o.topics[d.doc_id] = a.topic;
      auto added = stream_add_document(state, d, emb.at(d.doc_id), params, c, o);
      links.insert(links.end(), added.begin(), added.end());
    }
    save_predictions(a.out, links);
    if (!a.state_out.empty()) save_state(a.state_out, state);
    emit({{"documents", docs.documents().size()},
          {"new_mentions", links.size()},
          {"clusters", state.clusters.size()},
          {"scorer_invocations", state.trace.scorer_invocations - before}});
    return 0;
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming cross-document coreference"};
  app.require_subcommand(1);
  std::function<int()> action;

  TrainArgs train_args;
  InferArgs infer_args;
  EvalArgs eval_args;
  TopicsArgs topics_args;
  BenchArgs bench_args;
  GenArgs gen_args;
  StreamArgs stream_args;
  std::function<int()> train_fn, infer_fn, eval_fn, topics_fn, bench_fn, gen_fn, stream_fn;
  add_train(app, train_args, train_fn);
  add_infer(app, infer_args, infer_fn);
  add_eval(app, eval_args, eval_fn);
  add_topics(app, topics_args, topics_fn);
  add_bench(app, bench_args, bench_fn);
  add_gen(app, gen_args, gen_fn);
  add_stream(app, stream_args, stream_fn);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("InvalidArgument", e.what(), 1);
  }

  const std::string name = app.get_subcommands().front()->get_name();
  const std::map<std::string, std::function<int()>*> actions = {
      {"train", &train_fn}, {"infer", &infer_fn}, {"eval", &eval_fn},  {"topics", &topics_fn},
      {"bench", &bench_fn}, {"gen", &gen_fn},     {"stream", &stream_fn}};
  try {
    set_log_level();
    return (*actions.at(name))();
  } catch (const Error& e) {
    const bool runtime = e.code() == ErrorCode::kIoError || e.code() == ErrorCode::kBoundViolation;
    return fail(error_name(e.code()), e.detail(), runtime ? 2 : 1);
  } catch (const std::exception& e) {
    return fail("Internal", e.what(), 2);
  }
}
