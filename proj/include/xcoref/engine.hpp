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

// Sequential cross-document resolution.
//
// Documents are visited in a fixed order. Each mention of the current
// document is scored against every existing cluster that has a member in a
// document of the same topic (the current document included) plus the
// singleton candidate, then linked to the argmax. Linking to the singleton
// opens a new cluster that later mentions can join.
//
// In teacher-forced mode the clustering follows the gold partition instead
// of the prediction, and every step records its distribution together with
// the gold candidate index.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "xcoref/cluster.hpp"
#include "xcoref/clustering.hpp"
#include "xcoref/config.hpp"
#include "xcoref/corpus.hpp"
#include "xcoref/embeddings.hpp"
#include "xcoref/encoder.hpp"
#include "xcoref/params.hpp"
#include "xcoref/scorer.hpp"

namespace xcoref {

struct ScoreTrace {
  std::uint64_t scorer_invocations = 0;
  std::vector<std::uint32_t> candidate_counts;  // one entry per processed mention
  std::chrono::nanoseconds wall_time{0};

  void record(std::size_t candidates) {
    scorer_invocations += candidates;
    candidate_counts.push_back(static_cast<std::uint32_t>(candidates));
  }

  std::uint64_t recomputed_invocations() const {
    return std::accumulate(candidate_counts.begin(), candidate_counts.end(), std::uint64_t{0});
  }

  std::size_t mentions() const { return candidate_counts.size(); }
};

struct LinkRecord {
  std::string mention_id;
  std::string doc_id;
  int cluster_id = 0;
  std::size_t num_candidates = 0;
  std::size_t chosen = 0;       // index into the candidate list; last = singleton
  std::size_t chosen_size = 0;  // members of the chosen candidate; 0 for the singleton
  double probability = 0.0;
};

template <typename T>
struct TrainingStep {
  std::string mention_id;
  LinkDistribution<T> dist;
  std::size_t gold = 0;
};

struct EngineOptions {
  MentionKind kind = MentionKind::kEntity;
  bool teacher_forced = false;
  // doc_id -> topic. Documents not listed fall back to topic_gold, then to
  // one shared topic.
  std::map<std::string, std::string> topics;
  // Required in event mode.
  const Clustering* entity_clustering = nullptr;
  // Document order: doc_id order unless a shuffle seed is given.
  std::optional<std::uint64_t> shuffle_seed;
  bool record_steps = false;
};

template <typename T>
struct EngineState {
  MentionKind kind = MentionKind::kEntity;
  bool teacher_forced = false;
  ClusterState<T> clusters;
  std::vector<std::string> doc_order;
  std::map<std::string, std::string> doc_topic;
  std::unordered_map<std::string, RoleFillers> fillers;  // event mode, per clustered mention
  std::unordered_map<std::string, int> gold_to_cluster;  // teacher-forced mode
  ScoreTrace trace;
  std::vector<LinkRecord> links;
  std::vector<TrainingStep<T>> steps;

  bool has_document(const std::string& doc_id) const { return doc_topic.count(doc_id) > 0; }
  Clustering clustering() const { return clusters.clustering(); }
};

// Default order is by doc_id; a seed gives a reproducible shuffle instead.
inline std::vector<std::size_t> order_documents(const Corpus& corpus,
                                                std::optional<std::uint64_t> shuffle_seed = {}) {
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return corpus.doc(a).doc_id < corpus.doc(b).doc_id;
  });
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }
  }
  return order;
}

inline std::string resolve_topic(const Document& doc, const EngineOptions& options) {
  if (auto it = options.topics.find(doc.doc_id); it != options.topics.end()) return it->second;
  if (doc.topic_gold) return *doc.topic_gold;
  return "";
}

// Candidate clusters for a mention of a document in `topic`, ascending ids.
// The singleton candidate is implied after the last entry.
template <typename T>
std::vector<int> candidate_set(const EngineState<T>& state, const std::string& topic) {
  return state.clusters.clusters_in_topic(topic);
}

// Index of the candidate holding x's gold antecedents, or candidates.size()
// (the singleton) when none does.
template <typename T>
std::size_t gold_label(const std::vector<int>& candidates, const std::optional<std::string>& gold,
                       const EngineState<T>& state) {
  if (!gold) throw Error(ErrorCode::kMissingGold, "teacher forcing needs gold clusters");
  auto it = state.gold_to_cluster.find(*gold);
  if (it == state.gold_to_cluster.end()) return candidates.size();
  auto pos = std::lower_bound(candidates.begin(), candidates.end(), it->second);
  if (pos == candidates.end() || *pos != it->second) return candidates.size();
  return static_cast<std::size_t>(pos - candidates.begin());
}

template <typename T>
class SequentialEngine {
 public:
  SequentialEngine(const ModelParams<T>& params, const Config& config, EngineOptions options)
      : params_(params), config_(config), options_(std::move(options)) {
    if (config_.event_mode() && !options_.entity_clustering) {
      throw Error(ErrorCode::kMissingEntityClusters,
                  "event coreference needs an entity clustering for argument features");
    }
  }

  const EngineOptions& options() const { return options_; }

  EngineState<T> initial_state() const {
    EngineState<T> s;
    s.kind = options_.kind;
    s.teacher_forced = options_.teacher_forced;
    return s;
  }

  // Resolves every mention of `kind` in doc against state.
  std::vector<LinkRecord> process_document(EngineState<T>& state, const Document& doc,
                                           const DocEmbeddings& emb) const {
    if (state.has_document(doc.doc_id)) {
      throw Error(ErrorCode::kDuplicateDocId, "document '" + doc.doc_id + "' already processed");
    }
    check_dim(static_cast<Eigen::Index>(emb.context.size()), config_.d_tok, "document context vector");
    const std::string topic = resolve_topic(doc, options_);
    state.doc_order.push_back(doc.doc_id);
    state.doc_topic[doc.doc_id] = topic;

    const auto inputs = document_inputs<T>(doc, emb, options_.kind);
    const Vec<T> context = singleton_candidate<T>(to_vec<T>(emb.context));
    std::vector<const Mention*> mentions;
    for (const auto& m : doc.mentions) {
      if (m.kind == options_.kind) mentions.push_back(&m);
    }

    std::vector<LinkRecord> out;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      out.push_back(process_mention(state, *mentions[i], inputs[i], context, doc.doc_id, topic));
    }
    return out;
  }

  LinkRecord process_mention(EngineState<T>& state, const Mention& mention,
                             const MentionInputs<T>& in, const Vec<T>& context,
                             const std::string& doc_id, const std::string& topic) const {
    const auto enc = encode_mention(in, params_);
    const Vec<T> h_c = contextualize(enc.h_x, context, params_);

    RoleFillers query_fillers;
    if (config_.event_mode()) query_fillers = role_fillers(mention, *options_.entity_clustering);

    const std::vector<int> cands = candidate_set(state, topic);
    std::vector<Vec<T>> features;
    features.reserve(cands.size() + 1);
    std::vector<const RoleFillers*> member_fillers;
    for (int id : cands) {
      const auto& cluster = state.clusters.cluster(id);
      Vec<T> f_r;
      if (config_.event_mode()) {
        member_fillers.clear();
        for (const auto& m : cluster.members) member_fillers.push_back(&state.fillers.at(m));
        f_r = argument_slot(argument_agreement(query_fillers, member_fillers));
      }
      features.push_back(
          candidate_features(enc.h_x, cluster.rep(), params_, config_.event_mode() ? &f_r : nullptr).h_f);
    }
    {
      Vec<T> f_r = Vec<T>::Zero(config_.d_f);
      features.push_back(
          candidate_features(enc.h_x, context, params_, config_.event_mode() ? &f_r : nullptr).h_f);
    }

    auto dist = score_candidates<T>(std::span<const Vec<T>>(features), params_);
    state.trace.record(features.size());
    const std::size_t predicted = predict_link(dist);

    LinkRecord rec;
    rec.mention_id = mention.mention_id;
    rec.doc_id = doc_id;
    rec.num_candidates = features.size();
    rec.chosen = predicted;
    rec.probability = static_cast<double>(dist.probs[static_cast<Eigen::Index>(predicted)]);
    rec.chosen_size = predicted < cands.size()
                          ? static_cast<std::size_t>(state.clusters.cluster(cands[predicted]).count)
                          : 0;

    if (state.teacher_forced) {
      const std::size_t gold = gold_label(cands, mention.gold_cluster, state);
      if (options_.record_steps) state.steps.push_back({mention.mention_id, dist, gold});
      auto it = state.gold_to_cluster.find(*mention.gold_cluster);
      if (it == state.gold_to_cluster.end()) {
        int id = state.clusters.new_cluster(h_c, mention.mention_id, topic);
        state.gold_to_cluster[*mention.gold_cluster] = id;
        rec.cluster_id = id;
      } else {
        state.clusters.add_member(it->second, h_c, mention.mention_id, topic);
        rec.cluster_id = it->second;
      }
    } else if (predicted == cands.size()) {
      rec.cluster_id = state.clusters.new_cluster(h_c, mention.mention_id, topic);
    } else {
      rec.cluster_id = cands[predicted];
      state.clusters.add_member(rec.cluster_id, h_c, mention.mention_id, topic);
    }
    if (config_.event_mode()) state.fillers[mention.mention_id] = std::move(query_fillers);
    state.links.push_back(rec);
    return rec;
  }

  EngineState<T> run(std::span<const Document* const> docs, const EmbeddingStore& store) const {
    auto state = initial_state();
    const auto started = std::chrono::steady_clock::now();
    for (const Document* d : docs) process_document(state, *d, store.at(d->doc_id));
    state.trace.wall_time = std::chrono::steady_clock::now() - started;
    return state;
  }

 private:
  Vec<T> argument_slot(const ArgAgreement& g) const {
    if (!config_.use_arg_feature) return Vec<T>::Zero(config_.d_f);
    return arg_coref_feature<T>(g, params_.f_emb);
  }

  const ModelParams<T>& params_;
  Config config_;
  EngineOptions options_;
};

template <typename T>
EngineState<T> run_corpus(const Corpus& corpus, const EmbeddingStore& store,
                          const ModelParams<T>& params, const Config& config,
                          const EngineOptions& options) {
  std::vector<const Document*> docs;
  for (std::size_t i : order_documents(corpus, options.shuffle_seed)) docs.push_back(&corpus.doc(i));
  SequentialEngine<T> engine(params, config, options);
  return engine.run(std::span<const Document* const>(docs), store);
}

// Adds one unseen document to a finished state. Existing clusters only gain
// members; the new mentions are compared with same-topic clusters only.
template <typename T>
std::vector<LinkRecord> stream_add_document(EngineState<T>& state, const Document& doc,
                                            const DocEmbeddings& emb, const ModelParams<T>& params,
                                            const Config& config, EngineOptions options) {
  options.kind = state.kind;
  options.teacher_forced = state.teacher_forced;
  SequentialEngine<T> engine(params, config, std::move(options));
  const auto started = std::chrono::steady_clock::now();
  auto links = engine.process_document(state, doc, emb);
  state.trace.wall_time += std::chrono::steady_clock::now() - started;
  return links;
}

}  // namespace xcoref
