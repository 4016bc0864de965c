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

// Line-delimited JSON files exchanged between subcommands:
//
//   predictions  {mention_id, cluster_id, chosen_candidate_size, probability}
//   topics       {doc_id, topic_id}
//   train log    {epoch, train_loss, dev_conll_f1, stopped}
//
// plus the engine state snapshot used for streaming, and JSON reports.

#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xcoref/bench.hpp"
#include "xcoref/clustering.hpp"
#include "xcoref/corpus.hpp"
#include "xcoref/engine.hpp"
#include "xcoref/error.hpp"
#include "xcoref/metrics.hpp"
#include "xcoref/topics.hpp"
#include "xcoref/trainer.hpp"

namespace xcoref {

namespace detail {

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
  return out;
}

// Calls f(record, line number) for every non-blank line.
template <typename F>
void for_each_record(std::istream& in, F&& f) {
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord, "line " + std::to_string(n) + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::kMalformedRecord, "line " + std::to_string(n) + ": not an object");
    try {
      f(j, n);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(n) + ": " + e.detail());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord, "line " + std::to_string(n) + ": " + e.what());
    }
  }
}

// Cluster ids may be integers or strings.
inline std::string id_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw Error(ErrorCode::kMalformedRecord, "cluster id must be a string or integer");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Predictions

inline nlohmann::json to_json(const LinkRecord& r) {
  return {{"mention_id", r.mention_id},
          {"cluster_id", r.cluster_id},
          {"chosen_candidate_size", r.chosen_size},
          {"probability", r.probability}};
}

inline void write_predictions(std::ostream& out, const std::vector<LinkRecord>& links) {
  for (const auto& r : links) out << to_json(r).dump() << '\n';
}

inline void save_predictions(const std::string& path, const std::vector<LinkRecord>& links) {
  auto out = detail::open_out(path);
  write_predictions(out, links);
}

// Reads {mention_id, cluster_id} records (prediction or entity-cluster files).
inline Clustering read_clustering(std::istream& in) {
  Clustering out;
  std::map<std::string, int> ids;
  detail::for_each_record(in, [&](const nlohmann::json& j, int) {
    const std::string m = detail::string_field(j, "mention_id");
    const std::string c = detail::id_string(detail::field(j, "cluster_id"));
    if (out.contains(m)) throw Error(ErrorCode::kDuplicateMention, "mention '" + m + "' listed twice");
    out.assign(m, ids.emplace(c, static_cast<int>(ids.size())).first->second);
  });
  return out;
}

inline Clustering load_clustering(const std::string& path) {
  auto in = detail::open_in(path);
  return read_clustering(in);
}

inline void write_clustering(std::ostream& out, const Clustering& c) {
  for (const auto& [m, id] : c.labels()) {
    out << nlohmann::json{{"mention_id", m}, {"cluster_id", id}}.dump() << '\n';
  }
}

// A prediction file, or a corpus file whose gold_cluster fields are taken as
// the clustering of `kind` mentions.
inline Clustering load_clustering_or_corpus(const std::string& path, MentionKind kind) {
  std::string first;
  {
    auto in = detail::open_in(path);
    while (std::getline(in, first)) {
      if (first.find_first_not_of(" \t\r") != std::string::npos) break;
    }
  }
  bool corpus = false;
  try {
    corpus = nlohmann::json::parse(first).contains("doc_id");
  } catch (const nlohmann::json::exception&) {
  }
  if (corpus) return load_corpus(path, kind).gold_clustering(kind);
  return load_clustering(path);
}

// ---------------------------------------------------------------------------
// Topics

inline void write_topics(std::ostream& out, const Clustering& topics) {
  for (const auto& [doc, id] : topics.labels()) {
    out << nlohmann::json{{"doc_id", doc}, {"topic_id", id}}.dump() << '\n';
  }
}

inline std::map<std::string, std::string> read_topics(std::istream& in) {
  std::map<std::string, std::string> out;
  detail::for_each_record(in, [&](const nlohmann::json& j, int) {
    const std::string doc = detail::string_field(j, "doc_id");
    if (out.count(doc)) throw Error(ErrorCode::kDuplicateDocId, "document '" + doc + "' listed twice");
    out[doc] = detail::id_string(detail::field(j, "topic_id"));
  });
  return out;
}

inline std::map<std::string, std::string> load_topics(const std::string& path) {
  auto in = detail::open_in(path);
  return read_topics(in);
}

inline Clustering topics_as_clustering(const std::map<std::string, std::string>& topics) {
  Clustering out;
  std::map<std::string, int> ids;
  for (const auto& [doc, t] : topics) out.assign(doc, ids.emplace(t, static_cast<int>(ids.size())).first->second);
  return out;
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json to_json(const EpochLog& e) {
  return {{"epoch", e.epoch},
          {"train_loss", e.train_loss},
          {"dev_conll_f1", e.dev_conll_f1},
          {"stopped", e.stopped}};
}

inline nlohmann::json to_json(const ScoreTriple& s) {
  nlohmann::json j = {{"p", s.precision}, {"r", s.recall}, {"f1", s.f1}};
  if (!s.defined) j["defined"] = false;
  return j;
}

inline nlohmann::json to_json(const CorefReport& r) {
  return {{"muc", to_json(r.muc)},
          {"b3", to_json(r.b_cubed)},
          {"ceaf_e", to_json(r.ceaf_e)},
          {"conll", r.conll}};
}

inline nlohmann::json to_json(const ClusteringQuality& q) {
  return {{"homogeneity", q.homogeneity},
          {"completeness", q.completeness},
          {"v_measure", q.v_measure},
          {"ari", q.ari}};
}

inline nlohmann::json to_json(const StreamingCost& s) {
  return {{"m", s.m},         {"c", s.c},         {"new_mentions", s.new_mentions},
          {"ours", s.ours},   {"bound", s.bound}, {"pairwise", s.pairwise}};
}

// ---------------------------------------------------------------------------
// Engine state

template <typename T>
nlohmann::json state_to_json(const EngineState<T>& s) {
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : s.clusters.clusters()) {
    std::vector<double> sum(c.sum.data(), c.sum.data() + c.sum.size());
    clusters.push_back(
        {{"id", c.id}, {"members", c.members}, {"topics", c.topics}, {"count", c.count}, {"sum", sum}});
  }
  nlohmann::json fillers = nlohmann::json::object();
  for (const auto& [m, f] : s.fillers) {
    nlohmann::json roles = nlohmann::json::array();
    for (const auto& ids : f.clusters) roles.push_back(ids);
    fillers[m] = roles;
  }
  return {{"format", "xcoref-state-1"},
          {"kind", std::string(kind_name(s.kind))},
          {"teacher_forced", s.teacher_forced},
          {"doc_order", s.doc_order},
          {"doc_topic", s.doc_topic},
          {"clusters", clusters},
          {"fillers", fillers},
          {"gold_to_cluster", s.gold_to_cluster},
          {"candidate_counts", s.trace.candidate_counts}};
}

template <typename T>
EngineState<T> state_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "xcoref-state-1") {
      throw Error(ErrorCode::kMalformedRecord, "unknown state format");
    }
    EngineState<T> s;
    auto kind = parse_kind(j.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::kMalformedRecord, "bad state kind");
    s.kind = *kind;
    s.teacher_forced = j.at("teacher_forced").get<bool>();
    s.doc_order = j.at("doc_order").get<std::vector<std::string>>();
    s.doc_topic = j.at("doc_topic").get<std::map<std::string, std::string>>();
    for (const auto& c : j.at("clusters")) {
      Cluster<T> cl;
      cl.id = c.at("id").get<int>();
      cl.members = c.at("members").get<std::vector<std::string>>();
      cl.topics = c.at("topics").get<std::vector<std::string>>();
      cl.count = c.at("count").get<int>();
      const auto sum = c.at("sum").get<std::vector<double>>();
      cl.sum = Vec<T>(static_cast<Eigen::Index>(sum.size()));
      for (std::size_t i = 0; i < sum.size(); ++i) cl.sum[static_cast<Eigen::Index>(i)] = static_cast<T>(sum[i]);
      s.clusters.restore(std::move(cl));
    }
    for (const auto& [m, roles] : j.at("fillers").items()) {
      RoleFillers f;
      if (roles.size() != static_cast<std::size_t>(kNumRoles)) {
        throw Error(ErrorCode::kMalformedRecord, "filler record of '" + m + "' needs 4 roles");
      }
      for (int r = 0; r < kNumRoles; ++r) {
        f.clusters[static_cast<std::size_t>(r)] =
            roles[static_cast<std::size_t>(r)].template get<std::vector<int>>();
      }
      s.fillers[m] = std::move(f);
    }
    s.gold_to_cluster = j.at("gold_to_cluster").get<std::unordered_map<std::string, int>>();
    for (auto n : j.at("candidate_counts").get<std::vector<std::uint32_t>>()) s.trace.record(n);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("engine state: ") + e.what());
  }
}

template <typename T>
void save_state(const std::string& path, const EngineState<T>& s) {
  auto out = detail::open_out(path);
  out << state_to_json(s).dump() << '\n';
}

template <typename T>
EngineState<T> load_state(const std::string& path) {
  auto in = detail::open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("engine state: ") + e.what());
  }
  return state_from_json<T>(j);
}

}  // namespace xcoref
