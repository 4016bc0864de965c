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

// Score-count accounting for the sequential engine against the pairwise
// model, and the head-lemma baseline.

#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>

#include "xcoref/clustering.hpp"
#include "xcoref/corpus.hpp"
#include "xcoref/engine.hpp"
#include "xcoref/error.hpp"
#include "xcoref/topics.hpp"

namespace xcoref {

// Pairs of same-topic mentions of `kind`.
inline std::uint64_t pairwise_count(const Corpus& corpus, const EngineOptions& options) {
  std::map<std::string, std::uint64_t> per_topic;
  for (const auto& d : corpus.documents()) {
    std::uint64_t m = 0;
    for (const auto& x : d.mentions) m += x.kind == options.kind;
    per_topic[resolve_topic(d, options)] += m;
  }
  std::uint64_t total = 0;
  for (const auto& [t, m] : per_topic) total += m * (m ? m - 1 : 0) / 2;
  return total;
}

struct BoundReport {
  std::uint64_t m = 0;
  std::uint64_t c = 0;
  std::uint64_t invocations = 0;
  std::uint64_t bound_cm = 0;       // c * m
  std::uint64_t bound_with_s = 0;   // (c + 1) * m
  std::uint64_t pairwise = 0;
  double ratio = 0.0;               // invocations / pairwise
  bool within_cm = false;
};

// Checks invocations <= (c + 1) m and that the per-step log sums to the
// live counter.
inline BoundReport sequential_bound_check(const ScoreTrace& trace, std::uint64_t c,
                                          std::uint64_t m, std::uint64_t pairwise) {
  BoundReport r;
  r.m = m;
  r.c = c;
  r.invocations = trace.scorer_invocations;
  r.bound_cm = c * m;
  r.bound_with_s = (c + 1) * m;
  r.pairwise = pairwise;
  r.ratio = pairwise ? static_cast<double>(r.invocations) / static_cast<double>(pairwise) : 0.0;
  r.within_cm = r.invocations <= r.bound_cm;
  if (trace.recomputed_invocations() != trace.scorer_invocations) {
    throw Error(ErrorCode::kBoundViolation, "per-step candidate log disagrees with the live counter");
  }
  if (r.invocations > r.bound_with_s) {
    throw Error(ErrorCode::kBoundViolation,
                std::to_string(r.invocations) + " scorer invocations exceed (c+1)m = " +
                    std::to_string(r.bound_with_s));
  }
  return r;
}

struct StreamingCost {
  std::uint64_t m = 0;          // mentions already in the state
  std::uint64_t c = 0;          // clusters already in the state
  std::uint64_t new_mentions = 0;
  std::uint64_t ours = 0;       // measured
  std::uint64_t bound = 0;      // (c + m') m' + m'
  std::uint64_t pairwise = 0;   // m m' + m'(m' - 1) / 2
};

inline StreamingCost streaming_cost_model(std::uint64_t m, std::uint64_t c, std::uint64_t m_new) {
  StreamingCost s;
  s.m = m;
  s.c = c;
  s.new_mentions = m_new;
  s.bound = (c + m_new) * m_new + m_new;
  s.pairwise = m * m_new + (m_new ? m_new * (m_new - 1) / 2 : 0);
  if (m_new == 0) s.bound = 0;
  return s;
}

// Adds doc to a copy of state and reports the scorer invocations it took.
template <typename T>
StreamingCost streaming_cost(const EngineState<T>& state, const Document& doc,
                             const DocEmbeddings& emb, const ModelParams<T>& params,
                             const Config& config, const EngineOptions& options) {
  EngineState<T> copy = state;
  const std::uint64_t before = copy.trace.scorer_invocations;
  const auto links = stream_add_document(copy, doc, emb, params, config, options);
  StreamingCost s = streaming_cost_model(state.trace.mentions(), state.clusters.size(), links.size());
  s.ours = copy.trace.scorer_invocations - before;
  if (s.ours > s.bound) {
    throw Error(ErrorCode::kBoundViolation,
                "streaming cost " + std::to_string(s.ours) + " exceeds " + std::to_string(s.bound));
  }
  return s;
}

using LemmaFn = std::function<std::string(const std::string&)>;

inline std::string identity_lemma(const std::string& word) { return lowercase(word); }

// Tab-separated "form<TAB>lemma" lines; forms are matched lowercased and
// unknown forms fall back to the lowercased word.
inline LemmaFn lemma_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open lemma table '" + path + "'");
  auto table = std::make_shared<std::unordered_map<std::string, std::string>>();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(ErrorCode::kMalformedRecord, "lemma line without tab: " + line);
    (*table)[lowercase(line.substr(0, tab))] = lowercase(line.substr(tab + 1));
  }
  return [table](const std::string& w) {
    const std::string k = lowercase(w);
    auto it = table->find(k);
    return it == table->end() ? k : it->second;
  };
}

// Mentions of `kind` grouped by (topic, lemma of the last span token).
inline Clustering lemma_baseline(const Corpus& corpus, const EngineOptions& options,
                                 const LemmaFn& lemma = identity_lemma) {
  std::map<std::pair<std::string, std::string>, int> ids;
  Clustering out;
  for (const auto& d : corpus.documents()) {
    const std::string topic = resolve_topic(d, options);
    for (const auto& m : d.mentions) {
      if (m.kind != options.kind) continue;
      const std::string head = lemma(d.tokens.at(static_cast<std::size_t>(m.end)));
      auto [it, fresh] = ids.emplace(std::make_pair(topic, head), static_cast<int>(ids.size()));
      out.assign(m.mention_id, it->second);
    }
  }
  return out;
}

}  // namespace xcoref
