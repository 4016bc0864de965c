// Fixtures shared by the unit tests and the acceptance runner.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "xcoref/bench.hpp"
#include "xcoref/synth.hpp"
#include "xcoref/trainer.hpp"

namespace xcoref::fixtures {

// d_tok 4, d_arg 3, d_f 2, k 2.
inline Config mini_config(MentionKind mode) {
  Config c = Config::for_mode(mode);
  c.d_tok = 4;
  c.d_arg = 3;
  c.d_f = 2;
  c.k = 2;
  c.d_p = 3;
  return c;
}

// One topic with two gold clusters, so every mention sees at most three
// candidates (two clusters and the singleton).
inline SynthCorpus mini_corpus(MentionKind mode, std::uint64_t seed = 3) {
  SynthConfig sc;
  sc.n_topics = 1;
  sc.docs_per_topic = 2;
  sc.clusters_per_topic = 2;
  sc.mentions_per_doc = 3;
  sc.d_tok = 4;
  sc.separation = 2.0;
  sc.event_mode = mode == MentionKind::kEvent;
  sc.arg_noise = 0.3;
  sc.seed = seed;
  return generate_synthetic(sc);
}

inline EngineOptions mini_options(const SynthCorpus& s, MentionKind mode) {
  EngineOptions o;
  o.kind = mode;
  o.teacher_forced = true;
  if (mode == MentionKind::kEvent) o.entity_clustering = &s.entity_gold;
  return o;
}

// Largest per-tensor relative error of the analytic gradient, in double.
inline double mini_gradient_error(MentionKind mode, std::string* worst = nullptr,
                                  std::size_t* max_candidates = nullptr) {
  const auto s = mini_corpus(mode);
  const Config c = mini_config(mode);
  const auto opt = mini_options(s, mode);
  const auto prepared = prepare_corpus<double>(s.corpus, s.embeddings, c, opt);
  auto params = init_params<double>(c, 11);
  // Agreement embeddings start small; widen them so f_r carries signal.
  params.f_emb *= 3.0;
  if (max_candidates) {
    auto fp = params.cast<float>();
    auto state = run_corpus<float>(s.corpus, s.embeddings, fp, c, opt);
    *max_candidates = *std::max_element(state.trace.candidate_counts.begin(),
                                        state.trace.candidate_counts.end());
  }
  double max_err = 0;
  for (const auto& r : gradient_check(prepared, c, params)) {
    if (r.rel_error >= max_err) {
      max_err = r.rel_error;
      if (worst) *worst = r.name;
    }
  }
  return max_err;
}

// Random new_cluster / add_member operations on a float state; returns the
// largest gap between a cluster representation and the mean of its members
// recomputed in double.
inline double composition_max_error(int ops, std::uint64_t seed, int dim = 16) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ClusterState<float> state;
  std::vector<std::vector<Vec<double>>> members;
  double worst = 0;
  for (int i = 0; i < ops; ++i) {
    Vec<double> v(dim);
    for (auto& x : v) x = std::tanh(3 * normal(rng));
    const std::string id = "m" + std::to_string(i);
    if (members.empty() || unit(rng) < 0.2) {
      state.new_cluster(v.cast<float>(), id);
      members.push_back({v});
    } else {
      const int c = static_cast<int>(rng() % members.size());
      state.add_member(c, v.cast<float>(), id);
      members[static_cast<std::size_t>(c)].push_back(v);
    }
    for (std::size_t c = 0; c < members.size(); ++c) {
      Vec<double> mean = Vec<double>::Zero(dim);
      for (const auto& m : members[c]) mean += m;
      mean /= static_cast<double>(members[c].size());
      const Vec<double> rep = state.cluster(static_cast<int>(c)).rep().cast<double>();
      worst = std::max(worst, (rep - mean).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

// The corpus without its last document in engine order, and that document.
inline std::pair<Corpus, const Document*> split_last(const Corpus& corpus) {
  const auto order = order_documents(corpus);
  Corpus head(corpus.mode());
  for (std::size_t i = 0; i + 1 < order.size(); ++i) head.add_document(corpus.doc(order[i]));
  return {std::move(head), &corpus.doc(order.back())};
}

// run_corpus over D + [d] against run_corpus(D) then stream_add_document(d).
inline bool streaming_equivalent(const SynthCorpus& s, const ModelParams<float>& params,
                                 const Config& config, const EngineOptions& options) {
  const auto full = run_corpus<float>(s.corpus, s.embeddings, params, config, options);
  auto [head, last] = split_last(s.corpus);
  auto state = run_corpus<float>(head, s.embeddings, params, config, options);
  stream_add_document(state, *last, s.embeddings.at(last->doc_id), params, config, options);
  return state.clustering() == full.clustering() && state.doc_order == full.doc_order &&
         state.trace.candidate_counts == full.trace.candidate_counts;
}

// Synthetic corpora for the equivalence checks: sizes, modes and separation
// vary with the index.
inline SynthCorpus varied_corpus(int i) {
  SynthConfig sc;
  sc.seed = 100 + static_cast<std::uint64_t>(i);
  sc.n_topics = 1 + i % 3;
  sc.docs_per_topic = 3 + i % 4;
  sc.clusters_per_topic = 2 + i % 5;
  sc.mentions_per_doc = 2 + i % 3;
  sc.d_tok = 4;
  sc.separation = 0.5 + i % 4;
  sc.event_mode = i % 4 == 3;
  return generate_synthetic(sc);
}

inline Config varied_config(const SynthCorpus& s) {
  Config c = Config::for_mode(s.corpus.mode());
  c.d_tok = s.embeddings.dim();
  c.d_arg = 3;
  c.d_f = 2;
  c.d_p = 3;
  return c;
}

inline EngineOptions varied_options(const SynthCorpus& s, bool teacher_forced) {
  EngineOptions o;
  o.kind = s.corpus.mode();
  o.teacher_forced = teacher_forced;
  if (o.kind == MentionKind::kEvent) o.entity_clustering = &s.entity_gold;
  return o;
}

}  // namespace xcoref::fixtures
