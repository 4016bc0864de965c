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

// Teacher-forced training.
//
// Documents are replayed in engine order while the clustering follows gold.
// The loss of a document is the mean negative log-likelihood of the gold
// candidate over its mentions. Cluster representations are recomputed from
// their members under the current parameters, so gradients reach every
// member encoding that feeds a candidate. Parameters are updated with Adam
// after every document, after clipping the global gradient norm.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "xcoref/cluster.hpp"
#include "xcoref/config.hpp"
#include "xcoref/corpus.hpp"
#include "xcoref/embeddings.hpp"
#include "xcoref/encoder.hpp"
#include "xcoref/engine.hpp"
#include "xcoref/metrics.hpp"
#include "xcoref/params.hpp"
#include "xcoref/scorer.hpp"

namespace xcoref {

// -log softmax(logits)[gold], computed stably.
template <typename T>
T link_nll(const Vec<T>& logits, std::size_t gold) {
  const T top = logits.maxCoeff();
  const T lse = top + std::log((logits.array() - top).exp().sum());
  return lse - logits[static_cast<Eigen::Index>(gold)];
}

// Mean negative log-likelihood of the gold candidates.
template <typename T>
T document_loss(const std::vector<TrainingStep<T>>& steps) {
  if (steps.empty()) return T(0);
  T total = T(0);
  for (const auto& s : steps) total += link_nll(s.dist.logits, s.gold);
  return total / static_cast<T>(steps.size());
}

template <typename T>
T global_norm(const ModelParams<T>& g) {
  T sq = T(0);
  g.visit([&](const std::string&, const T* data, Eigen::Index rows, Eigen::Index cols) {
    for (Eigen::Index i = 0; i < rows * cols; ++i) sq += data[i] * data[i];
  });
  return std::sqrt(sq);
}

// Rescales g to norm max_norm when larger. Returns the norm before clipping.
template <typename T>
T clip_gradients(ModelParams<T>& g, T max_norm) {
  const T norm = global_norm(g);
  if (!std::isfinite(static_cast<double>(norm))) {
    throw Error(ErrorCode::kNonFiniteGradient, "gradient norm is not finite");
  }
  if (norm > max_norm && norm > T(0)) {
    const T scale = max_norm / norm;
    g.visit([&](const std::string&, T* data, Eigen::Index rows, Eigen::Index cols) {
      for (Eigen::Index i = 0; i < rows * cols; ++i) data[i] *= scale;
    });
  }
  return norm;
}

template <typename T>
class Adam {
 public:
  Adam(const ModelParams<T>& like, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : m_(like), v_(like), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.set_zero();
    v_.set_zero();
  }

  void step(ModelParams<T>& params, ModelParams<T>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    std::vector<T*> gs, ms, vs;
    std::vector<Eigen::Index> sizes;
    grad.visit([&](const std::string&, T* d, Eigen::Index r, Eigen::Index c) {
      gs.push_back(d);
      sizes.push_back(r * c);
    });
    m_.visit([&](const std::string&, T* d, Eigen::Index, Eigen::Index) { ms.push_back(d); });
    v_.visit([&](const std::string&, T* d, Eigen::Index, Eigen::Index) { vs.push_back(d); });
    std::size_t t = 0;
    params.visit([&](const std::string&, T* w, Eigen::Index, Eigen::Index) {
      for (Eigen::Index i = 0; i < sizes[t]; ++i) {
        const double g = static_cast<double>(gs[t][i]);
        double m = beta1_ * static_cast<double>(ms[t][i]) + (1 - beta1_) * g;
        double v = beta2_ * static_cast<double>(vs[t][i]) + (1 - beta2_) * g * g;
        ms[t][i] = static_cast<T>(m);
        vs[t][i] = static_cast<T>(v);
        w[i] -= static_cast<T>(lr_ * (m / c1) / (std::sqrt(v / c2) + eps_));
      }
      ++t;
    });
  }

  int steps() const { return t_; }

 private:
  ModelParams<T> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
};

// ---------------------------------------------------------------------------
// Prepared corpus

template <typename T>
struct PreparedMention {
  MentionInputs<T> inputs;
  std::optional<std::string> gold;
  RoleFillers fillers;
  std::size_t doc = 0;  // position in processing order
};

// Parameter-independent inputs of a corpus, in processing order.
template <typename T>
struct PreparedCorpus {
  std::vector<const Document*> docs;
  std::vector<Vec<T>> contexts;  // lifted to d_m
  std::vector<std::string> topics;
  std::vector<std::vector<std::size_t>> doc_mentions;
  std::vector<PreparedMention<T>> mentions;
  std::unordered_map<std::string, std::size_t> index;
};

template <typename T>
PreparedCorpus<T> prepare_corpus(const Corpus& corpus, const EmbeddingStore& store,
                                 const Config& config, const EngineOptions& options) {
  if (config.event_mode() && !options.entity_clustering) {
    throw Error(ErrorCode::kMissingEntityClusters,
                "event coreference needs an entity clustering for argument features");
  }
  PreparedCorpus<T> out;
  for (std::size_t i : order_documents(corpus, options.shuffle_seed)) {
    const Document& doc = corpus.doc(i);
    const DocEmbeddings& emb = store.at(doc.doc_id);
    check_dim(static_cast<Eigen::Index>(emb.context.size()), config.d_tok, "document context vector");
    const std::size_t pos = out.docs.size();
    out.docs.push_back(&doc);
    out.contexts.push_back(singleton_candidate<T>(to_vec<T>(emb.context)));
    out.topics.push_back(resolve_topic(doc, options));
    auto inputs = document_inputs<T>(doc, emb, options.kind);
    std::vector<std::size_t> ids;
    std::size_t j = 0;
    for (const auto& m : doc.mentions) {
      if (m.kind != options.kind) continue;
      PreparedMention<T> pm;
      pm.inputs = std::move(inputs[j++]);
      pm.gold = m.gold_cluster;
      if (config.event_mode()) pm.fillers = role_fillers(m, *options.entity_clustering);
      pm.doc = pos;
      out.index[m.mention_id] = out.mentions.size();
      ids.push_back(out.mentions.size());
      out.mentions.push_back(std::move(pm));
    }
    out.doc_mentions.push_back(std::move(ids));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Differentiable teacher-forced replay

// Walks a prepared corpus one document at a time. Between documents only
// cluster membership is kept; representations are rebuilt per document.
template <typename T>
class TeacherForcedReplay {
 public:
  TeacherForcedReplay(const PreparedCorpus<T>& corpus, const Config& config)
      : corpus_(corpus), config_(config) {}

  std::size_t position() const { return next_; }
  bool done() const { return next_ >= corpus_.docs.size(); }
  const Document& current() const { return *corpus_.docs[next_]; }

  // Loss of the current document under p, or nothing when it has no mentions
  // of the resolved kind. Adds the loss gradient into *grad when given.
  std::optional<T> evaluate(const ModelParams<T>& p, ModelParams<T>* grad) const {
    return run(p, grad, nullptr);
  }

  // As evaluate, then moves to the next document.
  std::optional<T> advance(const ModelParams<T>& p, ModelParams<T>* grad) {
    Membership next;
    auto loss = run(p, grad, &next);
    members_ = std::move(next);
    ++next_;
    return loss;
  }

 private:
  struct Membership {
    ClusterState<T> clusters;
    std::unordered_map<std::string, int> gold_to_cluster;
  };

  struct Node {
    MentionEncoding<T> enc;
    Vec<T> h_c;
    Vec<T> d_hx;
    Vec<T> d_hc;
    bool contextualized = false;
  };

  struct Candidate {
    std::vector<std::size_t> members;
    Vec<T> rep;
    CandidateFeatures<T> cf;
    ArgAgreement agreement;
  };

  struct Step {
    std::size_t query;
    std::vector<Candidate> cands;  // last = singleton
    Vec<T> logits;
    Vec<T> probs;
    std::size_t gold;
  };

  std::optional<T> run(const ModelParams<T>& p, ModelParams<T>* grad, Membership* out) const {
    const std::size_t di = next_;
    const auto& ids = corpus_.doc_mentions.at(di);
    if (ids.empty()) {
      if (out) *out = members_;
      return std::nullopt;
    }
    Membership local = members_;
    const std::string& topic = corpus_.topics[di];
    const Vec<T> empty = Vec<T>::Zero(0);
    const bool events = config_.event_mode();

    std::unordered_map<std::size_t, Node> nodes;
    auto node = [&](std::size_t mi) -> Node& {
      auto [it, fresh] = nodes.try_emplace(mi);
      if (fresh) {
        it->second.enc = encode_mention(corpus_.mentions[mi].inputs, p);
        it->second.d_hx = Vec<T>::Zero(it->second.enc.h_x.size());
      }
      return it->second;
    };
    auto contextualized = [&](std::size_t mi) -> Node& {
      Node& n = node(mi);
      if (!n.contextualized) {
        n.h_c = contextualize(n.enc.h_x, corpus_.contexts[corpus_.mentions[mi].doc], p);
        n.d_hc = Vec<T>::Zero(n.h_c.size());
        n.contextualized = true;
      }
      return n;
    };
    auto arg_slot = [&](const ArgAgreement& g) {
      if (!config_.use_arg_feature) return Vec<T>(Vec<T>::Zero(config_.d_f));
      return arg_coref_feature<T>(g, p.f_emb);
    };

    std::vector<Step> steps;
    T loss = T(0);
    std::vector<const RoleFillers*> member_fillers;
    for (std::size_t q : ids) {
      const auto& pm = corpus_.mentions[q];
      Step st;
      st.query = q;
      const Vec<T> h_x = node(q).enc.h_x;
      const std::vector<int> cids = local.clusters.clusters_in_topic(topic);
      std::vector<Vec<T>> features;
      for (int cid : cids) {
        Candidate c;
        const auto& cl = local.clusters.cluster(cid);
        c.rep = Vec<T>::Zero(h_x.size());
        member_fillers.clear();
        for (const auto& m : cl.members) {
          const std::size_t mi = corpus_.index.at(m);
          c.members.push_back(mi);
          c.rep += contextualized(mi).h_c;
          member_fillers.push_back(&corpus_.mentions[mi].fillers);
        }
        c.rep /= static_cast<T>(c.members.size());
        Vec<T> f_r;
        if (events) {
          c.agreement = argument_agreement(pm.fillers, member_fillers);
          f_r = arg_slot(c.agreement);
        }
        c.cf = candidate_features(h_x, c.rep, p, events ? &f_r : nullptr);
        features.push_back(c.cf.h_f);
        st.cands.push_back(std::move(c));
      }
      {
        Candidate s;
        s.rep = corpus_.contexts[di];
        Vec<T> f_r = Vec<T>::Zero(config_.d_f);
        s.cf = candidate_features(h_x, s.rep, p, events ? &f_r : nullptr);
        features.push_back(s.cf.h_f);
        st.cands.push_back(std::move(s));
      }
      auto dist = score_candidates<T>(std::span<const Vec<T>>(features), p);
      st.logits = dist.logits;
      st.probs = dist.probs;

      if (!pm.gold) throw Error(ErrorCode::kMissingGold, "mention without gold cluster");
      st.gold = cids.size();
      auto it = local.gold_to_cluster.find(*pm.gold);
      if (it != local.gold_to_cluster.end()) {
        auto pos = std::lower_bound(cids.begin(), cids.end(), it->second);
        if (pos != cids.end() && *pos == it->second) {
          st.gold = static_cast<std::size_t>(pos - cids.begin());
        }
      }
      loss += link_nll(st.logits, st.gold);

      const std::string& mid = pm.inputs.mention_id;
      if (it == local.gold_to_cluster.end()) {
        local.gold_to_cluster[*pm.gold] = local.clusters.new_cluster(empty, mid, topic);
      } else {
        local.clusters.add_member(it->second, empty, mid, topic);
      }
      steps.push_back(std::move(st));
    }
    const T n = static_cast<T>(steps.size());
    loss /= n;

    if (grad) backward(p, *grad, steps, nodes, contextualized, n);
    if (out) *out = std::move(local);
    return loss;
  }

  template <typename Contextualized>
  void backward(const ModelParams<T>& p, ModelParams<T>& grad, const std::vector<Step>& steps,
                std::unordered_map<std::size_t, Node>& nodes, Contextualized& contextualized,
                T n) const {
    const bool events = config_.event_mode();
    for (const auto& st : steps) {
      Vec<T> dz = st.probs;
      dz[static_cast<Eigen::Index>(st.gold)] -= T(1);
      dz /= n;
      Node& qn = nodes.at(st.query);
      const Vec<T> h_x = qn.enc.h_x;
      for (std::size_t j = 0; j < st.cands.size(); ++j) {
        const auto& c = st.cands[j];
        const T d = dz[static_cast<Eigen::Index>(j)];
        grad.b_o[0] += d;
        grad.w_o += d * c.cf.h_f;
        const Vec<T> d_hf = d * p.w_o;
        const bool singleton = j + 1 == st.cands.size();
        Vec<T> d_hp = Vec<T>::Zero(h_x.size());
        Vec<T> d_fr = candidate_features_backward(h_x, c.rep, c.cf, d_hf, p, grad, qn.d_hx,
                                                  singleton ? nullptr : &d_hp);
        if (events && config_.use_arg_feature && !singleton) {
          arg_coref_feature_backward(c.agreement, d_fr, grad.f_emb);
        }
        if (singleton) continue;
        d_hp /= static_cast<T>(c.members.size());
        for (std::size_t mi : c.members) contextualized(mi).d_hc += d_hp;
      }
    }
    for (auto& [mi, nd] : nodes) {
      Vec<T> d_hx = nd.d_hx;
      if (nd.contextualized) {
        d_hx += contextualize_backward(nd.enc.h_x, corpus_.contexts[corpus_.mentions[mi].doc],
                                       nd.h_c, nd.d_hc, p, grad);
      }
      encode_mention_backward(corpus_.mentions[mi].inputs, nd.enc, d_hx, p, grad);
    }
  }

  const PreparedCorpus<T>& corpus_;
  Config config_;
  Membership members_;
  std::size_t next_ = 0;
};

// Sum of document losses over a full replay; adds the gradient into *grad.
template <typename T>
T corpus_loss(const PreparedCorpus<T>& prepared, const Config& config, const ModelParams<T>& p,
              ModelParams<T>* grad) {
  TeacherForcedReplay<T> replay(prepared, config);
  T total = T(0);
  while (!replay.done()) {
    if (auto loss = replay.advance(p, grad)) total += *loss;
  }
  return total;
}

struct TensorGradCheck {
  std::string name;
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
  // ||analytic - numeric|| / max(||analytic||, ||numeric||, floor). The floor
  // keeps rounding noise on gradients that are exactly zero (b_o, which the
  // softmax ignores) from reading as a relative error of 1.
  double rel_error = 0.0;
};

// Compares analytic gradients of corpus_loss with central differences,
// one tensor at a time.
template <typename T>
std::vector<TensorGradCheck> gradient_check(const PreparedCorpus<T>& prepared, const Config& config,
                                            const ModelParams<T>& params, double h = 1e-4,
                                            double floor = 1e-8) {
  ModelParams<T> analytic = params;
  analytic.set_zero();
  corpus_loss(prepared, config, params, &analytic);
  std::vector<std::vector<T>> grads;
  analytic.visit([&](const std::string&, const T* d, Eigen::Index r, Eigen::Index c) {
    grads.emplace_back(d, d + r * c);
  });

  ModelParams<T> probe = params;
  std::vector<std::pair<std::string, std::pair<T*, Eigen::Index>>> tensors;
  probe.visit([&](const std::string& name, T* d, Eigen::Index r, Eigen::Index c) {
    tensors.push_back({name, {d, r * c}});
  });
  std::vector<TensorGradCheck> out;
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    auto [data, size] = tensors[t].second;
    double diff = 0, na = 0, nn = 0;
    for (Eigen::Index i = 0; i < size; ++i) {
      const T keep = data[i];
      data[i] = keep + static_cast<T>(h);
      const double up = static_cast<double>(corpus_loss<T>(prepared, config, probe, nullptr));
      data[i] = keep - static_cast<T>(h);
      const double down = static_cast<double>(corpus_loss<T>(prepared, config, probe, nullptr));
      data[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double a = static_cast<double>(grads[t][static_cast<std::size_t>(i)]);
      diff += (a - numeric) * (a - numeric);
      na += a * a;
      nn += numeric * numeric;
    }
    TensorGradCheck r;
    r.name = tensors[t].first;
    r.analytic_norm = std::sqrt(na);
    r.numeric_norm = std::sqrt(nn);
    r.rel_error = std::sqrt(diff) / std::max({r.analytic_norm, r.numeric_norm, floor});
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training loop

struct TrainData {
  const Corpus* corpus = nullptr;
  const EmbeddingStore* embeddings = nullptr;
  // kind, topics and (event mode) entity clustering; teacher_forced ignored.
  EngineOptions options;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_conll_f1 = 0.0;
  bool stopped = false;
};

template <typename T>
struct TrainResult {
  ModelParams<T> params;  // best dev epoch
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_dev_f1 = 0.0;
  std::chrono::nanoseconds wall_time{0};
};

// CoNLL F1 of a predicted run over data against its gold clustering.
template <typename T>
double dev_conll_f1(const ModelParams<T>& params, const Config& config, const TrainData& data) {
  EngineOptions opt = data.options;
  opt.teacher_forced = false;
  opt.record_steps = false;
  const auto state = run_corpus<T>(*data.corpus, *data.embeddings, params, config, opt);
  return conll_f1(state.clustering(), data.corpus->gold_clustering(opt.kind));
}

// One pass over the prepared corpus. With an optimizer, updates after each
// document; returns the mean document loss.
template <typename T>
double train_epoch(const PreparedCorpus<T>& prepared, const Config& config, ModelParams<T>& params,
                   Adam<T>* optimizer) {
  TeacherForcedReplay<T> replay(prepared, config);
  ModelParams<T> grad = params;
  double total = 0;
  int docs = 0;
  while (!replay.done()) {
    std::optional<T> loss;
    if (optimizer) {
      grad.set_zero();
      loss = replay.advance(params, &grad);
      if (loss) {
        if (!std::isfinite(static_cast<double>(*loss))) {
          throw Error(ErrorCode::kNonFiniteGradient,
                      "non-finite loss at document '" +
                          prepared.docs[replay.position() - 1]->doc_id + "'");
        }
        clip_gradients(grad, static_cast<T>(config.clip_norm));
        optimizer->step(params, grad);
      }
    } else {
      loss = replay.advance(params, nullptr);
    }
    if (loss) {
      total += static_cast<double>(*loss);
      ++docs;
    }
  }
  return docs ? total / docs : 0.0;
}

// Epoch 0 scores the initial parameters. Training stops once the dev score
// has not improved for `patience` consecutive epochs (patience 0: the first
// epoch without improvement), or after max_epochs.
template <typename T>
TrainResult<T> train(const TrainData& train_data, const TrainData& dev_data, const Config& config,
                     ModelParams<T> params,
                     const std::function<void(const EpochLog&)>& on_epoch = {}) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  EngineOptions opt = train_data.options;
  opt.teacher_forced = true;
  const auto prepared =
      prepare_corpus<T>(*train_data.corpus, *train_data.embeddings, config, opt);

  TrainResult<T> result;
  auto emit = [&](const EpochLog& e) {
    result.log.push_back(e);
    if (on_epoch) on_epoch(e);
  };

  EpochLog first;
  first.epoch = 0;
  first.train_loss = train_epoch<T>(prepared, config, params, nullptr);
  first.dev_conll_f1 = dev_conll_f1(params, config, dev_data);
  result.params = params;
  result.best_dev_f1 = first.dev_conll_f1;
  result.best_epoch = 0;
  first.stopped = config.max_epochs == 0;
  emit(first);

  Adam<T> optimizer(params, config.learning_rate);
  int since = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    EpochLog e;
    e.epoch = epoch;
    e.train_loss = train_epoch<T>(prepared, config, params, &optimizer);
    e.dev_conll_f1 = dev_conll_f1(params, config, dev_data);
    if (e.dev_conll_f1 > result.best_dev_f1) {
      result.best_dev_f1 = e.dev_conll_f1;
      result.best_epoch = epoch;
      result.params = params;
      since = 0;
    } else {
      ++since;
    }
    e.stopped = (since > 0 && since >= config.patience) || epoch == config.max_epochs;
    emit(e);
    if (e.stopped) break;
  }
  result.wall_time = std::chrono::steady_clock::now() - started;
  return result;
}

template <typename T>
TrainResult<T> train(const TrainData& train_data, const TrainData& dev_data, const Config& config,
                     const std::function<void(const EpochLog&)>& on_epoch = {}) {
  return train<T>(train_data, dev_data, config, init_params<T>(config, config.seed), on_epoch);
}

}  // namespace xcoref
