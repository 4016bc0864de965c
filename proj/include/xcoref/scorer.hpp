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

// Link scoring between a query mention and candidate clusters.
//
// Feature layout for one (query h_x, candidate h_P) pair:
//
//   [ h_x * h_P (d_m) | |h_x - h_P| (d_m) | cos (1) | perspective cos (k) | f_r (d_f, events) ]
//
// Every candidate, the singleton included, is mapped to one logit by the
// shared output layer; a softmax over the logits gives the link distribution.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "xcoref/clustering.hpp"
#include "xcoref/corpus.hpp"
#include "xcoref/error.hpp"
#include "xcoref/linalg.hpp"
#include "xcoref/params.hpp"

namespace xcoref {

// Cosine similarity, 0 when either vector has zero norm.
template <typename T>
T cosine(const Vec<T>& a, const Vec<T>& b) {
  check_dim(b.size(), a.size(), "cosine operand");
  const T na = a.norm(), nb = b.norm();
  if (na == T(0) || nb == T(0)) return T(0);
  return a.dot(b) / (na * nb);
}

template <typename T>
void cosine_backward(const Vec<T>& a, const Vec<T>& b, T value, T d_value, Vec<T>& d_a,
                     Vec<T>& d_b) {
  const T na = a.norm(), nb = b.norm();
  if (na == T(0) || nb == T(0)) return;
  d_a += d_value * (b / (na * nb) - value * a / (na * na));
  d_b += d_value * (a / (na * nb) - value * b / (nb * nb));
}

template <typename T>
Vec<T> mp_cosine(const Vec<T>& a, const Vec<T>& b, std::span<const Mat<T>> projections) {
  Vec<T> out(static_cast<Eigen::Index>(projections.size()));
  for (std::size_t j = 0; j < projections.size(); ++j) {
    check_dim(a.size(), projections[j].cols(), "perspective input");
    out[static_cast<Eigen::Index>(j)] = cosine<T>(projections[j] * a, projections[j] * b);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Argument agreement (event mode)

// Entity cluster ids filling each role of one event mention.
struct RoleFillers {
  std::array<std::vector<int>, kNumRoles> clusters;

  bool filled(int role) const { return !clusters[static_cast<std::size_t>(role)].empty(); }
};

inline RoleFillers role_fillers(const Mention& event, const Clustering& entity_clustering) {
  RoleFillers out;
  for (const auto& a : event.args) {
    if (!entity_clustering.contains(a.mention_id)) {
      throw Error(ErrorCode::kUnknownEntityMention,
                  "argument '" + a.mention_id + "' of '" + event.mention_id +
                      "' has no entity cluster");
    }
    out.clusters[static_cast<std::size_t>(a.role)].push_back(entity_clustering.at(a.mention_id));
  }
  return out;
}

struct ArgAgreement {
  int agree = 0;     // shared roles whose fillers corefer
  int disagree = 0;  // shared roles whose fillers do not
  int shared() const { return agree + disagree; }
  friend bool operator==(const ArgAgreement&, const ArgAgreement&) = default;
};

// A role counts when both the query and some member of the candidate fill
// it; it agrees when a query filler corefers with a filler of that role in
// any member.
template <typename MemberRange>
ArgAgreement argument_agreement(const RoleFillers& query, const MemberRange& members) {
  ArgAgreement out;
  for (int r = 0; r < kNumRoles; ++r) {
    if (!query.filled(r)) continue;
    bool candidate_filled = false, agree = false;
    for (const RoleFillers* m : members) {
      const auto& fillers = m->clusters[static_cast<std::size_t>(r)];
      if (fillers.empty()) continue;
      candidate_filled = true;
      for (int q : query.clusters[static_cast<std::size_t>(r)]) {
        if (std::find(fillers.begin(), fillers.end(), q) != fillers.end()) agree = true;
      }
      if (agree) break;
    }
    if (!candidate_filled) continue;
    (agree ? out.agree : out.disagree) += 1;
  }
  return out;
}

// Mean of the agreement embeddings over shared roles; zero when none.
template <typename T>
Vec<T> arg_coref_feature(const ArgAgreement& g, const Mat<T>& f_emb) {
  Vec<T> out = Vec<T>::Zero(f_emb.cols());
  if (g.shared() == 0) return out;
  out = (static_cast<T>(g.disagree) * f_emb.row(0).transpose() +
         static_cast<T>(g.agree) * f_emb.row(1).transpose()) /
        static_cast<T>(g.shared());
  return out;
}

template <typename T>
void arg_coref_feature_backward(const ArgAgreement& g, const Vec<T>& d_out, Mat<T>& d_f_emb) {
  if (g.shared() == 0) return;
  const T n = static_cast<T>(g.shared());
  d_f_emb.row(0) += (static_cast<T>(g.disagree) / n) * d_out.transpose();
  d_f_emb.row(1) += (static_cast<T>(g.agree) / n) * d_out.transpose();
}

// Convenience form over mentions: query event, candidate member events.
template <typename T>
Vec<T> arg_coref_feature(const Mention& query, std::span<const Mention* const> candidate,
                         const Clustering& entity_clustering, const Mat<T>& f_emb) {
  RoleFillers q = role_fillers(query, entity_clustering);
  std::vector<RoleFillers> fillers;
  fillers.reserve(candidate.size());
  for (const Mention* m : candidate) fillers.push_back(role_fillers(*m, entity_clustering));
  std::vector<const RoleFillers*> ptrs;
  for (const auto& f : fillers) ptrs.push_back(&f);
  return arg_coref_feature<T>(argument_agreement(q, ptrs), f_emb);
}

// ---------------------------------------------------------------------------
// Features and link distribution

template <typename T>
Vec<T> feature_vector(const Vec<T>& h_x, const Vec<T>& h_p, T f_cos, const Vec<T>& f_mp,
                      const Vec<T>* f_r = nullptr) {
  check_dim(h_p.size(), h_x.size(), "candidate representation");
  const Eigen::Index dm = h_x.size();
  const Eigen::Index extra = f_r ? f_r->size() : 0;
  Vec<T> out(2 * dm + 1 + f_mp.size() + extra);
  out.segment(0, dm) = (h_x.array() * h_p.array()).matrix();
  out.segment(dm, dm) = (h_x - h_p).cwiseAbs();
  out[2 * dm] = f_cos;
  out.segment(2 * dm + 1, f_mp.size()) = f_mp;
  if (f_r) out.tail(extra) = *f_r;
  return out;
}

template <typename T>
struct CandidateFeatures {
  Vec<T> h_f;
  T cos = T(0);
  Vec<T> mp;
};

// Full feature vector for one candidate. f_r is required in event mode.
template <typename T>
CandidateFeatures<T> candidate_features(const Vec<T>& h_x, const Vec<T>& h_p,
                                        const ModelParams<T>& p, const Vec<T>* f_r) {
  CandidateFeatures<T> cf;
  cf.cos = cosine(h_x, h_p);
  cf.mp = mp_cosine<T>(h_x, h_p, std::span<const Mat<T>>(p.w_p));
  cf.h_f = feature_vector(h_x, h_p, cf.cos, cf.mp, f_r);
  check_dim(cf.h_f.size(), p.w_o.size(), "feature vector");
  return cf;
}

// Given d h_f, accumulates parameter gradients and adds into d_hx / d_hp.
// Returns the adjoint of the f_r block (empty in entity mode).
template <typename T>
Vec<T> candidate_features_backward(const Vec<T>& h_x, const Vec<T>& h_p,
                                   const CandidateFeatures<T>& cf, const Vec<T>& d_hf,
                                   const ModelParams<T>& p, ModelParams<T>& grad, Vec<T>& d_hx,
                                   Vec<T>* d_hp) {
  const Eigen::Index dm = h_x.size();
  const Eigen::Index k = cf.mp.size();
  Vec<T> sink = Vec<T>::Zero(dm);
  Vec<T>& dp = d_hp ? *d_hp : sink;

  const auto d_prod = d_hf.segment(0, dm);
  d_hx += (d_prod.array() * h_p.array()).matrix();
  dp += (d_prod.array() * h_x.array()).matrix();

  Vec<T> sign = (h_x - h_p).unaryExpr([](T v) { return T((v > T(0)) - (v < T(0))); });
  Vec<T> d_abs = (d_hf.segment(dm, dm).array() * sign.array()).matrix();
  d_hx += d_abs;
  dp -= d_abs;

  cosine_backward(h_x, h_p, cf.cos, d_hf[2 * dm], d_hx, dp);

  for (Eigen::Index j = 0; j < k; ++j) {
    const Mat<T>& w = p.w_p[static_cast<std::size_t>(j)];
    Vec<T> u = w * h_x, v = w * h_p;
    Vec<T> du = Vec<T>::Zero(u.size()), dv = Vec<T>::Zero(v.size());
    cosine_backward(u, v, cf.mp[j], d_hf[2 * dm + 1 + j], du, dv);
    grad.w_p[static_cast<std::size_t>(j)].noalias() += du * h_x.transpose() + dv * h_p.transpose();
    d_hx += w.transpose() * du;
    dp += w.transpose() * dv;
  }
  return d_hf.tail(d_hf.size() - (2 * dm + 1 + k));
}

template <typename T>
struct LinkDistribution {
  Vec<T> logits;
  Vec<T> probs;
  std::size_t size() const { return static_cast<std::size_t>(probs.size()); }
};

template <typename T>
LinkDistribution<T> softmax_distribution(const Vec<T>& logits) {
  LinkDistribution<T> d;
  d.logits = logits;
  const T top = logits.maxCoeff();
  d.probs = (logits.array() - top).exp().matrix();
  d.probs /= d.probs.sum();
  return d;
}

// One shared-weight logit per candidate, then softmax.
template <typename T>
LinkDistribution<T> score_candidates(std::span<const Vec<T>> features, const ModelParams<T>& p) {
  if (features.empty()) throw Error(ErrorCode::kInvalidArgument, "no candidates to score");
  Vec<T> logits(static_cast<Eigen::Index>(features.size()));
  for (std::size_t j = 0; j < features.size(); ++j) {
    check_dim(features[j].size(), p.w_o.size(), "feature vector");
    logits[static_cast<Eigen::Index>(j)] = p.w_o.dot(features[j]) + p.b_o[0];
  }
  return softmax_distribution(logits);
}

// Argmax; ties go to the lowest index.
template <typename T>
std::size_t predict_link(const Vec<T>& probs) {
  std::size_t best = 0;
  for (Eigen::Index j = 1; j < probs.size(); ++j) {
    if (probs[j] > probs[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(j);
  }
  return best;
}

template <typename T>
std::size_t predict_link(const LinkDistribution<T>& d) {
  return predict_link(d.probs);
}

}  // namespace xcoref
