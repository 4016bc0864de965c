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

// Candidate cluster composition.
//
// Every clustered mention contributes h_c = tanh(W_x h_x + W_cls h_ctx + b_c),
// h_ctx being its document's context vector lifted to d_m. A cluster's
// representation is the mean of its members' h_c, kept as (sum, count) and
// updated in place as members are appended. Clusters only grow.

#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "xcoref/clustering.hpp"
#include "xcoref/error.hpp"
#include "xcoref/linalg.hpp"
#include "xcoref/params.hpp"

namespace xcoref {

template <typename T>
Vec<T> contextualize(const Vec<T>& h_x, const Vec<T>& h_ctx, const ModelParams<T>& p) {
  check_dim(h_x.size(), p.w_x.cols(), "mention vector");
  check_dim(h_ctx.size(), p.w_cls.cols(), "context vector");
  return (p.w_x * h_x + p.w_cls * h_ctx + p.b_c).array().tanh().matrix();
}

// Accumulates parameter gradients given d_hc; returns d h_x.
template <typename T>
Vec<T> contextualize_backward(const Vec<T>& h_x, const Vec<T>& h_ctx, const Vec<T>& h_c,
                              const Vec<T>& d_hc, const ModelParams<T>& p,
                              ModelParams<T>& grad) {
  Vec<T> d_pre = (d_hc.array() * (T(1) - h_c.array().square())).matrix();
  grad.w_x.noalias() += d_pre * h_x.transpose();
  grad.w_cls.noalias() += d_pre * h_ctx.transpose();
  grad.b_c += d_pre;
  return p.w_x.transpose() * d_pre;
}

// The singleton candidate: a document context vector lifted to d_m by
// self-concatenation.
template <typename T>
Vec<T> singleton_candidate(const Vec<T>& doc_context) {
  return concat(doc_context, doc_context);
}

template <typename T>
struct Cluster {
  int id = 0;
  std::vector<std::string> members;
  std::vector<std::string> topics;  // sorted, topics of member documents
  Vec<T> sum;
  int count = 0;

  Vec<T> rep() const { return sum / static_cast<T>(count); }
};

template <typename T>
class ClusterState {
 public:
  std::size_t size() const { return clusters_.size(); }
  const Cluster<T>& cluster(int id) const { return clusters_.at(static_cast<std::size_t>(id)); }
  const std::vector<Cluster<T>>& clusters() const { return clusters_; }

  bool contains(const std::string& mention_id) const { return owner_.count(mention_id) > 0; }

  int cluster_of(const std::string& mention_id) const {
    auto it = owner_.find(mention_id);
    if (it == owner_.end()) {
      throw Error(ErrorCode::kUnknownCluster, "mention '" + mention_id + "' is not clustered");
    }
    return it->second;
  }

  // Starts a cluster holding only mention_id; ids are dense in creation order.
  int new_cluster(const Vec<T>& h_c, const std::string& mention_id, const std::string& topic = "") {
    if (contains(mention_id)) {
      throw Error(ErrorCode::kDuplicateMention, "mention '" + mention_id + "' already clustered");
    }
    Cluster<T> c;
    c.id = static_cast<int>(clusters_.size());
    c.members.push_back(mention_id);
    c.sum = h_c;
    c.count = 1;
    clusters_.push_back(std::move(c));
    owner_[mention_id] = clusters_.back().id;
    note_topic(clusters_.back(), topic);
    return clusters_.back().id;
  }

  void add_member(int cluster_id, const Vec<T>& h_c, const std::string& mention_id,
                  const std::string& topic = "") {
    if (cluster_id < 0 || static_cast<std::size_t>(cluster_id) >= clusters_.size()) {
      throw Error(ErrorCode::kUnknownCluster, "no cluster " + std::to_string(cluster_id));
    }
    if (contains(mention_id)) {
      throw Error(ErrorCode::kDuplicateMention, "mention '" + mention_id + "' already clustered");
    }
    auto& c = clusters_[static_cast<std::size_t>(cluster_id)];
    check_dim(h_c.size(), c.sum.size(), "cluster member vector");
    c.sum += h_c;
    c.count += 1;
    c.members.push_back(mention_id);
    owner_[mention_id] = cluster_id;
    note_topic(c, topic);
  }

  // Ids of clusters with at least one member from a document of `topic`,
  // ascending.
  const std::vector<int>& clusters_in_topic(const std::string& topic) const {
    static const std::vector<int> kNone;
    auto it = by_topic_.find(topic);
    return it == by_topic_.end() ? kNone : it->second;
  }

  Clustering clustering() const {
    Clustering out;
    for (const auto& c : clusters_) {
      for (const auto& m : c.members) out.assign(m, c.id);
    }
    return out;
  }

  // Restores a cluster verbatim (used when reloading a saved engine state).
  void restore(Cluster<T> c) {
    if (c.id != static_cast<int>(clusters_.size()) || c.count != static_cast<int>(c.members.size()) ||
        c.count < 1) {
      throw Error(ErrorCode::kMalformedRecord, "inconsistent cluster record");
    }
    for (const auto& m : c.members) {
      if (contains(m)) throw Error(ErrorCode::kDuplicateMention, "mention '" + m + "' in two clusters");
      owner_[m] = c.id;
    }
    auto topics = std::move(c.topics);
    c.topics.clear();
    clusters_.push_back(std::move(c));
    for (const auto& t : topics) note_topic(clusters_.back(), t);
  }

 private:
  void note_topic(Cluster<T>& c, const std::string& topic) {
    auto pos = std::lower_bound(c.topics.begin(), c.topics.end(), topic);
    if (pos != c.topics.end() && *pos == topic) return;
    c.topics.insert(pos, topic);
    auto& ids = by_topic_[topic];
    ids.insert(std::lower_bound(ids.begin(), ids.end(), c.id), c.id);
  }

  std::vector<Cluster<T>> clusters_;
  std::unordered_map<std::string, int> owner_;
  std::map<std::string, std::vector<int>> by_topic_;
};

}  // namespace xcoref
