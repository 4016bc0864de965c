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

#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "xcoref/error.hpp"

namespace xcoref {

// A partition of a set of string keys (mention ids or doc ids) given as a
// key -> cluster id map. Cluster ids are dense after normalized().
class Clustering {
 public:
  Clustering() = default;

  void assign(const std::string& key, int cluster) { labels_[key] = cluster; }

  bool contains(const std::string& key) const { return labels_.count(key) > 0; }

  int at(const std::string& key) const {
    auto it = labels_.find(key);
    if (it == labels_.end()) {
      throw Error(ErrorCode::kUniverseMismatch, "no cluster for '" + key + "'");
    }
    return it->second;
  }

  const std::map<std::string, int>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  // Clusters as sorted member lists, ordered by smallest member.
  std::vector<std::vector<std::string>> clusters() const {
    std::map<int, std::vector<std::string>> by_id;
    for (const auto& [key, id] : labels_) by_id[id].push_back(key);
    std::vector<std::vector<std::string>> out;
    out.reserve(by_id.size());
    for (auto& [id, members] : by_id) out.push_back(std::move(members));
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t num_clusters() const {
    std::map<int, int> ids;
    for (const auto& [key, id] : labels_) ids[id] = 0;
    return ids.size();
  }

  // Relabels clusters to 0..n-1 in order of first appearance by key.
  Clustering normalized() const {
    Clustering out;
    std::map<int, int> remap;
    for (const auto& [key, id] : labels_) {
      auto [it, inserted] = remap.emplace(id, static_cast<int>(remap.size()));
      out.assign(key, it->second);
    }
    return out;
  }

  // Restriction to keys satisfying pred.
  template <typename Pred>
  Clustering filtered(Pred pred) const {
    Clustering out;
    for (const auto& [key, id] : labels_) {
      if (pred(key)) out.assign(key, id);
    }
    return out;
  }

  static Clustering from_groups(const std::vector<std::vector<std::string>>& groups) {
    Clustering out;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (const auto& key : groups[i]) {
        if (out.contains(key)) {
          throw Error(ErrorCode::kDuplicateMention, "key '" + key + "' in two groups");
        }
        out.assign(key, static_cast<int>(i));
      }
    }
    return out;
  }

  friend bool operator==(const Clustering& a, const Clustering& b) {
    return a.clusters() == b.clusters();
  }

 private:
  std::map<std::string, int> labels_;
};

}  // namespace xcoref
