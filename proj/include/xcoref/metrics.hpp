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

// Coreference scores: MUC, B-cubed, entity-based CEAF and their average.
//
// Singletons are scored by default. With exclude_singletons, singleton
// clusters are dropped from the key and the response independently, after
// which the two may cover different mentions.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "xcoref/clustering.hpp"
#include "xcoref/error.hpp"

namespace xcoref {

struct ScoreTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // False when the metric has no denominator (MUC with no gold links).
  bool defined = true;
};

inline double f_measure(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

inline ScoreTriple make_triple(double p, double r) { return {p, r, f_measure(p, r), true}; }

struct MetricOptions {
  bool exclude_singletons = false;
};

namespace detail {

using Groups = std::vector<std::vector<std::string>>;

inline void check_universe(const Clustering& pred, const Clustering& gold) {
  if (pred.size() != gold.size()) {
    throw Error(ErrorCode::kUniverseMismatch,
                "prediction covers " + std::to_string(pred.size()) + " mentions, gold " +
                    std::to_string(gold.size()));
  }
  for (const auto& [key, id] : gold.labels()) {
    if (!pred.contains(key)) {
      throw Error(ErrorCode::kUniverseMismatch, "mention '" + key + "' missing from prediction");
    }
  }
}

inline Clustering drop_singletons(const Clustering& c) {
  std::map<int, int> sizes;
  for (const auto& [key, id] : c.labels()) ++sizes[id];
  return c.filtered([&](const std::string& key) { return sizes[c.at(key)] > 1; });
}

// |G ∩ K| for every gold/pred cluster pair, rows gold, cols pred.
struct Overlap {
  std::vector<std::size_t> gold_sizes;
  std::vector<std::size_t> pred_sizes;
  std::vector<std::vector<std::size_t>> counts;
};

inline Overlap overlap(const Clustering& pred, const Clustering& gold) {
  std::map<int, std::size_t> gi, pi;
  for (const auto& [k, id] : gold.labels()) gi.emplace(id, gi.size());
  for (const auto& [k, id] : pred.labels()) pi.emplace(id, pi.size());
  Overlap o;
  o.gold_sizes.assign(gi.size(), 0);
  o.pred_sizes.assign(pi.size(), 0);
  o.counts.assign(gi.size(), std::vector<std::size_t>(pi.size(), 0));
  for (const auto& [k, id] : gold.labels()) ++o.gold_sizes[gi[id]];
  for (const auto& [k, id] : pred.labels()) ++o.pred_sizes[pi[id]];
  for (const auto& [k, id] : gold.labels()) {
    if (pred.contains(k)) ++o.counts[gi[id]][pi[pred.at(k)]];
  }
  return o;
}

// Sum over key clusters S of (|S| - |partitions of S by response|), and the
// matching denominator. Mentions missing from the response are singletons.
inline std::pair<double, double> muc_counts(const Clustering& key, const Clustering& response) {
  std::map<int, std::vector<std::string>> groups;
  for (const auto& [k, id] : key.labels()) groups[id].push_back(k);
  double num = 0, den = 0;
  for (const auto& [id, members] : groups) {
    std::map<int, int> parts;
    int unmatched = 0;
    for (const auto& m : members) {
      if (response.contains(m)) {
        parts[response.at(m)] = 1;
      } else {
        ++unmatched;
      }
    }
    const double partitions = static_cast<double>(parts.size() + static_cast<std::size_t>(unmatched));
    num += static_cast<double>(members.size()) - partitions;
    den += static_cast<double>(members.size()) - 1;
  }
  return {num, den};
}

}  // namespace detail

// Maximum-weight assignment on a rows x cols weight matrix (Hungarian method
// with potentials). Returns, for each row, its column or -1.
inline std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weight) {
  const std::size_t rows = weight.size();
  const std::size_t cols = rows ? weight[0].size() : 0;
  const std::size_t n = std::max(rows, cols);
  if (n == 0) return {};
  // Minimize cost = -weight on a square matrix padded with zeros, 1-based.
  auto cost = [&](std::size_t i, std::size_t j) {
    return (i <= rows && j <= cols) ? -weight[i - 1][j - 1] : 0.0;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> out(rows, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    if (match[j] >= 1 && match[j] <= rows && j <= cols) out[match[j] - 1] = static_cast<int>(j - 1);
  }
  return out;
}

inline ScoreTriple muc(const Clustering& pred, const Clustering& gold, MetricOptions opt = {}) {
  Clustering p = pred, g = gold;
  if (opt.exclude_singletons) {
    p = detail::drop_singletons(pred);
    g = detail::drop_singletons(gold);
  } else {
    detail::check_universe(pred, gold);
  }
  auto [rn, rd] = detail::muc_counts(g, p);
  auto [pn, pd] = detail::muc_counts(p, g);
  const double r = rd > 0 ? rn / rd : 0.0;
  const double pr = pd > 0 ? pn / pd : 0.0;
  ScoreTriple out = make_triple(pr, r);
  out.defined = rd > 0;
  return out;
}

inline ScoreTriple b_cubed(const Clustering& pred, const Clustering& gold, MetricOptions opt = {}) {
  Clustering p = pred, g = gold;
  if (opt.exclude_singletons) {
    p = detail::drop_singletons(pred);
    g = detail::drop_singletons(gold);
  } else {
    detail::check_universe(pred, gold);
  }
  const auto o = detail::overlap(p, g);
  double r_num = 0, p_num = 0;
  for (std::size_t i = 0; i < o.gold_sizes.size(); ++i) {
    for (std::size_t j = 0; j < o.pred_sizes.size(); ++j) {
      const double c = static_cast<double>(o.counts[i][j]);
      if (c == 0) continue;
      r_num += c * c / static_cast<double>(o.gold_sizes[i]);
      p_num += c * c / static_cast<double>(o.pred_sizes[j]);
    }
  }
  const double r = g.size() ? r_num / static_cast<double>(g.size()) : 0.0;
  const double pr = p.size() ? p_num / static_cast<double>(p.size()) : 0.0;
  return make_triple(pr, r);
}

inline ScoreTriple ceaf_e(const Clustering& pred, const Clustering& gold, MetricOptions opt = {}) {
  Clustering p = pred, g = gold;
  if (opt.exclude_singletons) {
    p = detail::drop_singletons(pred);
    g = detail::drop_singletons(gold);
  } else {
    detail::check_universe(pred, gold);
  }
  const auto o = detail::overlap(p, g);
  std::vector<std::vector<double>> phi(o.gold_sizes.size(),
                                       std::vector<double>(o.pred_sizes.size(), 0.0));
  for (std::size_t i = 0; i < o.gold_sizes.size(); ++i) {
    for (std::size_t j = 0; j < o.pred_sizes.size(); ++j) {
      phi[i][j] = 2.0 * static_cast<double>(o.counts[i][j]) /
                  static_cast<double>(o.gold_sizes[i] + o.pred_sizes[j]);
    }
  }
  const auto match = max_weight_assignment(phi);
  double total = 0;
  for (std::size_t i = 0; i < match.size(); ++i) {
    if (match[i] >= 0) total += phi[i][static_cast<std::size_t>(match[i])];
  }
  const double r = o.gold_sizes.empty() ? 0.0 : total / static_cast<double>(o.gold_sizes.size());
  const double pr = o.pred_sizes.empty() ? 0.0 : total / static_cast<double>(o.pred_sizes.size());
  return make_triple(pr, r);
}

struct CorefReport {
  ScoreTriple muc;
  ScoreTriple b_cubed;
  ScoreTriple ceaf_e;
  double conll = 0.0;
};

// Mean F1 of the defined metrics among MUC, B-cubed and CEAF-e.
inline double conll_from(const ScoreTriple& m, const ScoreTriple& b, const ScoreTriple& c) {
  double sum = 0;
  int n = 0;
  for (const ScoreTriple* s : {&m, &b, &c}) {
    if (!s->defined) continue;
    sum += s->f1;
    ++n;
  }
  return n ? sum / n : 0.0;
}

inline CorefReport evaluate_coref(const Clustering& pred, const Clustering& gold,
                                  MetricOptions opt = {}) {
  CorefReport r;
  r.muc = muc(pred, gold, opt);
  r.b_cubed = b_cubed(pred, gold, opt);
  r.ceaf_e = ceaf_e(pred, gold, opt);
  r.conll = conll_from(r.muc, r.b_cubed, r.ceaf_e);
  return r;
}

inline double conll_f1(const Clustering& pred, const Clustering& gold, MetricOptions opt = {}) {
  return evaluate_coref(pred, gold, opt).conll;
}

}  // namespace xcoref
