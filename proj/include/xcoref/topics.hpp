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

// Document topic clustering: TF-IDF over word n-grams, then k-means.
//
//   tf(g, d) = count of n-gram g in d
//   idf(g)   = ln(N / df(g))
//
// N-grams (n = 1..3) containing a stop word are skipped. Vectors are scaled
// to unit length before Lloyd iterations with k-means++ seeding.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xcoref/clustering.hpp"
#include "xcoref/corpus.hpp"
#include "xcoref/error.hpp"

namespace xcoref {

inline const std::vector<std::string>& default_stopwords() {
  static const std::vector<std::string> kWords = {
      "a",     "about", "after", "all",   "also",  "an",    "and",   "any",   "are",
      "as",    "at",    "be",    "been",  "before", "but",  "by",    "can",   "could",
      "did",   "do",    "does",  "for",   "from",  "had",   "has",   "have",  "he",
      "her",   "his",   "how",   "i",     "if",    "in",    "into",  "is",    "it",
      "its",   "may",   "more",  "no",    "not",   "of",    "on",    "one",   "or",
      "other", "our",   "out",   "said",  "she",   "so",    "some",  "than",  "that",
      "the",   "their", "them",  "then",  "there", "these", "they",  "this",  "those",
      "to",    "up",    "was",   "we",    "were",  "what",  "when",  "where", "which",
      "while", "who",   "will",  "with",  "would", "you",   "your"};
  return kWords;
}

inline std::set<std::string> default_stopword_set() {
  const auto& w = default_stopwords();
  return {w.begin(), w.end()};
}

// One word per line; blank lines and lines starting with '#' are skipped.
inline std::set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open stop-word file '" + path + "'");
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.insert(line);
  }
  return out;
}

inline std::string lowercase(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

// Sorted by n-gram id.
using SparseVector = std::vector<std::pair<int, double>>;

struct TfidfFeatures {
  std::vector<std::string> doc_ids;
  std::vector<SparseVector> vectors;
  std::vector<std::string> vocabulary;  // id -> n-gram, words joined by ' '
  std::vector<double> idf;
};

inline TfidfFeatures tfidf_features(const std::vector<const Document*>& docs,
                                    const std::set<std::string>& stopwords, int max_n = 3) {
  if (docs.empty()) throw Error(ErrorCode::kInvalidArgument, "tf-idf needs at least one document");
  std::map<std::string, int> ids;
  std::vector<std::map<int, double>> counts(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::vector<std::string> words;
    words.reserve(docs[d]->tokens.size());
    for (const auto& t : docs[d]->tokens) words.push_back(lowercase(t));
    for (int n = 1; n <= max_n; ++n) {
      for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= words.size(); ++i) {
        std::string gram;
        bool skip = false;
        for (int j = 0; j < n && !skip; ++j) {
          const auto& w = words[i + static_cast<std::size_t>(j)];
          if (stopwords.count(w)) skip = true;
          if (j) gram += ' ';
          gram += w;
        }
        if (skip) continue;
        auto [it, fresh] = ids.emplace(gram, static_cast<int>(ids.size()));
        counts[d][it->second] += 1.0;
      }
    }
  }
  TfidfFeatures out;
  out.vocabulary.resize(ids.size());
  for (const auto& [g, id] : ids) out.vocabulary[static_cast<std::size_t>(id)] = g;
  std::vector<int> df(ids.size(), 0);
  for (const auto& c : counts) {
    for (const auto& [id, n] : c) ++df[static_cast<std::size_t>(id)];
  }
  const double n_docs = static_cast<double>(docs.size());
  out.idf.resize(ids.size());
  for (std::size_t g = 0; g < df.size(); ++g) out.idf[g] = std::log(n_docs / df[g]);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    out.doc_ids.push_back(docs[d]->doc_id);
    SparseVector v;
    for (const auto& [id, tf] : counts[d]) {
      const double w = tf * out.idf[static_cast<std::size_t>(id)];
      if (w != 0.0) v.emplace_back(id, w);
    }
    out.vectors.push_back(std::move(v));
  }
  return out;
}

inline TfidfFeatures tfidf_features(const Corpus& corpus, const std::set<std::string>& stopwords) {
  std::vector<const Document*> docs;
  for (const auto& d : corpus.documents()) docs.push_back(&d);
  return tfidf_features(docs, stopwords);
}

inline SparseVector unit_normalized(const SparseVector& v) {
  double sq = 0;
  for (const auto& [i, w] : v) sq += w * w;
  if (sq == 0) return v;
  const double n = std::sqrt(sq);
  SparseVector out = v;
  for (auto& [i, w] : out) w /= n;
  return out;
}

struct KMeansResult {
  std::vector<int> labels;
  std::vector<double> objective;  // sum of squared distances after each assignment
  int iterations = 0;
};

// Rows are cosine-normalized first. Ties go to the lowest centroid index.
inline KMeansResult kmeans(const std::vector<SparseVector>& rows, std::size_t dim, int k,
                           std::uint64_t seed, int max_iter = 100) {
  const std::size_t n = rows.size();
  if (k <= 0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  if (n < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::kTooFewDocuments, std::to_string(n) + " documents for k=" + std::to_string(k));
  }
  const std::size_t kk = static_cast<std::size_t>(k);
  std::vector<SparseVector> x;
  std::vector<double> sq_norm;
  for (const auto& r : rows) {
    x.push_back(unit_normalized(r));
    double s = 0;
    for (const auto& [i, w] : x.back()) s += w * w;
    sq_norm.push_back(s);
  }
  std::vector<std::vector<double>> centers(kk, std::vector<double>(dim, 0.0));
  std::vector<double> center_sq(kk, 0.0);
  auto set_center = [&](std::size_t c, const SparseVector& v) {
    std::fill(centers[c].begin(), centers[c].end(), 0.0);
    double s = 0;
    for (const auto& [i, w] : v) {
      centers[c][static_cast<std::size_t>(i)] = w;
      s += w * w;
    }
    center_sq[c] = s;
  };
  auto dist2 = [&](std::size_t p, std::size_t c) {
    double dot = 0;
    for (const auto& [i, w] : x[p]) dot += w * centers[c][static_cast<std::size_t>(i)];
    return std::max(0.0, sq_norm[p] - 2 * dot + center_sq[c]);
  };

  // k-means++ seeding.
  std::mt19937_64 rng(seed);
  std::vector<char> chosen(n, 0);
  {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t first = pick(rng);
    set_center(0, x[first]);
    chosen[first] = 1;
  }
  std::vector<double> nearest(n);
  for (std::size_t p = 0; p < n; ++p) nearest[p] = dist2(p, 0);
  for (std::size_t c = 1; c < kk; ++c) {
    double total = 0;
    for (std::size_t p = 0; p < n; ++p) total += chosen[p] ? 0.0 : nearest[p];
    std::size_t next = n;
    if (total > 0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng), acc = 0;
      for (std::size_t p = 0; p < n; ++p) {
        if (chosen[p]) continue;
        acc += nearest[p];
        if (nearest[p] > 0 && acc >= r) {
          next = p;
          break;
        }
      }
    }
    if (next == n) {
      std::vector<std::size_t> rest;
      for (std::size_t p = 0; p < n; ++p) {
        if (!chosen[p]) rest.push_back(p);
      }
      std::uniform_int_distribution<std::size_t> pick(0, rest.size() - 1);
      next = rest[pick(rng)];
    }
    set_center(c, x[next]);
    chosen[next] = 1;
    for (std::size_t p = 0; p < n; ++p) nearest[p] = std::min(nearest[p], dist2(p, c));
  }

  KMeansResult res;
  res.labels.assign(n, -1);
  std::vector<double> point_dist(n, 0.0);
  auto assign = [&]() {
    bool changed = false;
    double obj = 0;
    for (std::size_t p = 0; p < n; ++p) {
      int best = 0;
      double bd = dist2(p, 0);
      for (std::size_t c = 1; c < kk; ++c) {
        const double d = dist2(p, c);
        if (d < bd) {
          bd = d;
          best = static_cast<int>(c);
        }
      }
      if (res.labels[p] != best) changed = true;
      res.labels[p] = best;
      point_dist[p] = bd;
      obj += bd;
    }
    res.objective.push_back(obj);
    return changed;
  };

  assign();
  for (res.iterations = 1; res.iterations <= max_iter; ++res.iterations) {
    std::vector<std::size_t> sizes(kk, 0);
    for (auto& c : centers) std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t p = 0; p < n; ++p) {
      const auto c = static_cast<std::size_t>(res.labels[p]);
      ++sizes[c];
      for (const auto& [i, w] : x[p]) centers[c][static_cast<std::size_t>(i)] += w;
    }
    for (std::size_t c = 0; c < kk; ++c) {
      if (sizes[c] == 0) continue;
      double s = 0;
      for (auto& v : centers[c]) {
        v /= static_cast<double>(sizes[c]);
        s += v * v;
      }
      center_sq[c] = s;
    }
    for (std::size_t c = 0; c < kk; ++c) {
      if (sizes[c] != 0) continue;
      // Reseed from the point farthest from its centroid among clusters that
      // can spare a member.
      std::size_t far = n;
      for (std::size_t p = 0; p < n; ++p) {
        if (sizes[static_cast<std::size_t>(res.labels[p])] < 2) continue;
        if (far == n || point_dist[p] > point_dist[far]) far = p;
      }
      if (far == n) break;
      --sizes[static_cast<std::size_t>(res.labels[far])];
      res.labels[far] = static_cast<int>(c);
      sizes[c] = 1;
      point_dist[far] = 0;
      set_center(c, x[far]);
    }
    if (!assign()) break;
  }
  res.iterations = std::min(res.iterations, max_iter);
  return res;
}

// Best of `restarts` seeded runs by final objective; restart r uses seed + r.
inline KMeansResult kmeans_restarts(const std::vector<SparseVector>& rows, std::size_t dim, int k,
                                    std::uint64_t seed, int restarts = 10, int max_iter = 100) {
  KMeansResult best;
  for (int r = 0; r < std::max(1, restarts); ++r) {
    auto run = kmeans(rows, dim, k, seed + static_cast<std::uint64_t>(r), max_iter);
    if (r == 0 || run.objective.back() < best.objective.back()) best = std::move(run);
  }
  return best;
}

// doc_id -> topic index.
inline Clustering topic_clustering(const TfidfFeatures& f, int k, std::uint64_t seed,
                                   int restarts = 10) {
  const auto r = kmeans_restarts(f.vectors, f.vocabulary.size(), k, seed, restarts);
  Clustering out;
  for (std::size_t i = 0; i < f.doc_ids.size(); ++i) out.assign(f.doc_ids[i], r.labels[i]);
  return out;
}

inline std::map<std::string, std::string> topic_map(const Clustering& topics) {
  std::map<std::string, std::string> out;
  for (const auto& [doc, id] : topics.labels()) out[doc] = std::to_string(id);
  return out;
}

// Gold document topics from topic_gold; documents without one are skipped.
inline Clustering gold_topics(const Corpus& corpus) {
  std::map<std::string, int> ids;
  Clustering out;
  for (const auto& d : corpus.documents()) {
    if (!d.topic_gold) continue;
    auto [it, fresh] = ids.emplace(*d.topic_gold, static_cast<int>(ids.size()));
    out.assign(d.doc_id, it->second);
  }
  return out;
}

struct ClusteringQuality {
  double homogeneity = 0.0;
  double completeness = 0.0;
  double v_measure = 0.0;
  double ari = 0.0;
};

inline ClusteringQuality clustering_quality(const Clustering& pred, const Clustering& gold) {
  if (pred.size() != gold.size()) {
    throw Error(ErrorCode::kCoverageMismatch, "clusterings cover different document sets");
  }
  for (const auto& [k, id] : gold.labels()) {
    if (!pred.contains(k)) throw Error(ErrorCode::kCoverageMismatch, "document '" + k + "' not in prediction");
  }
  std::map<int, std::size_t> gi, pi;
  for (const auto& [k, id] : gold.labels()) gi.emplace(id, gi.size());
  for (const auto& [k, id] : pred.labels()) pi.emplace(id, pi.size());
  std::vector<std::vector<double>> table(gi.size(), std::vector<double>(pi.size(), 0.0));
  for (const auto& [k, id] : gold.labels()) table[gi[id]][pi[pred.at(k)]] += 1;
  const double n = static_cast<double>(gold.size());
  std::vector<double> a(gi.size(), 0.0), b(pi.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      a[i] += table[i][j];
      b[j] += table[i][j];
    }
  }
  auto entropy = [&](const std::vector<double>& m) {
    double h = 0;
    for (double v : m) {
      if (v > 0) h -= (v / n) * std::log(v / n);
    }
    return h;
  };
  double h_gold_given_pred = 0, h_pred_given_gold = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double v = table[i][j];
      if (v <= 0) continue;
      h_gold_given_pred -= (v / n) * std::log(v / b[j]);
      h_pred_given_gold -= (v / n) * std::log(v / a[i]);
    }
  }
  const double h_gold = entropy(a), h_pred = entropy(b);
  ClusteringQuality q;
  q.homogeneity = h_gold == 0 ? 1.0 : 1.0 - h_gold_given_pred / h_gold;
  q.completeness = h_pred == 0 ? 1.0 : 1.0 - h_pred_given_gold / h_pred;
  q.v_measure = q.homogeneity + q.completeness > 0
                    ? 2 * q.homogeneity * q.completeness / (q.homogeneity + q.completeness)
                    : 0.0;

  auto pairs = [](double v) { return v * (v - 1) / 2; };
  double index = 0, sum_a = 0, sum_b = 0;
  for (const auto& row : table) {
    for (double v : row) index += pairs(v);
  }
  for (double v : a) sum_a += pairs(v);
  for (double v : b) sum_b += pairs(v);
  const double total = pairs(n);
  const double expected = total > 0 ? sum_a * sum_b / total : 0.0;
  const double max_index = (sum_a + sum_b) / 2;
  q.ari = max_index == expected ? 1.0 : (index - expected) / (max_index - expected);
  return q;
}

}  // namespace xcoref
