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

// Synthetic corpora with known clusters and topics.
//
// Every gold cluster gets a centroid on the sphere of radius `separation`;
// the first and last token vectors of a mention are centroid + N(0, 1).
// Document context vectors are a topic centroid + N(0, 1). Mention tokens
// are random topic-specific ids ("tok_17"); between mentions sit stop words
// and three-word phrases drawn from a per-topic pool or, less often, from a
// pool shared by all topics.
//
// Event corpora carry one entity mention per argument. Event clusters 2j and
// 2j+1 share a trigger centroid; each event cluster has its own entity
// cluster per role, swapped for another one with probability arg_noise, so
// only argument coreference tells paired clusters apart.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "xcoref/clustering.hpp"
#include "xcoref/corpus.hpp"
#include "xcoref/embeddings.hpp"
#include "xcoref/error.hpp"

namespace xcoref {

struct SynthConfig {
  int n_topics = 2;
  int docs_per_topic = 10;
  int clusters_per_topic = 8;
  int mentions_per_doc = 6;
  int d_tok = 16;
  double separation = 8.0;
  bool event_mode = false;
  int args_per_event = 2;
  std::uint64_t seed = 0;
  // Draws documents from the world of `seed` (centroids, phrase pools) with
  // their own randomness; unset means seed.
  std::optional<std::uint64_t> sample_seed;
  // Event mode: centroid radius of argument entity clusters, and the chance
  // that an argument is drawn from another event's entity cluster.
  double arg_separation = 0.5;
  double arg_noise = 0.1;
  int vocab_per_topic = 50;

  void validate() const {
    auto positive = [](int v, const char* name) {
      if (v <= 0) throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must be positive");
    };
    positive(n_topics, "n_topics");
    positive(docs_per_topic, "docs_per_topic");
    positive(clusters_per_topic, "clusters_per_topic");
    positive(mentions_per_doc, "mentions_per_doc");
    positive(d_tok, "d_tok");
    positive(vocab_per_topic, "vocab_per_topic");
    if (!(separation >= 0) || !(arg_separation >= 0)) {
      throw Error(ErrorCode::kInvalidArgument, "separation must be non-negative");
    }
    if (!(arg_noise >= 0 && arg_noise <= 1)) {
      throw Error(ErrorCode::kInvalidArgument, "arg_noise must lie in [0, 1]");
    }
    if (event_mode && (args_per_event < 1 || args_per_event > kNumRoles)) {
      throw Error(ErrorCode::kInvalidArgument, "args_per_event must lie in [1, 4]");
    }
    if (static_cast<long long>(clusters_per_topic) >
        static_cast<long long>(docs_per_topic) * mentions_per_doc) {
      throw Error(ErrorCode::kInfeasibleConfig,
                  std::to_string(clusters_per_topic) + " clusters per topic but only " +
                      std::to_string(docs_per_topic * mentions_per_doc) + " mentions");
    }
  }
};

struct SynthCorpus {
  Corpus corpus;
  EmbeddingStore embeddings;
  Clustering gold;         // mentions of the corpus mode
  Clustering entity_gold;  // entity mentions (event corpora)
  Clustering topics;       // doc_id -> topic
};

namespace detail {

class SynthRng {
 public:
  SynthRng(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
    rng_.seed(seq);
  }

  double normal() { return normal_(rng_); }
  double uniform() { return uniform_(rng_); }
  int below(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  std::vector<float> sphere(int d, double radius) {
    std::vector<double> v(static_cast<std::size_t>(d));
    double sq = 0;
    for (auto& x : v) {
      x = normal();
      sq += x * x;
    }
    const double scale = sq > 0 ? radius / std::sqrt(sq) : 0.0;
    std::vector<float> out;
    for (double x : v) out.push_back(static_cast<float>(x * scale));
    return out;
  }

  std::vector<float> around(const std::vector<float>& centre) {
    std::vector<float> out(centre.size());
    for (std::size_t i = 0; i < centre.size(); ++i) out[i] = centre[i] + static_cast<float>(normal());
    return out;
  }

  template <typename V>
  void shuffle(V& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(below(static_cast<int>(i)))]);
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

inline std::string padded(int v, int width) {
  std::string s = std::to_string(v);
  return std::string(s.size() < static_cast<std::size_t>(width) ? width - s.size() : 0, '0') + s;
}

}  // namespace detail

// Gold cluster of every mention slot of a topic: each cluster at least once,
// the rest uniform, in shuffled order.
inline std::vector<int> synth_slots(const SynthConfig& c, detail::SynthRng& rng) {
  const int slots = c.docs_per_topic * c.mentions_per_doc;
  std::vector<int> out(static_cast<std::size_t>(slots));
  for (int s = 0; s < slots; ++s) out[static_cast<std::size_t>(s)] = s < c.clusters_per_topic ? s : rng.below(c.clusters_per_topic);
  rng.shuffle(out);
  return out;
}

inline SynthCorpus generate_synthetic(const SynthConfig& c) {
  c.validate();
  detail::SynthRng world(c.seed, 0);
  detail::SynthRng rng(c.sample_seed.value_or(c.seed), 1);
  static const char* kStop[] = {"the", "a", "of", "and", "in", "to"};
  const MentionKind mode = c.event_mode ? MentionKind::kEvent : MentionKind::kEntity;
  SynthCorpus out{Corpus(mode), EmbeddingStore(c.d_tok), {}, {}, {}};

  auto topic_word = [&](detail::SynthRng& r, int t) {
    return "tok_" + std::to_string(t * c.vocab_per_topic + r.below(c.vocab_per_topic));
  };
  auto make_phrases = [&](const std::function<std::string()>& word) {
    std::vector<std::vector<std::string>> out;
    for (int i = 0; i < 6; ++i) out.push_back({word(), word(), word()});
    return out;
  };
  const auto shared_phrases = make_phrases([&] { return "tok_g" + std::to_string(world.below(20)); });

  struct TopicWorld {
    std::vector<float> centre;
    std::vector<std::vector<float>> centres;
    std::vector<std::vector<std::vector<float>>> arg_centres;  // [cluster][role]
    std::vector<std::vector<std::string>> phrases;
  };
  std::vector<TopicWorld> topics;
  for (int t = 0; t < c.n_topics; ++t) {
    TopicWorld w;
    w.centre = world.sphere(c.d_tok, c.separation);
    for (int k = 0; k < c.clusters_per_topic; ++k) {
      // Paired event clusters reuse the centroid of the even member.
      if (c.event_mode && k % 2 == 1) {
        w.centres.push_back(w.centres.back());
      } else {
        w.centres.push_back(world.sphere(c.d_tok, c.separation));
      }
    }
    if (c.event_mode) {
      for (int k = 0; k < c.clusters_per_topic; ++k) {
        std::vector<std::vector<float>> roles;
        for (int r = 0; r < c.args_per_event; ++r) roles.push_back(world.sphere(c.d_tok, c.arg_separation));
        w.arg_centres.push_back(std::move(roles));
      }
    }
    w.phrases = make_phrases([&] { return topic_word(world, t); });
    topics.push_back(std::move(w));
  }

  std::map<std::string, int> gold_ids, entity_ids;
  auto label = [](std::map<std::string, int>& ids, const std::string& g) {
    return ids.emplace(g, static_cast<int>(ids.size())).first->second;
  };

  for (int t = 0; t < c.n_topics; ++t) {
    const auto& topic_centre = topics[static_cast<std::size_t>(t)].centre;
    const auto& centres = topics[static_cast<std::size_t>(t)].centres;
    const auto& arg_centres = topics[static_cast<std::size_t>(t)].arg_centres;
    const auto& phrases = topics[static_cast<std::size_t>(t)].phrases;
    const auto slots = synth_slots(c, rng);
    const std::string topic = "T" + std::to_string(t);

    for (int d = 0; d < c.docs_per_topic; ++d) {
      Document doc;
      doc.doc_id = "t" + detail::padded(t, 2) + "_d" + detail::padded(d, 3);
      doc.topic_gold = topic;
      DocEmbeddings emb;
      emb.context = rng.around(topic_centre);
      auto push_token = [&](std::string word, std::vector<float> vec) {
        doc.tokens.push_back(std::move(word));
        emb.tokens.push_back(std::move(vec));
        return static_cast<int>(doc.tokens.size()) - 1;
      };
      const std::vector<float> zero(static_cast<std::size_t>(c.d_tok), 0.f);
      auto stop = [&]() { push_token(kStop[rng.below(6)], rng.around(zero)); };
      auto phrase = [&]() {
        const auto& pool = rng.uniform() < 0.3 ? shared_phrases : phrases;
        for (const auto& w : pool[static_cast<std::size_t>(rng.below(static_cast<int>(pool.size())))]) {
          push_token(w, rng.around(zero));
        }
      };
      int next_mention = 0;
      auto mention_id = [&]() { return doc.doc_id + "_m" + detail::padded(next_mention++, 3); };

      phrase();
      for (int j = 0; j < c.mentions_per_doc; ++j) {
        const int k = slots[static_cast<std::size_t>(d * c.mentions_per_doc + j)];
        const auto& centre = centres[static_cast<std::size_t>(k)];
        Mention m;
        m.mention_id = mention_id();
        m.kind = mode;
        stop();
        if (!c.event_mode) {
          const int len = 1 + rng.below(2);
          m.start = push_token(topic_word(rng, t), rng.around(centre));
          m.end = len == 2 ? push_token(topic_word(rng, t), rng.around(centre)) : m.start;
          m.gold_cluster = "t" + std::to_string(t) + "_c" + std::to_string(k);
          out.gold.assign(m.mention_id, label(gold_ids, *m.gold_cluster));
          doc.mentions.push_back(std::move(m));
        } else {
          m.start = m.end = push_token(topic_word(rng, t), rng.around(centre));
          m.gold_cluster = "t" + std::to_string(t) + "_v" + std::to_string(k);
          out.gold.assign(m.mention_id, label(gold_ids, *m.gold_cluster));
          for (int r = 0; r < c.args_per_event; ++r) {
            int owner = k;
            if (c.clusters_per_topic > 1 && rng.uniform() < c.arg_noise) {
              owner = (k + 1 + rng.below(c.clusters_per_topic - 1)) % c.clusters_per_topic;
            }
            stop();
            Mention e;
            e.mention_id = mention_id();
            e.kind = MentionKind::kEntity;
            e.start = e.end = push_token(
                topic_word(rng, t), rng.around(arg_centres[static_cast<std::size_t>(owner)][static_cast<std::size_t>(r)]));
            const Role role = kAllRoles[static_cast<std::size_t>(r)];
            e.entity_type = role == Role::kArg0   ? EntityType::kPerson
                            : role == Role::kArg1 ? EntityType::kOrg
                            : role == Role::kTime ? EntityType::kTime
                                                  : EntityType::kLoc;
            e.gold_cluster = "t" + std::to_string(t) + "_e" + std::to_string(owner) + "_" +
                             std::string(role_name(role));
            out.entity_gold.assign(e.mention_id, label(entity_ids, *e.gold_cluster));
            m.args.push_back({role, e.mention_id});
            doc.mentions.push_back(std::move(e));
          }
          doc.mentions.push_back(std::move(m));
        }
        stop();
        phrase();
      }
      out.topics.assign(doc.doc_id, t);
      out.embeddings.put(doc.doc_id, std::move(emb));
      out.corpus.add_document(std::move(doc));
    }
  }
  if (!c.event_mode) out.entity_gold = out.gold;
  return out;
}

}  // namespace xcoref
