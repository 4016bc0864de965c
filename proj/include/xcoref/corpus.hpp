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

// Corpus domain types and the line-delimited JSON corpus format.
//
// One document per line:
//   {"doc_id": "...", "topic_gold": "...", "tokens": [...],
//    "mentions": [{"mention_id": "...", "kind": "entity"|"event",
//                  "start": 0, "end": 1, "gold_cluster": "...",
//                  "entity_type": "PERSON", "args": [{"role": "ARG0",
//                  "mention_id": "..."}]}]}
//
// topic_gold and gold_cluster are optional. entity_type applies to entity
// mentions, args to event mentions.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "xcoref/clustering.hpp"
#include "xcoref/error.hpp"

namespace xcoref {

enum class MentionKind { kEntity, kEvent };

enum class EntityType { kPerson, kOrg, kTime, kLoc, kOther };

// Integer codes are part of the serialized format.
enum class Role : std::uint8_t { kArg0 = 0, kArg1 = 1, kTime = 2, kLoc = 3 };
inline constexpr int kNumRoles = 4;
inline constexpr std::array<Role, kNumRoles> kAllRoles = {Role::kArg0, Role::kArg1,
                                                          Role::kTime, Role::kLoc};

constexpr std::string_view role_name(Role r) {
  switch (r) {
    case Role::kArg0: return "ARG0";
    case Role::kArg1: return "ARG1";
    case Role::kTime: return "TIME";
    case Role::kLoc: return "LOC";
  }
  return "?";
}

inline std::optional<Role> parse_role(std::string_view s) {
  for (Role r : kAllRoles) {
    if (role_name(r) == s) return r;
  }
  return std::nullopt;
}

constexpr std::string_view entity_type_name(EntityType t) {
  switch (t) {
    case EntityType::kPerson: return "PERSON";
    case EntityType::kOrg: return "ORG";
    case EntityType::kTime: return "TIME";
    case EntityType::kLoc: return "LOC";
    case EntityType::kOther: return "OTHER";
  }
  return "?";
}

inline std::optional<EntityType> parse_entity_type(std::string_view s) {
  for (EntityType t : {EntityType::kPerson, EntityType::kOrg, EntityType::kTime,
                       EntityType::kLoc, EntityType::kOther}) {
    if (entity_type_name(t) == s) return t;
  }
  return std::nullopt;
}

constexpr std::string_view kind_name(MentionKind k) {
  return k == MentionKind::kEntity ? "entity" : "event";
}

inline std::optional<MentionKind> parse_kind(std::string_view s) {
  if (s == "entity") return MentionKind::kEntity;
  if (s == "event") return MentionKind::kEvent;
  return std::nullopt;
}

// TIME entities fill only TIME, LOC entities fill only LOC, and the TIME/LOC
// roles take nothing else.
constexpr bool role_type_compatible(Role role, EntityType type) {
  bool time_role = role == Role::kTime, loc_role = role == Role::kLoc;
  bool time_type = type == EntityType::kTime, loc_type = type == EntityType::kLoc;
  return time_role == time_type && loc_role == loc_type;
}

struct Argument {
  Role role;
  std::string mention_id;
  friend bool operator==(const Argument&, const Argument&) = default;
};

struct Participation {
  std::string trigger_id;
  Role role;
  friend bool operator==(const Participation&, const Participation&) = default;
};

struct Mention {
  std::string mention_id;
  MentionKind kind = MentionKind::kEntity;
  int start = 0;
  int end = 0;
  std::optional<std::string> gold_cluster;
  EntityType entity_type = EntityType::kOther;
  std::vector<Argument> args;                        // events only
  std::vector<Participation> events_participated;    // entities only, derived

  friend bool operator==(const Mention&, const Mention&) = default;
};

struct Document {
  std::string doc_id;
  std::optional<std::string> topic_gold;
  std::vector<std::string> tokens;
  std::vector<Mention> mentions;

  friend bool operator==(const Document&, const Document&) = default;
};

struct MentionRef {
  std::size_t doc = 0;
  std::size_t mention = 0;
};

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(MentionKind mode) : mode_(mode) {}

  MentionKind mode() const { return mode_; }
  const std::vector<Document>& documents() const { return docs_; }
  std::size_t size() const { return docs_.size(); }
  const Document& doc(std::size_t i) const { return docs_[i]; }

  // Number of argument links removed by the TIME/LOC type constraint.
  int dropped_arguments() const { return dropped_arguments_; }

  std::optional<std::size_t> find_doc(const std::string& doc_id) const {
    auto it = doc_index_.find(doc_id);
    if (it == doc_index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<MentionRef> find_mention(const std::string& mention_id) const {
    auto it = mention_index_.find(mention_id);
    if (it == mention_index_.end()) return std::nullopt;
    return it->second;
  }

  const Mention& mention(MentionRef ref) const { return docs_[ref.doc].mentions[ref.mention]; }

  // Validates and normalizes doc, then appends it. Throws on invariant
  // violations; returns the number of dropped argument links.
  int add_document(Document doc) {
    if (doc_index_.count(doc.doc_id)) {
      throw Error(ErrorCode::kDuplicateDocId, "duplicate doc_id '" + doc.doc_id + "'");
    }
    int dropped = normalize(doc);
    std::size_t di = docs_.size();
    for (std::size_t mi = 0; mi < doc.mentions.size(); ++mi) {
      const auto& id = doc.mentions[mi].mention_id;
      if (mention_index_.count(id)) {
        throw Error(ErrorCode::kMalformedRecord, "duplicate mention_id '" + id + "'");
      }
    }
    for (std::size_t mi = 0; mi < doc.mentions.size(); ++mi) {
      mention_index_[doc.mentions[mi].mention_id] = MentionRef{di, mi};
    }
    doc_index_[doc.doc_id] = di;
    docs_.push_back(std::move(doc));
    dropped_arguments_ += dropped;
    return dropped;
  }

  // Mentions of the given kind in document order.
  std::size_t count_mentions(MentionKind kind) const {
    std::size_t n = 0;
    for (const auto& d : docs_) {
      for (const auto& m : d.mentions) n += m.kind == kind;
    }
    return n;
  }

  // Gold clustering over mentions of kind; throws MissingGold if any lacks one.
  Clustering gold_clustering(MentionKind kind) const {
    std::map<std::string, int> ids;
    Clustering out;
    for (const auto& d : docs_) {
      for (const auto& m : d.mentions) {
        if (m.kind != kind) continue;
        if (!m.gold_cluster) {
          throw Error(ErrorCode::kMissingGold, "mention '" + m.mention_id + "' has no gold_cluster");
        }
        auto [it, ins] = ids.emplace(*m.gold_cluster, static_cast<int>(ids.size()));
        out.assign(m.mention_id, it->second);
      }
    }
    return out;
  }

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.mode_ == b.mode_ && a.docs_ == b.docs_ &&
           a.dropped_arguments_ == b.dropped_arguments_;
  }

 private:
  static bool span_less(const Mention& a, const Mention& b) {
    return std::pair(a.start, a.end) < std::pair(b.start, b.end);
  }

  static int normalize(Document& doc) {
    const int n_tokens = static_cast<int>(doc.tokens.size());
    std::unordered_map<std::string, const Mention*> by_id;
    for (const auto& m : doc.mentions) {
      if (m.start < 0 || m.end < m.start || m.end >= n_tokens) {
        throw Error(ErrorCode::kMalformedRecord,
                    "mention '" + m.mention_id + "' span (" + std::to_string(m.start) + ", " +
                        std::to_string(m.end) + ") outside document of " +
                        std::to_string(n_tokens) + " tokens");
      }
      if (m.kind == MentionKind::kEntity && !m.args.empty()) {
        throw Error(ErrorCode::kMalformedRecord,
                    "entity mention '" + m.mention_id + "' carries args");
      }
      by_id[m.mention_id] = &m;
    }
    std::stable_sort(doc.mentions.begin(), doc.mentions.end(), span_less);

    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < doc.mentions.size(); ++i) {
      position[doc.mentions[i].mention_id] = i;
      doc.mentions[i].events_participated.clear();
    }

    int dropped = 0;
    for (auto& m : doc.mentions) {
      if (m.kind != MentionKind::kEvent) continue;
      std::vector<Argument> kept;
      for (auto& a : m.args) {
        auto it = position.find(a.mention_id);
        if (it == position.end() || doc.mentions[it->second].kind != MentionKind::kEntity) {
          throw Error(ErrorCode::kDanglingArgumentRef,
                      "event '" + m.mention_id + "' argument '" + a.mention_id +
                          "' is not an entity mention of document '" + doc.doc_id + "'");
        }
        if (!role_type_compatible(a.role, doc.mentions[it->second].entity_type)) {
          ++dropped;
          continue;
        }
        kept.push_back(std::move(a));
      }
      std::stable_sort(kept.begin(), kept.end(), [&](const Argument& a, const Argument& b) {
        return std::pair(position[a.mention_id], a.role) < std::pair(position[b.mention_id], b.role);
      });
      m.args = std::move(kept);
    }
    // Inverse links, in trigger order since events are visited in order.
    for (const auto& m : doc.mentions) {
      if (m.kind != MentionKind::kEvent) continue;
      for (const auto& a : m.args) {
        doc.mentions[position[a.mention_id]].events_participated.push_back(
            Participation{m.mention_id, a.role});
      }
    }
    return dropped;
  }

  MentionKind mode_ = MentionKind::kEntity;
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> doc_index_;
  std::unordered_map<std::string, MentionRef> mention_index_;
  int dropped_arguments_ = 0;
};

// ---------------------------------------------------------------------------
// JSON mapping

inline nlohmann::json to_json(const Mention& m) {
  nlohmann::json j;
  j["mention_id"] = m.mention_id;
  j["kind"] = kind_name(m.kind);
  j["start"] = m.start;
  j["end"] = m.end;
  if (m.gold_cluster) j["gold_cluster"] = *m.gold_cluster;
  if (m.kind == MentionKind::kEntity) {
    j["entity_type"] = entity_type_name(m.entity_type);
  } else {
    auto args = nlohmann::json::array();
    for (const auto& a : m.args) {
      args.push_back({{"role", role_name(a.role)}, {"mention_id", a.mention_id}});
    }
    j["args"] = std::move(args);
  }
  return j;
}

inline nlohmann::json to_json(const Document& d) {
  nlohmann::json j;
  j["doc_id"] = d.doc_id;
  if (d.topic_gold) j["topic_gold"] = *d.topic_gold;
  j["tokens"] = d.tokens;
  auto mentions = nlohmann::json::array();
  for (const auto& m : d.mentions) mentions.push_back(to_json(m));
  j["mentions"] = std::move(mentions);
  return j;
}

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    throw Error(ErrorCode::kMalformedRecord, std::string("missing field '") + name + "'");
  }
  return j.at(name);
}

inline std::string string_field(const nlohmann::json& j, const char* name) {
  const auto& v = field(j, name);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw Error(ErrorCode::kMalformedRecord, std::string("field '") + name + "' is not a string");
}

inline std::optional<std::string> optional_string(const nlohmann::json& j, const char* name) {
  if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
  return string_field(j, name);
}

inline int int_field(const nlohmann::json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::kMalformedRecord, std::string("field '") + name + "' is not an integer");
  }
  return v.get<int>();
}

}  // namespace detail

inline Mention mention_from_json(const nlohmann::json& j) {
  Mention m;
  m.mention_id = detail::string_field(j, "mention_id");
  auto kind = parse_kind(detail::string_field(j, "kind"));
  if (!kind) throw Error(ErrorCode::kMalformedRecord, "bad kind for '" + m.mention_id + "'");
  m.kind = *kind;
  m.start = detail::int_field(j, "start");
  m.end = detail::int_field(j, "end");
  m.gold_cluster = detail::optional_string(j, "gold_cluster");
  if (auto t = detail::optional_string(j, "entity_type")) {
    auto parsed = parse_entity_type(*t);
    if (!parsed) throw Error(ErrorCode::kMalformedRecord, "bad entity_type '" + *t + "'");
    m.entity_type = *parsed;
  }
  if (j.contains("args") && !j.at("args").is_null()) {
    const auto& args = j.at("args");
    if (!args.is_array()) throw Error(ErrorCode::kMalformedRecord, "args is not an array");
    for (const auto& a : args) {
      auto role_str = detail::string_field(a, "role");
      auto role = parse_role(role_str);
      if (!role) throw Error(ErrorCode::kMalformedRecord, "unknown role '" + role_str + "'");
      m.args.push_back(Argument{*role, detail::string_field(a, "mention_id")});
    }
  }
  return m;
}

inline Document document_from_json(const nlohmann::json& j) {
  Document d;
  d.doc_id = detail::string_field(j, "doc_id");
  d.topic_gold = detail::optional_string(j, "topic_gold");
  const auto& tokens = detail::field(j, "tokens");
  if (!tokens.is_array()) throw Error(ErrorCode::kMalformedRecord, "tokens is not an array");
  for (const auto& t : tokens) {
    if (!t.is_string()) throw Error(ErrorCode::kMalformedRecord, "token is not a string");
    d.tokens.push_back(t.get<std::string>());
  }
  const auto& mentions = detail::field(j, "mentions");
  if (!mentions.is_array()) throw Error(ErrorCode::kMalformedRecord, "mentions is not an array");
  for (const auto& m : mentions) d.mentions.push_back(mention_from_json(m));
  return d;
}

// Parses the line format. Errors carry the 1-based line number.
inline Corpus parse_corpus(std::istream& in, MentionKind mode) {
  Corpus corpus(mode);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      corpus.add_document(document_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.detail());
    }
  }
  return corpus;
}

inline Corpus load_corpus(const std::string& path, MentionKind mode) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open corpus '" + path + "'");
  return parse_corpus(in, mode);
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& d : corpus.documents()) out << to_json(d).dump() << '\n';
}

}  // namespace xcoref
