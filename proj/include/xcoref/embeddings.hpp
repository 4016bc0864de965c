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

// XEMB embedding files:
//
//   "XEMB" u32 version=1 u32 dim u64 doc_count
//   per document: u32 id_len, id bytes, u32 n_tokens,
//                 (n_tokens + 1) * dim f32 values
//
// Vector 0 of a document is its context vector; vectors 1..n are tokens.
// All integers and floats are little-endian.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "xcoref/corpus.hpp"
#include "xcoref/error.hpp"

namespace xcoref {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

struct DocEmbeddings {
  std::vector<float> context;             // dim
  std::vector<std::vector<float>> tokens;  // n_tokens x dim

  friend bool operator==(const DocEmbeddings&, const DocEmbeddings&) = default;
};

class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return docs_.size(); }
  const std::map<std::string, DocEmbeddings>& entries() const { return docs_; }

  void put(const std::string& doc_id, DocEmbeddings emb) {
    check_vector(emb.context, doc_id);
    for (const auto& t : emb.tokens) check_vector(t, doc_id);
    docs_[doc_id] = std::move(emb);
  }

  const DocEmbeddings& at(const std::string& doc_id) const {
    auto it = docs_.find(doc_id);
    if (it == docs_.end()) {
      throw Error(ErrorCode::kMissingDocument, "no embeddings for document '" + doc_id + "'");
    }
    return it->second;
  }

  bool contains(const std::string& doc_id) const { return docs_.count(doc_id) > 0; }

  // Every corpus document present with one vector per token.
  void check_covers(const Corpus& corpus) const {
    for (const auto& d : corpus.documents()) {
      const auto& e = at(d.doc_id);
      if (e.tokens.size() != d.tokens.size()) {
        throw Error(ErrorCode::kDimMismatch,
                    "document '" + d.doc_id + "' has " + std::to_string(d.tokens.size()) +
                        " tokens but " + std::to_string(e.tokens.size()) + " token vectors");
      }
    }
  }

  friend bool operator==(const EmbeddingStore&, const EmbeddingStore&) = default;

 private:
  void check_vector(const std::vector<float>& v, const std::string& doc_id) const {
    if (static_cast<int>(v.size()) != dim_) {
      throw Error(ErrorCode::kDimMismatch, "vector of size " + std::to_string(v.size()) +
                                               " for '" + doc_id + "', store dim " +
                                               std::to_string(dim_));
    }
    for (float x : v) {
      if (!std::isfinite(x)) {
        throw Error(ErrorCode::kMalformedRecord, "non-finite embedding in '" + doc_id + "'");
      }
    }
  }

  int dim_ = 0;
  std::map<std::string, DocEmbeddings> docs_;
};

namespace detail {

template <typename U>
void write_pod(std::ostream& out, U value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(U));
}

template <typename U>
U read_pod(std::istream& in, const char* what) {
  U value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(U));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(U))) {
    throw Error(ErrorCode::kTruncatedFile, std::string("unexpected end of file reading ") + what);
  }
  return value;
}

inline void read_floats(std::istream& in, float* dst, std::size_t n, const char* what) {
  const auto bytes = static_cast<std::streamsize>(n * sizeof(float));
  in.read(reinterpret_cast<char*>(dst), bytes);
  if (in.gcount() != bytes) {
    throw Error(ErrorCode::kTruncatedFile, std::string("unexpected end of file reading ") + what);
  }
}

}  // namespace detail

inline void write_embeddings(std::ostream& out, const EmbeddingStore& store) {
  out.write("XEMB", 4);
  detail::write_pod<std::uint32_t>(out, 1);
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(store.dim()));
  detail::write_pod<std::uint64_t>(out, store.size());
  for (const auto& [id, emb] : store.entries()) {
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(emb.tokens.size()));
    out.write(reinterpret_cast<const char*>(emb.context.data()),
              static_cast<std::streamsize>(emb.context.size() * sizeof(float)));
    for (const auto& t : emb.tokens) {
      out.write(reinterpret_cast<const char*>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(float)));
    }
  }
}

inline void save_embeddings(const std::string& path, const EmbeddingStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
  write_embeddings(out, store);
}

// Reads an XEMB stream. expected_dim, when given, must equal the header dim.
inline EmbeddingStore read_embeddings(std::istream& in, std::optional<int> expected_dim = {}) {
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4) throw Error(ErrorCode::kTruncatedFile, "missing XEMB header");
  if (std::memcmp(magic, "XEMB", 4) != 0) {
    throw Error(ErrorCode::kMalformedRecord, "bad magic, not an XEMB file");
  }
  auto version = detail::read_pod<std::uint32_t>(in, "version");
  if (version != 1) {
    throw Error(ErrorCode::kMalformedRecord, "unsupported XEMB version " + std::to_string(version));
  }
  const auto dim = static_cast<int>(detail::read_pod<std::uint32_t>(in, "dim"));
  if (dim <= 0) throw Error(ErrorCode::kMalformedRecord, "XEMB dim must be positive");
  if (expected_dim && *expected_dim != dim) {
    throw Error(ErrorCode::kDimMismatch, "embedding dim " + std::to_string(dim) +
                                             " but model expects " + std::to_string(*expected_dim));
  }
  const auto n_docs = detail::read_pod<std::uint64_t>(in, "doc_count");
  EmbeddingStore store(dim);
  for (std::uint64_t i = 0; i < n_docs; ++i) {
    auto id_len = detail::read_pod<std::uint32_t>(in, "id length");
    std::string id(id_len, '\0');
    in.read(id.data(), id_len);
    if (in.gcount() != static_cast<std::streamsize>(id_len)) {
      throw Error(ErrorCode::kTruncatedFile, "unexpected end of file reading doc id");
    }
    auto n_tokens = detail::read_pod<std::uint32_t>(in, "token count");
    DocEmbeddings emb;
    emb.context.resize(static_cast<std::size_t>(dim));
    detail::read_floats(in, emb.context.data(), emb.context.size(), "context vector");
    emb.tokens.resize(n_tokens);
    for (auto& t : emb.tokens) {
      t.resize(static_cast<std::size_t>(dim));
      detail::read_floats(in, t.data(), t.size(), "token vector");
    }
    store.put(id, std::move(emb));
  }
  return store;
}

inline EmbeddingStore load_embeddings(const std::string& path, const Corpus& corpus,
                                      std::optional<int> expected_dim = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open embeddings '" + path + "'");
  auto store = read_embeddings(in, expected_dim);
  store.check_covers(corpus);
  return store;
}

}  // namespace xcoref
