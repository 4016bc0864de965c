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

// Trainable tensors and checkpoint persistence.
//
// Checkpoint layout: u32 manifest_len, manifest JSON (config plus tensor
// name/shape/offset entries), then a contiguous little-endian f32 blob.
// Offsets count floats from the start of the blob.

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "xcoref/config.hpp"
#include "xcoref/embeddings.hpp"
#include "xcoref/error.hpp"
#include "xcoref/linalg.hpp"

namespace xcoref {

// One direction of the argument encoder. Gate rows are stacked in the order
// input, forget, cell, output.
template <typename T>
struct LstmParams {
  Mat<T> w_ih;  // 4H x d_in
  Mat<T> w_hh;  // 4H x H
  Vec<T> b;     // 4H
};

template <typename T>
struct ModelParams {
  Mat<T> w_a;  // d_m x (d_m + 2 d_arg): mention affine
  Vec<T> b_a;
  Mat<T> w_x;    // d_m x d_m
  Mat<T> w_cls;  // d_m x d_m
  Vec<T> b_c;
  std::vector<Mat<T>> w_p;  // k of d_p x d_m
  LstmParams<T> fwd;
  LstmParams<T> bwd;
  Mat<T> f_emb;  // 2 x d_f: rows are the "disagree" (0) and "agree" (1) embeddings
  Vec<T> w_o;    // feature_dim
  Vec<T> b_o;    // 1

  static ModelParams zeros(const Config& c) {
    const int dm = c.d_m(), h = c.d_arg;
    ModelParams p;
    p.w_a = Mat<T>::Zero(dm, dm + c.arg_dim());
    p.b_a = Vec<T>::Zero(dm);
    p.w_x = Mat<T>::Zero(dm, dm);
    p.w_cls = Mat<T>::Zero(dm, dm);
    p.b_c = Vec<T>::Zero(dm);
    p.w_p.assign(static_cast<std::size_t>(c.k), Mat<T>::Zero(c.d_p, dm));
    for (LstmParams<T>* l : {&p.fwd, &p.bwd}) {
      l->w_ih = Mat<T>::Zero(4 * h, dm);
      l->w_hh = Mat<T>::Zero(4 * h, h);
      l->b = Vec<T>::Zero(4 * h);
    }
    p.f_emb = Mat<T>::Zero(2, c.d_f);
    p.w_o = Vec<T>::Zero(c.feature_dim());
    p.b_o = Vec<T>::Zero(1);
    return p;
  }

  // Visits (name, data, rows, cols) for every tensor in a fixed order.
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t num_tensors() const {
    std::size_t n = 0;
    visit([&](const std::string&, const T*, Eigen::Index, Eigen::Index) { ++n; });
    return n;
  }

  std::size_t num_values() const {
    std::size_t n = 0;
    visit([&](const std::string&, const T*, Eigen::Index r, Eigen::Index c) {
      n += static_cast<std::size_t>(r * c);
    });
    return n;
  }

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    out.w_a = w_a.template cast<U>();
    out.b_a = b_a.template cast<U>();
    out.w_x = w_x.template cast<U>();
    out.w_cls = w_cls.template cast<U>();
    out.b_c = b_c.template cast<U>();
    for (const auto& m : w_p) out.w_p.push_back(m.template cast<U>());
    out.fwd = {fwd.w_ih.template cast<U>(), fwd.w_hh.template cast<U>(), fwd.b.template cast<U>()};
    out.bwd = {bwd.w_ih.template cast<U>(), bwd.w_hh.template cast<U>(), bwd.b.template cast<U>()};
    out.f_emb = f_emb.template cast<U>();
    out.w_o = w_o.template cast<U>();
    out.b_o = b_o.template cast<U>();
    return out;
  }

  void set_zero() {
    visit([](const std::string&, T* data, Eigen::Index r, Eigen::Index c) {
      std::fill(data, data + r * c, T(0));
    });
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    auto mat = [&](const std::string& name, auto& m) { f(name, m.data(), m.rows(), m.cols()); };
    mat("mention.w_a", self.w_a);
    mat("mention.b_a", self.b_a);
    mat("compose.w_x", self.w_x);
    mat("compose.w_cls", self.w_cls);
    mat("compose.b_c", self.b_c);
    for (std::size_t i = 0; i < self.w_p.size(); ++i) {
      mat("perspective.w_p." + std::to_string(i), self.w_p[i]);
    }
    mat("args.fwd.w_ih", self.fwd.w_ih);
    mat("args.fwd.w_hh", self.fwd.w_hh);
    mat("args.fwd.b", self.fwd.b);
    mat("args.bwd.w_ih", self.bwd.w_ih);
    mat("args.bwd.w_hh", self.bwd.w_hh);
    mat("args.bwd.b", self.bwd.b);
    mat("argfeat.f_emb", self.f_emb);
    mat("output.w_o", self.w_o);
    mat("output.b_o", self.b_o);
  }
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every tensor; a bias shares
// the fan-in of the weight it is added to. The agreement embeddings use
// fan-in 1.
template <typename T>
ModelParams<T> init_params(const Config& c, std::uint64_t seed) {
  c.validate();
  auto p = ModelParams<T>::zeros(c);
  std::mt19937_64 rng(seed);
  auto fill = [&](T* data, Eigen::Index n, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < n; ++i) data[i] = static_cast<T>(dist(rng));
  };
  const double dm = c.d_m();
  fill(p.w_a.data(), p.w_a.size(), static_cast<double>(p.w_a.cols()));
  fill(p.b_a.data(), p.b_a.size(), static_cast<double>(p.w_a.cols()));
  fill(p.w_x.data(), p.w_x.size(), 2 * dm);
  fill(p.w_cls.data(), p.w_cls.size(), 2 * dm);
  fill(p.b_c.data(), p.b_c.size(), 2 * dm);
  for (auto& m : p.w_p) fill(m.data(), m.size(), dm);
  for (LstmParams<T>* l : {&p.fwd, &p.bwd}) {
    const double fan = dm + c.d_arg;
    fill(l->w_ih.data(), l->w_ih.size(), fan);
    fill(l->w_hh.data(), l->w_hh.size(), fan);
    fill(l->b.data(), l->b.size(), fan);
  }
  fill(p.f_emb.data(), p.f_emb.size(), 1.0);
  fill(p.w_o.data(), p.w_o.size(), static_cast<double>(c.feature_dim()));
  fill(p.b_o.data(), p.b_o.size(), static_cast<double>(c.feature_dim()));
  return p;
}

template <typename T>
void save_checkpoint(std::ostream& out, const ModelParams<T>& params, const Config& config) {
  nlohmann::json manifest;
  manifest["format"] = "xcoref-checkpoint";
  manifest["config"] = to_json(config);
  auto tensors = nlohmann::json::array();
  std::size_t offset = 0;
  params.visit([&](const std::string& name, const T*, Eigen::Index r, Eigen::Index c) {
    tensors.push_back({{"name", name}, {"shape", {r, c}}, {"offset", offset}});
    offset += static_cast<std::size_t>(r * c);
  });
  manifest["tensors"] = std::move(tensors);
  manifest["total"] = offset;
  const std::string text = manifest.dump();
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  params.visit([&](const std::string&, const T* data, Eigen::Index r, Eigen::Index c) {
    for (Eigen::Index i = 0; i < r * c; ++i) {
      detail::write_pod<float>(out, static_cast<float>(data[i]));
    }
  });
}

template <typename T>
void save_checkpoint(const std::string& path, const ModelParams<T>& params, const Config& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write checkpoint '" + path + "'");
  save_checkpoint(out, params, config);
}

template <typename T = float>
std::pair<ModelParams<T>, Config> load_checkpoint(std::istream& in) {
  std::uint32_t len = 0;
  try {
    len = detail::read_pod<std::uint32_t>(in, "manifest length");
  } catch (const Error&) {
    throw Error(ErrorCode::kManifestCorrupt, "checkpoint too short");
  }
  std::string text(len, '\0');
  in.read(text.data(), len);
  if (in.gcount() != static_cast<std::streamsize>(len)) {
    throw Error(ErrorCode::kManifestCorrupt, "manifest truncated");
  }
  nlohmann::json manifest;
  Config config;
  try {
    manifest = nlohmann::json::parse(text);
    config = config_from_json(manifest.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kManifestCorrupt, e.what());
  }
  const auto& tensors = manifest.at("tensors");
  auto params = ModelParams<T>::zeros(config);
  if (!tensors.is_array() || tensors.size() != params.num_tensors()) {
    throw Error(ErrorCode::kShapeMismatch,
                "manifest lists " + std::to_string(tensors.is_array() ? tensors.size() : 0) +
                    " tensors, config implies " + std::to_string(params.num_tensors()));
  }
  std::vector<float> blob(params.num_values());
  try {
    detail::read_floats(in, blob.data(), blob.size(), "checkpoint blob");
  } catch (const Error&) {
    throw Error(ErrorCode::kManifestCorrupt, "tensor blob truncated");
  }
  std::size_t index = 0;
  params.visit([&](const std::string& name, T* data, Eigen::Index r, Eigen::Index c) {
    const auto& entry = tensors.at(index++);
    std::vector<Eigen::Index> shape;
    std::size_t offset = 0;
    try {
      shape = entry.at("shape").get<std::vector<Eigen::Index>>();
      offset = entry.at("offset").get<std::size_t>();
      if (entry.at("name").get<std::string>() != name) {
        throw Error(ErrorCode::kShapeMismatch, "expected tensor '" + name + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kManifestCorrupt, e.what());
    }
    if (shape != std::vector<Eigen::Index>{r, c}) {
      throw Error(ErrorCode::kShapeMismatch, "tensor '" + name + "' shape disagrees with config");
    }
    if (offset + static_cast<std::size_t>(r * c) > blob.size()) {
      throw Error(ErrorCode::kManifestCorrupt, "tensor '" + name + "' offset out of range");
    }
    for (Eigen::Index i = 0; i < r * c; ++i) data[i] = static_cast<T>(blob[offset + i]);
  });
  return {std::move(params), config};
}

template <typename T = float>
std::pair<ModelParams<T>, Config> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open checkpoint '" + path + "'");
  return load_checkpoint<T>(in);
}

}  // namespace xcoref
