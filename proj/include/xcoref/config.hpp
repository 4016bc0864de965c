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

#include <cstdint>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "xcoref/corpus.hpp"
#include "xcoref/error.hpp"

namespace xcoref {

struct Config {
  int d_tok = 768;
  int d_arg = 128;  // recurrent hidden size per direction
  int d_f = 50;     // argument-agreement embedding size
  int k = 1;        // number of cosine perspectives
  int d_p = 50;     // perspective projection size
  MentionKind mode = MentionKind::kEntity;
  int k_topics = 20;
  double learning_rate = 1e-3;
  double clip_norm = 30.0;
  int max_epochs = 80;
  int patience = 20;
  std::uint64_t seed = 0;
  // Event mode only: when false the argument-agreement slot is held at zero.
  bool use_arg_feature = true;

  int d_m() const { return 2 * d_tok; }
  int arg_dim() const { return 2 * d_arg; }
  bool event_mode() const { return mode == MentionKind::kEvent; }

  // [product (d_m); |difference| (d_m); cosine (1); perspectives (k); argument agreement (d_f, event mode)]
  int feature_dim() const { return 2 * d_m() + 1 + k + (event_mode() ? d_f : 0); }

  static Config for_mode(MentionKind mode) {
    Config c;
    c.mode = mode;
    c.k = mode == MentionKind::kEvent ? 3 : 1;
    return c;
  }

  void validate() const {
    auto positive = [](int v, const char* name) {
      if (v <= 0) throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must be positive");
    };
    positive(d_tok, "d_tok");
    positive(d_arg, "d_arg");
    positive(d_f, "d_f");
    positive(k, "k");
    positive(d_p, "d_p");
    positive(k_topics, "k_topics");
    positive(max_epochs, "max_epochs");
    if (patience < 0) throw Error(ErrorCode::kInvalidArgument, "patience must be >= 0");
    if (!(learning_rate > 0)) throw Error(ErrorCode::kInvalidArgument, "learning_rate must be > 0");
    if (!(clip_norm > 0)) throw Error(ErrorCode::kInvalidArgument, "clip_norm must be > 0");
  }

  friend bool operator==(const Config&, const Config&) = default;
};

inline nlohmann::json to_json(const Config& c) {
  return {{"d_tok", c.d_tok},
          {"d_m", c.d_m()},
          {"d_arg", c.d_arg},
          {"d_f", c.d_f},
          {"k", c.k},
          {"d_p", c.d_p},
          {"mode", kind_name(c.mode)},
          {"k_topics", c.k_topics},
          {"learning_rate", c.learning_rate},
          {"clip_norm", c.clip_norm},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"seed", c.seed},
          {"use_arg_feature", c.use_arg_feature}};
}

// Applies the keys present in j on top of base. Unknown keys are rejected.
inline Config config_from_json(const nlohmann::json& j, Config base = {}) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "config must be an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "d_tok") base.d_tok = value.get<int>();
      else if (key == "d_m") {
        // derived; accepted for round-tripping and checked below
      } else if (key == "d_arg") base.d_arg = value.get<int>();
      else if (key == "d_f") base.d_f = value.get<int>();
      else if (key == "k") base.k = value.get<int>();
      else if (key == "d_p") base.d_p = value.get<int>();
      else if (key == "mode") {
        auto mode = parse_kind(value.get<std::string>());
        if (!mode) throw Error(ErrorCode::kInvalidArgument, "mode must be entity or event");
        base.mode = *mode;
      } else if (key == "k_topics") base.k_topics = value.get<int>();
      else if (key == "learning_rate") base.learning_rate = value.get<double>();
      else if (key == "clip_norm") base.clip_norm = value.get<double>();
      else if (key == "max_epochs") base.max_epochs = value.get<int>();
      else if (key == "patience") base.patience = value.get<int>();
      else if (key == "seed") base.seed = value.get<std::uint64_t>();
      else if (key == "use_arg_feature") base.use_arg_feature = value.get<bool>();
      else throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad config value: ") + e.what());
  }
  if (j.contains("d_m") && j.at("d_m").get<int>() != base.d_m()) {
    throw Error(ErrorCode::kShapeMismatch, "d_m must equal 2 * d_tok");
  }
  base.validate();
  return base;
}

inline Config load_config(const std::string& path, Config base = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config '" + path + "'");
  try {
    return config_from_json(nlohmann::json::parse(in), base);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("config parse error: ") + e.what());
  }
}

}  // namespace xcoref
