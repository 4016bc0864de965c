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

#include <Eigen/Core>

#include <cstddef>
#include <string>

#include "xcoref/error.hpp"

namespace xcoref {

// Row-major so that data() is the serialized layout.
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

inline void check_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::kDimMismatch, std::string(what) + ": expected " +
                                             std::to_string(want) + ", got " +
                                             std::to_string(got));
  }
}

template <typename T>
Vec<T> concat(const Vec<T>& a, const Vec<T>& b) {
  Vec<T> out(a.size() + b.size());
  out << a, b;
  return out;
}

template <typename T>
bool all_finite(const Vec<T>& v) {
  return v.allFinite();
}

}  // namespace xcoref
