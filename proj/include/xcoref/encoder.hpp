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

// Mention representations.
//
// A mention is encoded from the embeddings of its first and last token
// (h_span) and an aggregate of its related mentions (h_args): the triggers of
// the events an entity participates in, or the argument entities of an event.
// The aggregate is a single-layer bidirectional LSTM, mean-pooled over steps.
// h_x = W_a [h_span; h_args] + b_a.

#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "xcoref/corpus.hpp"
#include "xcoref/embeddings.hpp"
#include "xcoref/linalg.hpp"
#include "xcoref/params.hpp"

namespace xcoref {

template <typename T>
Vec<T> encode_span(const Vec<T>& start, const Vec<T>& end) {
  check_dim(end.size(), start.size(), "span end vector");
  return concat(start, end);
}

template <typename T>
struct LstmStep {
  Vec<T> i, f, g, o;  // gate activations
  Vec<T> c, tanh_c, h;
};

namespace detail {

template <typename T>
T sigmoid(T z) {
  return T(1) / (T(1) + std::exp(-z));
}

// Runs one direction over inputs, back to front when reverse is set.
template <typename T>
std::vector<LstmStep<T>> lstm_run(const LstmParams<T>& p, const std::vector<Vec<T>>& inputs,
                                  bool reverse) {
  const Eigen::Index hidden = p.w_hh.cols();
  std::vector<LstmStep<T>> steps;
  steps.reserve(inputs.size());
  Vec<T> h = Vec<T>::Zero(hidden), c = Vec<T>::Zero(hidden);
  const std::size_t n = inputs.size();
  for (std::size_t s = 0; s < n; ++s) {
    const Vec<T>& x = inputs[reverse ? n - 1 - s : s];
    Vec<T> z = p.w_ih * x + p.w_hh * h + p.b;
    LstmStep<T> st;
    st.i = z.segment(0, hidden).unaryExpr([](T v) { return sigmoid(v); });
    st.f = z.segment(hidden, hidden).unaryExpr([](T v) { return sigmoid(v); });
    st.g = z.segment(2 * hidden, hidden).array().tanh().matrix();
    st.o = z.segment(3 * hidden, hidden).unaryExpr([](T v) { return sigmoid(v); });
    st.c = (st.f.array() * c.array() + st.i.array() * st.g.array()).matrix();
    st.tanh_c = st.c.array().tanh().matrix();
    st.h = (st.o.array() * st.tanh_c.array()).matrix();
    h = st.h;
    c = st.c;
    steps.push_back(std::move(st));
  }
  return steps;
}

// d_h[s] is the adjoint of steps[s].h; accumulates parameter gradients.
template <typename T>
void lstm_backward(const LstmParams<T>& p, const std::vector<Vec<T>>& inputs, bool reverse,
                   const std::vector<LstmStep<T>>& steps, const std::vector<Vec<T>>& d_h,
                   LstmParams<T>& grad) {
  const Eigen::Index hidden = p.w_hh.cols();
  const std::size_t n = steps.size();
  Vec<T> dh_next = Vec<T>::Zero(hidden), dc_next = Vec<T>::Zero(hidden);
  for (std::size_t s = n; s-- > 0;) {
    const auto& st = steps[s];
    const Vec<T>& x = inputs[reverse ? n - 1 - s : s];
    Vec<T> c_prev = s > 0 ? steps[s - 1].c : Vec<T>::Zero(hidden);
    Vec<T> h_prev = s > 0 ? steps[s - 1].h : Vec<T>::Zero(hidden);

    Vec<T> dh = d_h[s] + dh_next;
    Vec<T> d_o = (dh.array() * st.tanh_c.array()).matrix();
    Vec<T> dc =
        dc_next + (dh.array() * st.o.array() * (T(1) - st.tanh_c.array().square())).matrix();
    Vec<T> d_i = (dc.array() * st.g.array()).matrix();
    Vec<T> d_g = (dc.array() * st.i.array()).matrix();
    Vec<T> d_f = (dc.array() * c_prev.array()).matrix();
    dc_next = (dc.array() * st.f.array()).matrix();

    Vec<T> dz(4 * hidden);
    dz.segment(0, hidden) = (d_i.array() * st.i.array() * (T(1) - st.i.array())).matrix();
    dz.segment(hidden, hidden) = (d_f.array() * st.f.array() * (T(1) - st.f.array())).matrix();
    dz.segment(2 * hidden, hidden) = (d_g.array() * (T(1) - st.g.array().square())).matrix();
    dz.segment(3 * hidden, hidden) = (d_o.array() * st.o.array() * (T(1) - st.o.array())).matrix();

    grad.w_ih.noalias() += dz * x.transpose();
    grad.w_hh.noalias() += dz * h_prev.transpose();
    grad.b += dz;
    dh_next = p.w_hh.transpose() * dz;
  }
}

}  // namespace detail

template <typename T>
struct ArgEncoding {
  Vec<T> value;  // 2 d_arg
  std::vector<LstmStep<T>> fwd;
  std::vector<LstmStep<T>> bwd;  // bwd[s] consumed inputs[n - 1 - s]
};

// Mean over steps of [forward h_t; backward h_t]. An empty list encodes to 0.
template <typename T>
ArgEncoding<T> encode_args(const std::vector<Vec<T>>& args, const ModelParams<T>& p) {
  const Eigen::Index hidden = p.fwd.w_hh.cols();
  for (const auto& a : args) check_dim(a.size(), p.fwd.w_ih.cols(), "argument vector");
  ArgEncoding<T> enc;
  enc.value = Vec<T>::Zero(2 * hidden);
  if (args.empty()) return enc;
  enc.fwd = detail::lstm_run(p.fwd, args, false);
  enc.bwd = detail::lstm_run(p.bwd, args, true);
  const std::size_t n = args.size();
  for (std::size_t t = 0; t < n; ++t) {
    enc.value.head(hidden) += enc.fwd[t].h;
    enc.value.tail(hidden) += enc.bwd[n - 1 - t].h;
  }
  enc.value /= static_cast<T>(n);
  return enc;
}

template <typename T>
Vec<T> aggregate_args(const std::vector<Vec<T>>& args, const ModelParams<T>& p) {
  return encode_args(args, p).value;
}

template <typename T>
void encode_args_backward(const std::vector<Vec<T>>& args, const ArgEncoding<T>& enc,
                          const Vec<T>& d_value, const ModelParams<T>& p, ModelParams<T>& grad) {
  if (args.empty()) return;
  const Eigen::Index hidden = p.fwd.w_hh.cols();
  const T scale = T(1) / static_cast<T>(args.size());
  std::vector<Vec<T>> d_fwd(args.size(), d_value.head(hidden) * scale);
  std::vector<Vec<T>> d_bwd(args.size(), d_value.tail(hidden) * scale);
  detail::lstm_backward(p.fwd, args, false, enc.fwd, d_fwd, grad.fwd);
  detail::lstm_backward(p.bwd, args, true, enc.bwd, d_bwd, grad.bwd);
}

template <typename T>
Vec<T> compose_mention(const Vec<T>& h_span, const Vec<T>& h_args, const ModelParams<T>& p) {
  check_dim(h_span.size() + h_args.size(), p.w_a.cols(), "mention composition input");
  return p.w_a * concat(h_span, h_args) + p.b_a;
}

// Parameter-independent inputs of one mention.
template <typename T>
struct MentionInputs {
  std::string mention_id;
  Vec<T> h_span;
  std::vector<Vec<T>> args;
};

template <typename T>
struct MentionEncoding {
  Vec<T> input;  // [h_span; h_args]
  ArgEncoding<T> args;
  Vec<T> h_x;
};

template <typename T>
MentionEncoding<T> encode_mention(const MentionInputs<T>& in, const ModelParams<T>& p) {
  MentionEncoding<T> enc;
  enc.args = encode_args(in.args, p);
  enc.input = concat(in.h_span, enc.args.value);
  check_dim(enc.input.size(), p.w_a.cols(), "mention composition input");
  enc.h_x = p.w_a * enc.input + p.b_a;
  return enc;
}

template <typename T>
void encode_mention_backward(const MentionInputs<T>& in, const MentionEncoding<T>& enc,
                             const Vec<T>& d_hx, const ModelParams<T>& p, ModelParams<T>& grad) {
  grad.w_a.noalias() += d_hx * enc.input.transpose();
  grad.b_a += d_hx;
  const Eigen::Index span_dim = in.h_span.size();
  Vec<T> d_args = p.w_a.rightCols(p.w_a.cols() - span_dim).transpose() * d_hx;
  encode_args_backward(in.args, enc.args, d_args, p, grad);
}

template <typename T>
Vec<T> to_vec(const std::vector<float>& v) {
  return Eigen::Map<const Eigen::VectorXf>(v.data(), static_cast<Eigen::Index>(v.size()))
      .template cast<T>();
}

// Inputs for every mention of `kind` in doc, in document order.
template <typename T>
std::vector<MentionInputs<T>> document_inputs(const Document& doc, const DocEmbeddings& emb,
                                              MentionKind kind) {
  if (emb.tokens.size() != doc.tokens.size()) {
    throw Error(ErrorCode::kDimMismatch, "embedding/token count mismatch for '" + doc.doc_id + "'");
  }
  std::unordered_map<std::string, const Mention*> by_id;
  for (const auto& m : doc.mentions) by_id[m.mention_id] = &m;
  auto span = [&](const Mention& m) {
    return encode_span(to_vec<T>(emb.tokens[static_cast<std::size_t>(m.start)]),
                       to_vec<T>(emb.tokens[static_cast<std::size_t>(m.end)]));
  };
  std::vector<MentionInputs<T>> out;
  for (const auto& m : doc.mentions) {
    if (m.kind != kind) continue;
    MentionInputs<T> in;
    in.mention_id = m.mention_id;
    in.h_span = span(m);
    if (kind == MentionKind::kEntity) {
      for (const auto& ev : m.events_participated) in.args.push_back(span(*by_id.at(ev.trigger_id)));
    } else {
      for (const auto& a : m.args) in.args.push_back(span(*by_id.at(a.mention_id)));
    }
    out.push_back(std::move(in));
  }
  return out;
}

}  // namespace xcoref
