// Copyright 2026 The segfoley Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SEGFOLEY_NN_HPP_
#define SEGFOLEY_NN_HPP_

#include <memory>
#include <string>
#include <vector>

#include "segfoley/autograd.hpp"
#include "segfoley/rng.hpp"

namespace segfoley {

template <typename S>
using ParamList = std::vector<Param<S>*>;

template <typename S>
void fill_normal(Mat<S>& m, Rng& rng, double std_dev) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = static_cast<S>(rng.normal() * std_dev);
}

// Additive low-rank delta on a frozen projection: y += (alpha/rank) * x*A*B.
// B starts at zero so attaching the adapter does not change the output.
template <typename S>
struct LoraPair {
  Param<S> a;
  Param<S> b;
  int rank = 0;
  double alpha = 0.0;

  LoraPair(const std::string& prefix, Eigen::Index in, Eigen::Index out,
           int r, double al, Rng& rng)
      : a(prefix + ".lora_a", in, r),
        b(prefix + ".lora_b", r, out),
        rank(r),
        alpha(al) {
    fill_normal(a.value, rng, 1.0 / std::sqrt(double(in)));
    // b stays zero
  }
};

template <typename S>
struct Linear {
  Param<S> w;  // in x out
  Param<S> b;  // 1 x out
  std::unique_ptr<LoraPair<S>> lora;

  Linear() = default;
  Linear(const std::string& prefix, Eigen::Index in, Eigen::Index out, Rng& rng)
      : w(prefix + ".w", in, out), b(prefix + ".b", 1, out) {
    fill_normal(w.value, rng, 1.0 / std::sqrt(double(in)));
  }

  Eigen::Index in_dim() const { return w.value.rows(); }
  Eigen::Index out_dim() const { return w.value.cols(); }

  typename Tape<S>::Var forward(Tape<S>& t, typename Tape<S>::Var x) {
    auto y = t.add_rowvec(t.matmul(x, t.param(w)), t.param(b));
    if (lora) {
      auto delta = t.matmul(t.matmul(x, t.param(lora->a)), t.param(lora->b));
      y = t.add(y, t.scale(delta, static_cast<S>(lora->alpha / lora->rank)));
    }
    return y;
  }

  void attach_lora(int rank, double alpha, Rng& rng) {
    lora = std::make_unique<LoraPair<S>>(w.name.substr(0, w.name.size() - 2),
                                         in_dim(), out_dim(), rank, alpha, rng);
    w.trainable = false;
    b.trainable = false;
  }

  // Base tensors only; LoRA pairs are collected separately so checkpoints
  // can keep them in their own section.
  void collect(ParamList<S>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
};

template <typename S>
struct LayerNorm {
  Param<S> gain;
  Param<S> bias;

  LayerNorm() = default;
  LayerNorm(const std::string& prefix, Eigen::Index dim)
      : gain(prefix + ".gain", 1, dim), bias(prefix + ".bias", 1, dim) {
    gain.value.setOnes();
  }

  typename Tape<S>::Var forward(Tape<S>& t, typename Tape<S>::Var x) {
    return t.layernorm_rows(x, t.param(gain), t.param(bias));
  }

  void collect(ParamList<S>& out) {
    out.push_back(&gain);
    out.push_back(&bias);
  }
};

template <typename S>
struct MultiHeadAttention {
  int n_heads = 1;
  Linear<S> wq, wk, wv, wo;

  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& prefix, Eigen::Index dim, int heads,
                     Rng& rng)
      : n_heads(heads),
        wq(prefix + ".wq", dim, dim, rng),
        wk(prefix + ".wk", dim, dim, rng),
        wv(prefix + ".wv", dim, dim, rng),
        wo(prefix + ".wo", dim, dim, rng) {
    if (dim % heads != 0) throw ConfigError("attention dim not divisible by heads");
  }

  // Queries from q_in (N x dim), keys/values from kv_in (M x dim).
  typename Tape<S>::Var forward(Tape<S>& t, typename Tape<S>::Var q_in,
                                typename Tape<S>::Var kv_in) {
    const Eigen::Index dim = wq.out_dim();
    const Eigen::Index dh = dim / n_heads;
    auto q = wq.forward(t, q_in);
    auto k = wk.forward(t, kv_in);
    auto v = wv.forward(t, kv_in);
    std::vector<typename Tape<S>::Var> heads;
    heads.reserve(n_heads);
    const S inv_sqrt = static_cast<S>(1.0 / std::sqrt(double(dh)));
    for (int h = 0; h < n_heads; ++h) {
      auto qh = t.slice_cols(q, h * dh, dh);
      auto kh = t.slice_cols(k, h * dh, dh);
      auto vh = t.slice_cols(v, h * dh, dh);
      auto scores = t.scale(t.matmul(qh, kh, false, true), inv_sqrt);
      auto attn = t.softmax_rows(scores);
      heads.push_back(t.matmul(attn, vh));
    }
    auto merged = n_heads == 1 ? heads[0] : t.concat_cols(heads);
    return wo.forward(t, merged);
  }

  void collect(ParamList<S>& out) {
    wq.collect(out);
    wk.collect(out);
    wv.collect(out);
    wo.collect(out);
  }
};

template <typename S>
struct FeedForward {
  Linear<S> fc1, fc2;

  FeedForward() = default;
  FeedForward(const std::string& prefix, Eigen::Index dim, Eigen::Index hidden,
              Rng& rng)
      : fc1(prefix + ".fc1", dim, hidden, rng),
        fc2(prefix + ".fc2", hidden, dim, rng) {}

  typename Tape<S>::Var forward(Tape<S>& t, typename Tape<S>::Var x) {
    return fc2.forward(t, t.gelu(fc1.forward(t, x)));
  }

  void collect(ParamList<S>& out) {
    fc1.collect(out);
    fc2.collect(out);
  }
};

// Pre-norm transformer block: h += Attn(LN(h)); h += FFN(LN(h)).
template <typename S>
struct TransformerBlock {
  LayerNorm<S> ln1, ln2;
  MultiHeadAttention<S> attn;
  FeedForward<S> ffn;

  TransformerBlock() = default;
  TransformerBlock(const std::string& prefix, Eigen::Index dim, int heads,
                   Eigen::Index ffn_hidden, Rng& rng)
      : ln1(prefix + ".ln1", dim),
        ln2(prefix + ".ln2", dim),
        attn(prefix + ".attn", dim, heads, rng),
        ffn(prefix + ".ffn", dim, ffn_hidden, rng) {}

  typename Tape<S>::Var forward(Tape<S>& t, typename Tape<S>::Var h) {
    auto n1 = ln1.forward(t, h);
    h = t.add(h, attn.forward(t, n1, n1));
    h = t.add(h, ffn.forward(t, ln2.forward(t, h)));
    return h;
  }

  void collect(ParamList<S>& out) {
    ln1.collect(out);
    ln2.collect(out);
    attn.collect(out);
    ffn.collect(out);
  }
};

// Gated cross-attention adapter:
//   h'  = h  + tanh(gamma) * CrossAttn(h, f)
//   h'' = h' + tanh(beta)  * FFN(h')
// gamma and beta start at zero, making the adapter an exact no-op.
template <typename S>
struct GatedAdapter {
  Param<S> gamma;
  Param<S> beta;
  MultiHeadAttention<S> cross;
  FeedForward<S> ffn;

  GatedAdapter() = default;
  GatedAdapter(const std::string& prefix, Eigen::Index dim, int heads,
               Eigen::Index ffn_hidden, Rng& rng)
      : gamma(prefix + ".gamma", 1, 1),
        beta(prefix + ".beta", 1, 1),
        cross(prefix + ".cross", dim, heads, rng),
        ffn(prefix + ".ffn", dim, ffn_hidden, rng) {}

  typename Tape<S>::Var forward(Tape<S>& t, typename Tape<S>::Var h,
                                typename Tape<S>::Var f) {
    h = t.add(h, t.tanh_gate(t.param(gamma), cross.forward(t, h, f)));
    h = t.add(h, t.tanh_gate(t.param(beta), ffn.forward(t, h)));
    return h;
  }

  void collect(ParamList<S>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
    cross.collect(out);
    ffn.collect(out);
  }
};

template <typename S>
void set_trainable(ParamList<S>& params, bool trainable) {
  for (Param<S>* p : params) p->trainable = trainable;
}

}  // namespace segfoley

#endif  // SEGFOLEY_NN_HPP_
