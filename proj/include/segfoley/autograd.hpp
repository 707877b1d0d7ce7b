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

#ifndef SEGFOLEY_AUTOGRAD_HPP_
#define SEGFOLEY_AUTOGRAD_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "segfoley/common.hpp"

namespace segfoley {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatF = Mat<float>;
using MatD = Mat<double>;

// A named model tensor. `trainable` is the freeze flag: frozen tensors are
// never touched by the optimizer and no gradient is computed with respect
// to them.
template <typename S>
struct Param {
  std::string name;
  Mat<S> value;
  Mat<S> grad;
  bool trainable = true;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols, bool train = true)
      : name(std::move(n)),
        value(Mat<S>::Zero(rows, cols)),
        grad(Mat<S>::Zero(rows, cols)),
        trainable(train) {}

  void zero_grad() { grad.setZero(); }
};

// Reverse-mode tape over row-major matrices. Rows are tokens / batch items,
// columns are feature channels. Nodes are created in topological order, so
// backward() is a plain reverse sweep.
//
// A tape is single-use and not thread-safe; parameters referenced by a tape
// must stay alive and unmodified until backward() finishes. Concurrent
// forward passes need one tape each.
template <typename S>
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  explicit Tape(bool grads_enabled = true) : grads_enabled_(grads_enabled) {
    nodes_.reserve(512);
  }

  bool grads_enabled() const { return grads_enabled_; }

  // ---- leaves ----
  Var input(Mat<S> v) { return push(std::move(v), false, {}, {}); }

  Var param(Param<S>& p) {
    Var v = push(p.value, p.trainable && grads_enabled_, {}, {});
    if (node(v).needs_grad) {
      param_leaves_.push_back({v.id, &p});
    }
    return v;
  }

  // ---- ops ----
  Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, S c);
  // Adds a 1 x cols row vector to every row of a.
  Var add_rowvec(Var a, Var row);
  Var softmax_rows(Var a);
  // Per-row layer norm with learnable gain/bias (1 x cols each).
  Var layernorm_rows(Var a, Var gain, Var bias, S eps = S(1e-5));
  Var gelu(Var a);
  // y = tanh(gate) * a, gate is a 1x1 variable. The gated-residual primitive.
  Var tanh_gate(Var gate, Var a);
  Var concat_rows(const std::vector<Var>& parts);
  Var slice_cols(Var a, Eigen::Index c0, Eigen::Index n);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_rows(Var a, Eigen::Index r0, Eigen::Index n);
  // 1 x cols mean over rows.
  Var mean_rows(Var a);
  // Copy of one row of a (used for embedding-table lookups).
  Var select_row(Var a, Eigen::Index row);
  // Mean squared error against a constant target; returns a 1x1 var.
  Var mse(Var pred, const Mat<S>& target);

  const Mat<S>& val(Var v) const { return nodes_[v.id].value; }
  const Mat<S>& grad(Var v) const { return nodes_[v.id].grad; }

  // Reverse sweep from a scalar loss; accumulates into Param::grad for every
  // trainable parameter leaf on the tape.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat<S> value;
    Mat<S> grad;
    bool needs_grad = false;
    std::function<void(Tape&)> back;
    // ids of parents, only for needs_grad propagation diagnostics
  };

  struct ParamLeaf {
    int id;
    Param<S>* param;
  };

  Node& node(Var v) { return nodes_[v.id]; }
  const Node& node(Var v) const { return nodes_[v.id]; }

  Var push(Mat<S> value, bool needs_grad, std::function<void(Tape&)> back,
           std::vector<int> /*parents*/) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad && grads_enabled_;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  bool any_needs(std::initializer_list<Var> vars) const {
    for (Var v : vars)
      if (node(v).needs_grad) return true;
    return false;
  }

  void ensure_grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Mat<S>::Zero(n.value.rows(), n.value.cols());
  }

  void add_grad(int id, const Mat<S>& g) {
    if (!nodes_[id].needs_grad) return;
    ensure_grad(id);
    nodes_[id].grad += g;
  }

  std::vector<Node> nodes_;
  std::vector<ParamLeaf> param_leaves_;
  bool grads_enabled_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace segfoley

#endif  // SEGFOLEY_AUTOGRAD_HPP_
