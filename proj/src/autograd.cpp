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

#include "segfoley/autograd.hpp"

namespace segfoley {

template <typename S>
typename Tape<S>::Var Tape<S>::matmul(Var a, Var b, bool trans_a, bool trans_b) {
  const Mat<S>& A = val(a);
  const Mat<S>& B = val(b);
  Mat<S> out;
  if (!trans_a && !trans_b) out = A * B;
  else if (trans_a && !trans_b) out = A.transpose() * B;
  else if (!trans_a && trans_b) out = A * B.transpose();
  else out = A.transpose() * B.transpose();

  const bool ng = any_needs({a, b});
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  const int ia = a.id, ib = b.id, iv = v.id;
  node(v).back = [ia, ib, iv, trans_a, trans_b](Tape& t) {
    const Mat<S>& dC = t.nodes_[iv].grad;
    const Mat<S>& A = t.nodes_[ia].value;
    const Mat<S>& B = t.nodes_[ib].value;
    if (t.nodes_[ia].needs_grad) {
      Mat<S> dA;
      if (!trans_a && !trans_b) dA = dC * B.transpose();
      else if (trans_a && !trans_b) dA = B * dC.transpose();
      else if (!trans_a && trans_b) dA = dC * B;
      else dA = (dC * B).transpose();
      t.add_grad(ia, dA);
    }
    if (t.nodes_[ib].needs_grad) {
      Mat<S> dB;
      if (!trans_a && !trans_b) dB = A.transpose() * dC;
      else if (trans_a && !trans_b) dB = A * dC;
      else if (!trans_a && trans_b) dB = dC.transpose() * A;
      else dB = (A * dC).transpose();
      t.add_grad(ib, dB);
    }
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::add(Var a, Var b) {
  Mat<S> out = val(a) + val(b);
  const bool ng = any_needs({a, b});
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  const int ia = a.id, ib = b.id, iv = v.id;
  node(v).back = [ia, ib, iv](Tape& t) {
    t.add_grad(ia, t.nodes_[iv].grad);
    t.add_grad(ib, t.nodes_[iv].grad);
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::sub(Var a, Var b) {
  Mat<S> out = val(a) - val(b);
  const bool ng = any_needs({a, b});
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  const int ia = a.id, ib = b.id, iv = v.id;
  node(v).back = [ia, ib, iv](Tape& t) {
    t.add_grad(ia, t.nodes_[iv].grad);
    if (t.nodes_[ib].needs_grad) t.add_grad(ib, Mat<S>(-t.nodes_[iv].grad));
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::hadamard(Var a, Var b) {
  Mat<S> out = val(a).cwiseProduct(val(b));
  const bool ng = any_needs({a, b});
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  const int ia = a.id, ib = b.id, iv = v.id;
  node(v).back = [ia, ib, iv](Tape& t) {
    const Mat<S>& dC = t.nodes_[iv].grad;
    if (t.nodes_[ia].needs_grad)
      t.add_grad(ia, Mat<S>(dC.cwiseProduct(t.nodes_[ib].value)));
    if (t.nodes_[ib].needs_grad)
      t.add_grad(ib, Mat<S>(dC.cwiseProduct(t.nodes_[ia].value)));
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::scale(Var a, S c) {
  Mat<S> out = val(a) * c;
  const bool ng = any_needs({a});
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  const int ia = a.id, iv = v.id;
  node(v).back = [ia, iv, c](Tape& t) {
    t.add_grad(ia, Mat<S>(t.nodes_[iv].grad * c));
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::add_rowvec(Var a, Var row) {
  const Mat<S>& A = val(a);
  const Mat<S>& r = val(row);
  Mat<S> out = A.rowwise() + r.row(0);
  const bool ng = any_needs({a, row});
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  const int ia = a.id, ir = row.id, iv = v.id;
  node(v).back = [ia, ir, iv](Tape& t) {
    const Mat<S>& dC = t.nodes_[iv].grad;
    t.add_grad(ia, dC);
    if (t.nodes_[ir].needs_grad) {
      Mat<S> dr = dC.colwise().sum();
      t.add_grad(ir, dr);
    }
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::softmax_rows(Var a) {
  const Mat<S>& A = val(a);
  Mat<S> out(A.rows(), A.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const S m = A.row(i).maxCoeff();
    out.row(i) = (A.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  const bool ng = any_needs({a});
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  const int ia = a.id, iv = v.id;
  node(v).back = [ia, iv](Tape& t) {
    const Mat<S>& Y = t.nodes_[iv].value;
    const Mat<S>& dY = t.nodes_[iv].grad;
    Mat<S> dA(Y.rows(), Y.cols());
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
      const S dot = dY.row(i).cwiseProduct(Y.row(i)).sum();
      dA.row(i) = Y.row(i).array() * (dY.row(i).array() - dot);
    }
    t.add_grad(ia, dA);
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::layernorm_rows(Var a, Var gain, Var bias, S eps) {
  const Mat<S>& A = val(a);
  const Eigen::Index n = A.cols();
  Mat<S> xhat(A.rows(), n);
  Mat<S> inv_std(A.rows(), 1);
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const S mu = A.row(i).mean();
    const S var = (A.row(i).array() - mu).square().sum() / static_cast<S>(n);
    const S is = S(1) / std::sqrt(var + eps);
    inv_std(i, 0) = is;
    xhat.row(i) = (A.row(i).array() - mu) * is;
  }
  Mat<S> out(A.rows(), n);
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    out.row(i) = xhat.row(i).array() * val(gain).row(0).array() +
                 val(bias).row(0).array();
  const bool ng = any_needs({a, gain, bias});
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  const int ia = a.id, ig = gain.id, ibi = bias.id, iv = v.id;
  // xhat/inv_std are captured by value for the backward pass.
  node(v).back = [ia, ig, ibi, iv, xhat, inv_std, n](Tape& t) {
    const Mat<S>& dY = t.nodes_[iv].grad;
    if (t.nodes_[ig].needs_grad) {
      Mat<S> dg = dY.cwiseProduct(xhat).colwise().sum();
      t.add_grad(ig, dg);
    }
    if (t.nodes_[ibi].needs_grad) {
      Mat<S> db = dY.colwise().sum();
      t.add_grad(ibi, db);
    }
    if (t.nodes_[ia].needs_grad) {
      const Mat<S>& g = t.nodes_[ig].value;
      Mat<S> dA(dY.rows(), n);
      for (Eigen::Index i = 0; i < dY.rows(); ++i) {
        Eigen::Array<S, 1, Eigen::Dynamic> dxhat =
            dY.row(i).array() * g.row(0).array();
        const S mean_dxhat = dxhat.mean();
        const S mean_dxhat_xhat = (dxhat * xhat.row(i).array()).mean();
        dA.row(i) = ((dxhat - mean_dxhat) -
                     xhat.row(i).array() * mean_dxhat_xhat) *
                    inv_std(i, 0);
      }
      t.add_grad(ia, dA);
    }
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::gelu(Var a) {
  const Mat<S>& A = val(a);
  auto cdf = [](S x) {
    return S(0.5) * (S(1) + S(std::erf(double(x) * 0.7071067811865475)));
  };
  Mat<S> out = A.array() * A.unaryExpr(cdf).array();
  const bool ng = any_needs({a});
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  const int ia = a.id, iv = v.id;
  node(v).back = [ia, iv, cdf](Tape& t) {
    const Mat<S>& A = t.nodes_[ia].value;
    const Mat<S>& dY = t.nodes_[iv].grad;
    auto pdf = [](S x) {
      return S(0.3989422804014327 * std::exp(-0.5 * double(x) * double(x)));
    };
    Mat<S> dA = dY.array() *
                (A.unaryExpr(cdf).array() + A.array() * A.unaryExpr(pdf).array());
    t.add_grad(ia, dA);
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::tanh_gate(Var gate, Var a) {
  const S g = std::tanh(val(gate)(0, 0));
  Mat<S> out = val(a) * g;
  const bool ng = any_needs({gate, a});
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  const int ig = gate.id, ia = a.id, iv = v.id;
  node(v).back = [ig, ia, iv](Tape& t) {
    const S gv = std::tanh(t.nodes_[ig].value(0, 0));
    const Mat<S>& dY = t.nodes_[iv].grad;
    if (t.nodes_[ia].needs_grad) t.add_grad(ia, Mat<S>(dY * gv));
    if (t.nodes_[ig].needs_grad) {
      Mat<S> dg(1, 1);
      dg(0, 0) = (S(1) - gv * gv) * dY.cwiseProduct(t.nodes_[ia].value).sum();
      t.add_grad(ig, dg);
    }
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::concat_rows(const std::vector<Var>& parts) {
  Eigen::Index rows = 0;
  const Eigen::Index cols = val(parts.front()).cols();
  for (Var p : parts) rows += val(p).rows();
  Mat<S> out(rows, cols);
  Eigen::Index r = 0;
  bool ng = false;
  for (Var p : parts) {
    out.middleRows(r, val(p).rows()) = val(p);
    r += val(p).rows();
    ng = ng || node(p).needs_grad;
  }
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  std::vector<int> ids;
  std::vector<Eigen::Index> sizes;
  for (Var p : parts) {
    ids.push_back(p.id);
    sizes.push_back(val(p).rows());
  }
  const int iv = v.id;
  node(v).back = [ids, sizes, iv](Tape& t) {
    const Mat<S>& dC = t.nodes_[iv].grad;
    Eigen::Index r = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.nodes_[ids[k]].needs_grad)
        t.add_grad(ids[k], Mat<S>(dC.middleRows(r, sizes[k])));
      r += sizes[k];
    }
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::slice_cols(Var a, Eigen::Index c0, Eigen::Index n) {
  Mat<S> out = val(a).middleCols(c0, n);
  const bool ng = any_needs({a});
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  const int ia = a.id, iv = v.id;
  node(v).back = [ia, iv, c0, n](Tape& t) {
    t.ensure_grad(ia);
    t.nodes_[ia].grad.middleCols(c0, n) += t.nodes_[iv].grad;
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::concat_cols(const std::vector<Var>& parts) {
  const Eigen::Index rows = val(parts.front()).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) cols += val(p).cols();
  Mat<S> out(rows, cols);
  Eigen::Index c = 0;
  bool ng = false;
  for (Var p : parts) {
    out.middleCols(c, val(p).cols()) = val(p);
    c += val(p).cols();
    ng = ng || node(p).needs_grad;
  }
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  std::vector<int> ids;
  std::vector<Eigen::Index> sizes;
  for (Var p : parts) {
    ids.push_back(p.id);
    sizes.push_back(val(p).cols());
  }
  const int iv = v.id;
  node(v).back = [ids, sizes, iv](Tape& t) {
    const Mat<S>& dC = t.nodes_[iv].grad;
    Eigen::Index c = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.nodes_[ids[k]].needs_grad)
        t.add_grad(ids[k], Mat<S>(dC.middleCols(c, sizes[k])));
      c += sizes[k];
    }
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::slice_rows(Var a, Eigen::Index r0, Eigen::Index n) {
  Mat<S> out = val(a).middleRows(r0, n);
  const bool ng = any_needs({a});
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  const int ia = a.id, iv = v.id;
  node(v).back = [ia, iv, r0, n](Tape& t) {
    t.ensure_grad(ia);
    t.nodes_[ia].grad.middleRows(r0, n) += t.nodes_[iv].grad;
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::mean_rows(Var a) {
  const Mat<S>& A = val(a);
  Mat<S> out = A.colwise().mean();
  const bool ng = any_needs({a});
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  const int ia = a.id, iv = v.id;
  const S inv = S(1) / static_cast<S>(A.rows());
  node(v).back = [ia, iv, inv](Tape& t) {
    const Mat<S>& dC = t.nodes_[iv].grad;
    Mat<S> dA = (dC * inv).replicate(t.nodes_[ia].value.rows(), 1);
    t.add_grad(ia, dA);
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::select_row(Var a, Eigen::Index row) {
  Mat<S> out = val(a).row(row);
  const bool ng = any_needs({a});
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  const int ia = a.id, iv = v.id;
  node(v).back = [ia, iv, row](Tape& t) {
    t.ensure_grad(ia);
    t.nodes_[ia].grad.row(row) += t.nodes_[iv].grad.row(0);
  };
  return v;
}

template <typename S>
typename Tape<S>::Var Tape<S>::mse(Var pred, const Mat<S>& target) {
  const Mat<S>& P = val(pred);
  if (P.rows() != target.rows() || P.cols() != target.cols())
    throw DataError("mse: shape mismatch");
  Mat<S> out(1, 1);
  out(0, 0) = (P - target).array().square().mean();
  const bool ng = any_needs({pred});
  Var v = push(std::move(out), ng, {}, {});
  if (!ng) return v;
  const int ip = pred.id, iv = v.id;
  const S inv = S(2) / static_cast<S>(target.size());
  // target captured by value
  node(v).back = [ip, iv, target, inv](Tape& t) {
    const S d = t.nodes_[iv].grad(0, 0);
    Mat<S> dP = (t.nodes_[ip].value - target) * (inv * d);
    t.add_grad(ip, dP);
  };
  return v;
}

template <typename S>
void Tape<S>::backward(Var loss) {
  if (!grads_enabled_) throw NumericError("backward() on an inference tape");
  Node& ln = node(loss);
  if (ln.value.size() != 1) throw NumericError("backward() needs a scalar loss");
  ensure_grad(loss.id);
  ln.grad(0, 0) = S(1);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back && n.needs_grad && n.grad.size() != 0) n.back(*this);
  }
  for (const ParamLeaf& pl : param_leaves_) {
    if (nodes_[pl.id].grad.size() != 0) pl.param->grad += nodes_[pl.id].grad;
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace segfoley
