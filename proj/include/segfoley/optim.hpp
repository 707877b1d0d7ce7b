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

#ifndef SEGFOLEY_OPTIM_HPP_
#define SEGFOLEY_OPTIM_HPP_

#include <cmath>
#include <vector>

#include "segfoley/nn.hpp"

namespace segfoley {

// AdamW over a parameter list. Frozen parameters are skipped entirely.
template <typename S>
class AdamW {
 public:
  struct Options {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
    double weight_decay = 0.0;
  };

  AdamW(ParamList<S> params, Options opt) : params_(std::move(params)), opt_(opt) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (Param<S>* p : params_) {
      m_.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void zero_grad() {
    for (Param<S>* p : params_) p->zero_grad();
  }

  void step() {
    ++t_;
    const S bc1 = static_cast<S>(1.0 - std::pow(opt_.beta1, t_));
    const S bc2 = static_cast<S>(1.0 - std::pow(opt_.beta2, t_));
    const S b1 = static_cast<S>(opt_.beta1);
    const S b2 = static_cast<S>(opt_.beta2);
    const S lr = static_cast<S>(opt_.lr);
    const S eps = static_cast<S>(opt_.eps);
    const S wd = static_cast<S>(opt_.weight_decay);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Param<S>* p = params_[i];
      if (!p->trainable) continue;
      m_[i] = b1 * m_[i] + (S(1) - b1) * p->grad;
      v_[i] = b2 * v_[i].array() + (S(1) - b2) * p->grad.array().square();
      auto mhat = m_[i].array() / bc1;
      auto vhat = v_[i].array() / bc2;
      p->value.array() -= lr * (mhat / (vhat.sqrt() + eps) + wd * p->value.array());
    }
  }

  std::int64_t step_count() const { return t_; }
  void set_step_count(std::int64_t t) { t_ = t; }
  const ParamList<S>& params() const { return params_; }
  Mat<S>& moment1(std::size_t i) { return m_[i]; }
  Mat<S>& moment2(std::size_t i) { return v_[i]; }
  const Options& options() const { return opt_; }

 private:
  ParamList<S> params_;
  Options opt_;
  std::vector<Mat<S>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace segfoley

#endif  // SEGFOLEY_OPTIM_HPP_
