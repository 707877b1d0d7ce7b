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

#ifndef SEGFOLEY_TESTS_TEST_UTIL_HPP_
#define SEGFOLEY_TESTS_TEST_UTIL_HPP_

#include <filesystem>
#include <functional>
#include <string>

#include "segfoley/nn.hpp"

namespace segfoley {
namespace testutil {

// Central finite-difference gradient check. `loss_grad` must zero the grads,
// run forward+backward and return the loss; `loss_value` must return the
// loss without touching grads. Returns the max relative error over every
// element of every trainable parameter.
inline double gradcheck(const ParamList<double>& params,
                        const std::function<double()>& loss_grad,
                        const std::function<double()>& loss_value,
                        double h = 1e-5) {
  for (Param<double>* p : params) p->zero_grad();
  loss_grad();
  double worst = 0.0;
  for (Param<double>* p : params) {
    if (!p->trainable) continue;
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
        const double saved = p->value(i, j);
        p->value(i, j) = saved + h;
        const double up = loss_value();
        p->value(i, j) = saved - h;
        const double down = loss_value();
        p->value(i, j) = saved;
        const double fd = (up - down) / (2.0 * h);
        const double an = p->grad(i, j);
        const double rel =
            std::fabs(an - fd) / std::max({1e-6, std::fabs(an), std::fabs(fd)});
        worst = std::max(worst, rel);
      }
    }
  }
  return worst;
}

inline void randomize(const ParamList<double>& params, Rng& rng,
                      double scale = 0.3) {
  for (Param<double>* p : params) fill_normal(p->value, rng, scale);
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = (std::filesystem::temp_directory_path() /
             ("segfoley_test_" + tag + "_" + std::to_string(::getpid())))
                .string();
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

}  // namespace testutil
}  // namespace segfoley

#endif  // SEGFOLEY_TESTS_TEST_UTIL_HPP_
