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

#ifndef SEGFOLEY_CHECKPOINT_HPP_
#define SEGFOLEY_CHECKPOINT_HPP_

#include <map>
#include <string>
#include <vector>

#include "segfoley/nn.hpp"
#include "segfoley/optim.hpp"

namespace segfoley {

// Versioned section container: magic "SGFL", u32 version, u32 section count,
// then per section a name and a byte blob. Sections used by training runs:
// config (JSON), backbone, generator, lora (tensor tables), optimizer,
// rng_state (text).
class Checkpoint {
 public:
  static constexpr std::uint32_t kVersion = 1;

  void set(const std::string& name, std::string bytes) {
    sections_[name] = std::move(bytes);
  }
  bool has(const std::string& name) const { return sections_.count(name) > 0; }
  const std::string& get(const std::string& name) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  std::map<std::string, std::string> sections_;
};

// Tensor-table payload: u32 count, then per tensor name, u8 trainable,
// u8 dtype (0 = f32, 1 = f64), u32 rows, u32 cols, raw scalar bytes.
template <typename S>
std::string serialize_params(const ParamList<S>& params);

// Loads by name; every serialized tensor must match an existing parameter
// with the same shape. `names_must_cover` makes a missing target an error.
template <typename S>
void deserialize_params(const std::string& bytes, const ParamList<S>& params,
                        bool names_must_cover = true);

template <typename S>
std::string serialize_optimizer(AdamW<S>& opt);

template <typename S>
void deserialize_optimizer(const std::string& bytes, AdamW<S>& opt);

}  // namespace segfoley

#endif  // SEGFOLEY_CHECKPOINT_HPP_
