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

#ifndef SEGFOLEY_RUN_CONFIG_HPP_
#define SEGFOLEY_RUN_CONFIG_HPP_

#include <set>
#include <string>

#include <json.hpp>

namespace segfoley {

// Command configs are JSON objects: defaults <- config file <- CLI flags,
// later layers winning. Unknown keys in the file are rejected, and the
// merged config is serialized into the run directory for reproducibility.
class RunConfig {
 public:
  RunConfig(nlohmann::json defaults, std::set<std::string> allowed_keys)
      : values_(std::move(defaults)), allowed_(std::move(allowed_keys)) {}

  // Merges a config file (throws ConfigError on unknown keys or bad JSON).
  void merge_file(const std::string& path);
  // Merges explicitly-set CLI flags.
  void merge_overrides(const nlohmann::json& overrides);

  const nlohmann::json& values() const { return values_; }

  template <typename T>
  T get(const std::string& key) const {
    return values_.at(key).get<T>();
  }

  // Writes run_config.json into the directory (created if needed).
  void save(const std::string& dir) const;

 private:
  nlohmann::json values_;
  std::set<std::string> allowed_;
};

}  // namespace segfoley

#endif  // SEGFOLEY_RUN_CONFIG_HPP_
