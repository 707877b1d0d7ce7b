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

#include "segfoley/run_config.hpp"

#include <filesystem>
#include <fstream>

#include "segfoley/common.hpp"

namespace segfoley {

void RunConfig::merge_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file: " + path);
  nlohmann::json file;
  try {
    is >> file;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad JSON in config file " + path + ": " + e.what());
  }
  if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : file.items()) {
    if (!allowed_.count(key))
      throw ConfigError("unknown config key '" + key + "' in " + path);
    values_[key] = value;
  }
}

void RunConfig::merge_overrides(const nlohmann::json& overrides) {
  for (const auto& [key, value] : overrides.items()) {
    if (!allowed_.count(key))
      throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
  }
}

void RunConfig::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / "run_config.json").string();
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  os << values_.dump(2) << "\n";
}

}  // namespace segfoley
