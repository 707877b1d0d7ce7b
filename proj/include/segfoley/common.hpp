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

#ifndef SEGFOLEY_COMMON_HPP_
#define SEGFOLEY_COMMON_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace segfoley {

// Error hierarchy. The CLI maps these onto process exit codes:
// ConfigError -> 2, DataError -> 3, NumericError -> 4.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Raised when every frame of a mask stream is empty and no crop window can
// be derived.
class EmptyMaskError : public DataError {
 public:
  explicit EmptyMaskError(const std::string& msg) : DataError(msg) {}
};

}  // namespace segfoley

#endif  // SEGFOLEY_COMMON_HPP_
