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

#ifndef SEGFOLEY_RNG_HPP_
#define SEGFOLEY_RNG_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>

namespace segfoley {

// xoshiro256** with splitmix64 seeding. Hand-rolled so that streams are
// bit-reproducible across platforms and the full state serializes into
// checkpoints. Normal variates use Box-Muller without a cached spare, so
// the state is exactly the four words below.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n);
  // Standard normal.
  double normal();

  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

  // Independent stream derived from (seed, a, b). Used to make batched and
  // per-record work order-independent: every unit of work owns its stream.
  static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

 private:
  std::array<std::uint64_t, 4> s_;
};

std::ostream& operator<<(std::ostream& os, const Rng& rng);
std::istream& operator>>(std::istream& is, Rng& rng);

}  // namespace segfoley

#endif  // SEGFOLEY_RNG_HPP_
