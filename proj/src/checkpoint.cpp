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

#include "segfoley/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace segfoley {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.append(b, 4);
}

void put_u64(std::string& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.append(b, 8);
}

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Cursor {
 public:
  explicit Cursor(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    check(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    check(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    pos_ += 8;
    return v;
  }
  std::uint8_t u8() {
    check(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::string str() {
    const std::uint32_t n = u32();
    check(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  const char* raw(std::size_t n) {
    check(n);
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

 private:
  void check(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError("checkpoint: truncated payload");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

template <typename S>
constexpr std::uint8_t dtype_tag() {
  return sizeof(S) == 4 ? 0 : 1;
}

template <typename S>
void put_mat(std::string& out, const Mat<S>& m) {
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  out.append(reinterpret_cast<const char*>(m.data()), sizeof(S) * m.size());
}

template <typename S>
Mat<S> get_mat(Cursor& c) {
  const std::uint32_t rows = c.u32();
  const std::uint32_t cols = c.u32();
  Mat<S> m(rows, cols);
  const char* p = c.raw(sizeof(S) * m.size());
  std::memcpy(m.data(), p, sizeof(S) * m.size());
  return m;
}

}  // namespace

const std::string& Checkpoint::get(const std::string& name) const {
  auto it = sections_.find(name);
  if (it == sections_.end()) throw DataError("checkpoint: missing section " + name);
  return it->second;
}

void Checkpoint::save(const std::string& path) const {
  std::string out;
  out.append("SGFL", 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(sections_.size()));
  for (const auto& [name, bytes] : sections_) {
    put_str(out, name);
    put_u64(out, bytes.size());
    out.append(bytes);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write checkpoint: " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw DataError("checkpoint write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read checkpoint: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  const std::string bytes = ss.str();
  if (bytes.size() < 12 || bytes.compare(0, 4, "SGFL") != 0)
    throw DataError("not a checkpoint file: " + path);
  Cursor c(bytes);
  c.raw(4);
  const std::uint32_t version = c.u32();
  if (version != kVersion) throw DataError("unsupported checkpoint version");
  const std::uint32_t n = c.u32();
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = c.str();
    const std::uint64_t size = c.u64();
    ckpt.sections_[name] = std::string(c.raw(size), size);
  }
  return ckpt;
}

template <typename S>
std::string serialize_params(const ParamList<S>& params) {
  std::string out;
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Param<S>* p : params) {
    put_str(out, p->name);
    out.push_back(p->trainable ? 1 : 0);
    out.push_back(static_cast<char>(dtype_tag<S>()));
    put_mat(out, p->value);
  }
  return out;
}

template <typename S>
void deserialize_params(const std::string& bytes, const ParamList<S>& params,
                        bool names_must_cover) {
  std::map<std::string, Param<S>*> by_name;
  for (Param<S>* p : params) by_name[p->name] = p;
  Cursor c(bytes);
  const std::uint32_t n = c.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::string name = c.str();
    const bool trainable = c.u8() != 0;
    const std::uint8_t dtype = c.u8();
    if (dtype != dtype_tag<S>())
      throw DataError("checkpoint tensor dtype mismatch: " + name);
    Mat<S> m = get_mat<S>(c);
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      if (names_must_cover) throw DataError("checkpoint tensor has no target: " + name);
      continue;
    }
    Param<S>* p = it->second;
    if (p->value.rows() != m.rows() || p->value.cols() != m.cols())
      throw DataError("checkpoint tensor shape mismatch: " + name);
    p->value = std::move(m);
    p->trainable = trainable;
  }
}

template <typename S>
std::string serialize_optimizer(AdamW<S>& opt) {
  std::string out;
  put_u64(out, static_cast<std::uint64_t>(opt.step_count()));
  put_u32(out, static_cast<std::uint32_t>(opt.params().size()));
  for (std::size_t i = 0; i < opt.params().size(); ++i) {
    put_str(out, opt.params()[i]->name);
    out.push_back(static_cast<char>(dtype_tag<S>()));
    put_mat(out, opt.moment1(i));
    put_mat(out, opt.moment2(i));
  }
  return out;
}

template <typename S>
void deserialize_optimizer(const std::string& bytes, AdamW<S>& opt) {
  Cursor c(bytes);
  opt.set_step_count(static_cast<std::int64_t>(c.u64()));
  const std::uint32_t n = c.u32();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < opt.params().size(); ++i)
    index[opt.params()[i]->name] = i;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::string name = c.str();
    const std::uint8_t dtype = c.u8();
    if (dtype != dtype_tag<S>())
      throw DataError("optimizer state dtype mismatch: " + name);
    Mat<S> m1 = get_mat<S>(c);
    Mat<S> m2 = get_mat<S>(c);
    auto it = index.find(name);
    if (it == index.end()) throw DataError("optimizer state has no target: " + name);
    opt.moment1(it->second) = std::move(m1);
    opt.moment2(it->second) = std::move(m2);
  }
}

template std::string serialize_params<float>(const ParamList<float>&);
template std::string serialize_params<double>(const ParamList<double>&);
template void deserialize_params<float>(const std::string&, const ParamList<float>&, bool);
template void deserialize_params<double>(const std::string&, const ParamList<double>&, bool);
template std::string serialize_optimizer<float>(AdamW<float>&);
template std::string serialize_optimizer<double>(AdamW<double>&);
template void deserialize_optimizer<float>(const std::string&, AdamW<float>&);
template void deserialize_optimizer<double>(const std::string&, AdamW<double>&);

}  // namespace segfoley
