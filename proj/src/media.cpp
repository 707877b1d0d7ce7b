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

#include "segfoley/media.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace segfoley {
namespace {

void put_u16(std::ostream& os, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  os.write(b, 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

std::uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open for reading: " + path);
  return is;
}

}  // namespace

bool MaskStream::frame_empty(int t) const {
  const std::size_t off = static_cast<std::size_t>(t) * height * width;
  for (std::size_t i = 0; i < static_cast<std::size_t>(height) * width; ++i)
    if (data[off + i]) return false;
  return true;
}

void write_wav(const std::string& path, const AudioTrack& audio) {
  std::ofstream os = open_out(path);
  const std::uint32_t n = static_cast<std::uint32_t>(audio.samples.size());
  const std::uint32_t data_bytes = n * 2;
  os.write("RIFF", 4);
  put_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put_u32(os, 16);
  put_u16(os, 1);  // PCM
  put_u16(os, 1);  // mono
  put_u32(os, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(os, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put_u16(os, 2);
  put_u16(os, 16);
  os.write("data", 4);
  put_u32(os, data_bytes);
  for (float s : audio.samples) {
    const float c = std::clamp(s, -1.0f, 1.0f);
    const std::int16_t q = static_cast<std::int16_t>(std::lrintf(c * 32767.0f));
    put_u16(os, static_cast<std::uint16_t>(q));
  }
  if (!os) throw DataError("write failed: " + path);
}

AudioTrack read_wav(const std::string& path) {
  std::ifstream is = open_in(path);
  char tag[4];
  is.read(tag, 4);
  if (std::memcmp(tag, "RIFF", 4) != 0) throw DataError("not a RIFF file: " + path);
  get_u32(is);
  is.read(tag, 4);
  if (std::memcmp(tag, "WAVE", 4) != 0) throw DataError("not a WAVE file: " + path);
  AudioTrack audio;
  bool have_fmt = false;
  while (is) {
    is.read(tag, 4);
    if (!is) break;
    const std::uint32_t size = get_u32(is);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      const std::uint16_t fmt = get_u16(is);
      const std::uint16_t ch = get_u16(is);
      audio.sample_rate = static_cast<int>(get_u32(is));
      get_u32(is);
      get_u16(is);
      const std::uint16_t bits = get_u16(is);
      if (fmt != 1 || ch != 1 || bits != 16)
        throw DataError("unsupported wav layout (need 16-bit PCM mono): " + path);
      is.ignore(size - 16);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw DataError("wav data before fmt: " + path);
      const std::uint32_t n = size / 2;
      audio.samples.resize(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        const std::int16_t q = static_cast<std::int16_t>(get_u16(is));
        audio.samples[i] = static_cast<float>(q) / 32767.0f;
      }
      return audio;
    } else {
      is.ignore(size);
    }
  }
  throw DataError("wav has no data chunk: " + path);
}

void write_rvid(const std::string& path, const VideoClip& clip) {
  std::ofstream os = open_out(path);
  os.write("RVID", 4);
  put_u32(os, static_cast<std::uint32_t>(clip.frames));
  put_u32(os, static_cast<std::uint32_t>(clip.height));
  put_u32(os, static_cast<std::uint32_t>(clip.width));
  put_u32(os, 3);
  put_u32(os, static_cast<std::uint32_t>(std::lround(clip.frame_rate * 100.0)));
  std::vector<std::uint8_t> buf(clip.data.size());
  for (std::size_t i = 0; i < clip.data.size(); ++i) {
    const float c = std::clamp(clip.data[i], 0.0f, 1.0f);
    buf[i] = static_cast<std::uint8_t>(std::lrintf(c * 255.0f));
  }
  os.write(reinterpret_cast<const char*>(buf.data()), buf.size());
  if (!os) throw DataError("write failed: " + path);
}

VideoClip read_rvid(const std::string& path) {
  std::ifstream is = open_in(path);
  char tag[4];
  is.read(tag, 4);
  if (std::memcmp(tag, "RVID", 4) != 0) throw DataError("not an RVID file: " + path);
  const int t = static_cast<int>(get_u32(is));
  const int h = static_cast<int>(get_u32(is));
  const int w = static_cast<int>(get_u32(is));
  const int c = static_cast<int>(get_u32(is));
  const double fps = get_u32(is) / 100.0;
  if (c != 3) throw DataError("rvid must have 3 channels: " + path);
  VideoClip clip(t, h, w, fps);
  std::vector<std::uint8_t> buf(clip.data.size());
  is.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!is) throw DataError("rvid truncated: " + path);
  for (std::size_t i = 0; i < buf.size(); ++i)
    clip.data[i] = static_cast<float>(buf[i]) / 255.0f;
  return clip;
}

void write_mrle(const std::string& path, const MaskStream& mask) {
  std::ofstream os = open_out(path);
  os.write("MRLE", 4);
  put_u32(os, static_cast<std::uint32_t>(mask.frames));
  put_u32(os, static_cast<std::uint32_t>(mask.height));
  put_u32(os, static_cast<std::uint32_t>(mask.width));
  for (int t = 0; t < mask.frames; ++t) {
    for (int y = 0; y < mask.height; ++y) {
      std::vector<std::pair<std::uint16_t, std::uint16_t>> runs;
      int x = 0;
      while (x < mask.width) {
        if (mask.at(t, y, x)) {
          const int start = x;
          while (x < mask.width && mask.at(t, y, x)) ++x;
          runs.emplace_back(static_cast<std::uint16_t>(start),
                            static_cast<std::uint16_t>(x - start));
        } else {
          ++x;
        }
      }
      put_u16(os, static_cast<std::uint16_t>(runs.size()));
      for (auto [s, l] : runs) {
        put_u16(os, s);
        put_u16(os, l);
      }
    }
  }
  if (!os) throw DataError("write failed: " + path);
}

MaskStream read_mrle(const std::string& path) {
  std::ifstream is = open_in(path);
  char tag[4];
  is.read(tag, 4);
  if (std::memcmp(tag, "MRLE", 4) != 0) throw DataError("not an MRLE file: " + path);
  const int t = static_cast<int>(get_u32(is));
  const int h = static_cast<int>(get_u32(is));
  const int w = static_cast<int>(get_u32(is));
  MaskStream mask(t, h, w);
  for (int f = 0; f < t; ++f) {
    for (int y = 0; y < h; ++y) {
      const int n_runs = get_u16(is);
      for (int r = 0; r < n_runs; ++r) {
        const int start = get_u16(is);
        const int len = get_u16(is);
        if (start + len > w) throw DataError("mrle run out of bounds: " + path);
        for (int x = start; x < start + len; ++x) mask.at(f, y, x) = 1;
      }
    }
  }
  if (!is) throw DataError("mrle truncated: " + path);
  return mask;
}

void write_mask_pgm_sequence(const std::string& prefix, const MaskStream& mask) {
  for (int t = 0; t < mask.frames; ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "_%06d.pgm", t);
    std::ofstream os = open_out(prefix + name);
    os << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    for (int y = 0; y < mask.height; ++y)
      for (int x = 0; x < mask.width; ++x)
        os.put(mask.at(t, y, x) ? static_cast<char>(255) : 0);
  }
}

}  // namespace segfoley
