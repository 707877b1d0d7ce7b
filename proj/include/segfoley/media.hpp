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

#ifndef SEGFOLEY_MEDIA_HPP_
#define SEGFOLEY_MEDIA_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "segfoley/common.hpp"

namespace segfoley {

// T x H x W x 3 float frames in [0,1].
struct VideoClip {
  int frames = 0;
  int height = 0;
  int width = 0;
  double frame_rate = 25.0;
  std::vector<float> data;  // frames*height*width*3

  VideoClip() = default;
  VideoClip(int t, int h, int w, double fps)
      : frames(t), height(h), width(w), frame_rate(fps),
        data(static_cast<std::size_t>(t) * h * w * 3, 0.0f) {}

  float& at(int t, int y, int x, int c) {
    return data[((static_cast<std::size_t>(t) * height + y) * width + x) * 3 + c];
  }
  float at(int t, int y, int x, int c) const {
    return data[((static_cast<std::size_t>(t) * height + y) * width + x) * 3 + c];
  }
};

// T x H x W binary masks, values in {0,1}.
struct MaskStream {
  int frames = 0;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;  // frames*height*width

  MaskStream() = default;
  MaskStream(int t, int h, int w)
      : frames(t), height(h), width(w),
        data(static_cast<std::size_t>(t) * h * w, 0) {}

  std::uint8_t& at(int t, int y, int x) {
    return data[(static_cast<std::size_t>(t) * height + y) * width + x];
  }
  std::uint8_t at(int t, int y, int x) const {
    return data[(static_cast<std::size_t>(t) * height + y) * width + x];
  }

  bool frame_empty(int t) const;
};

// Mono waveform, |samples| <= 1.
struct AudioTrack {
  int sample_rate = 8000;
  std::vector<float> samples;

  AudioTrack() = default;
  AudioTrack(std::size_t n, int rate) : sample_rate(rate), samples(n, 0.0f) {}

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// ---- file formats ----
// WAV: 16-bit PCM mono RIFF.
void write_wav(const std::string& path, const AudioTrack& audio);
AudioTrack read_wav(const std::string& path);

// RVID: raw 8-bit video. Header: magic "RVID", u32 {T,H,W,channels, fps_centi}.
void write_rvid(const std::string& path, const VideoClip& clip);
VideoClip read_rvid(const std::string& path);

// MRLE: per-frame run-length-encoded binary masks.
// Header: magic "MRLE", u32 {T,H,W}; then per frame, per row:
// u16 run count, then (u16 start, u16 length) pairs of set runs.
void write_mrle(const std::string& path, const MaskStream& mask);
MaskStream read_mrle(const std::string& path);

// Debug export: one PGM image per frame, `prefix_000123.pgm`.
void write_mask_pgm_sequence(const std::string& prefix, const MaskStream& mask);

}  // namespace segfoley

#endif  // SEGFOLEY_MEDIA_HPP_
