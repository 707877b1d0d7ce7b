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

#include "segfoley/focal_prompt.hpp"

#include <algorithm>
#include <cmath>

namespace segfoley {
namespace focal_prompt {
namespace {

// Window origin for a given center and size: floor(c - size/2 + 0.5).
int window_origin(double center, int size) {
  return static_cast<int>(std::floor(center - size / 2.0 + 0.5));
}

// Smallest size >= lower such that the window centered at `center` contains
// [lo, hi] (inclusive).
int required_size(double center, int lo, int hi, int lower) {
  int size = std::max(lower, hi - lo + 1);
  while (true) {
    const int o = window_origin(center, size);
    if (o <= lo && o + size > hi) return size;
    ++size;
  }
}

// Clamp-translate origin so [o, o+size) fits in [0, limit).
int clamp_origin(int o, int size, int limit) {
  return std::clamp(o, 0, limit - size);
}

}  // namespace

std::vector<std::optional<BBox>> frame_bboxes(const MaskStream& mask) {
  std::vector<std::optional<BBox>> out(mask.frames);
  for (int t = 0; t < mask.frames; ++t) {
    int top = mask.height, left = mask.width, bottom = -1, right = -1;
    for (int y = 0; y < mask.height; ++y) {
      for (int x = 0; x < mask.width; ++x) {
        if (!mask.at(t, y, x)) continue;
        top = std::min(top, y);
        left = std::min(left, x);
        bottom = std::max(bottom, y);
        right = std::max(right, x);
      }
    }
    if (bottom >= 0)
      out[t] = BBox{top, left, bottom - top + 1, right - left + 1};
  }
  return out;
}

CropWindow crop_window(const std::vector<std::optional<BBox>>& bboxes,
                       int frame_h, int frame_w, int min_size) {
  double cy = 0.0, cx = 0.0;
  int count = 0;
  int u_top = frame_h, u_left = frame_w, u_bottom = -1, u_right = -1;
  for (const auto& ob : bboxes) {
    if (!ob) continue;  // natural pauses / occlusions are skipped
    const BBox& b = *ob;
    cy += b.top + (b.height - 1) / 2.0;
    cx += b.left + (b.width - 1) / 2.0;
    ++count;
    u_top = std::min(u_top, b.top);
    u_left = std::min(u_left, b.left);
    u_bottom = std::max(u_bottom, b.top + b.height - 1);
    u_right = std::max(u_right, b.left + b.width - 1);
  }
  if (count == 0) throw EmptyMaskError("crop_window: all mask frames empty");
  cy /= count;
  cx /= count;

  CropWindow w;
  const int min_h = std::min(min_size, frame_h);
  const int min_w = std::min(min_size, frame_w);
  int h = required_size(cy, u_top, u_bottom, min_h);
  int ww = required_size(cx, u_left, u_right, min_w);
  if (h >= frame_h) {
    w.top = 0;
    w.height = frame_h;
  } else {
    w.height = h;
    w.top = clamp_origin(window_origin(cy, h), h, frame_h);
  }
  if (ww >= frame_w) {
    w.left = 0;
    w.width = frame_w;
  } else {
    w.width = ww;
    w.left = clamp_origin(window_origin(cx, ww), ww, frame_w);
  }
  return w;
}

VideoClip resize_video(const VideoClip& clip, int out_h, int out_w) {
  if (clip.height == out_h && clip.width == out_w) return clip;
  VideoClip out(clip.frames, out_h, out_w, clip.frame_rate);
  const double sy = static_cast<double>(clip.height) / out_h;
  const double sx = static_cast<double>(clip.width) / out_w;
  for (int t = 0; t < clip.frames; ++t) {
    for (int y = 0; y < out_h; ++y) {
      const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, clip.height - 1.0);
      const int y0 = static_cast<int>(fy);
      const int y1 = std::min(clip.height - 1, y0 + 1);
      const double wy = fy - y0;
      for (int x = 0; x < out_w; ++x) {
        const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, clip.width - 1.0);
        const int x0 = static_cast<int>(fx);
        const int x1 = std::min(clip.width - 1, x0 + 1);
        const double wx = fx - x0;
        for (int c = 0; c < 3; ++c) {
          const double v =
              (1 - wy) * ((1 - wx) * clip.at(t, y0, x0, c) + wx * clip.at(t, y0, x1, c)) +
              wy * ((1 - wx) * clip.at(t, y1, x0, c) + wx * clip.at(t, y1, x1, c));
          out.at(t, y, x, c) = static_cast<float>(v);
        }
      }
    }
  }
  return out;
}

MaskStream resize_mask(const MaskStream& mask, int out_h, int out_w) {
  if (mask.height == out_h && mask.width == out_w) return mask;
  MaskStream out(mask.frames, out_h, out_w);
  const double sy = static_cast<double>(mask.height) / out_h;
  const double sx = static_cast<double>(mask.width) / out_w;
  for (int t = 0; t < mask.frames; ++t) {
    for (int y = 0; y < out_h; ++y) {
      const int yi = std::min(mask.height - 1,
                              static_cast<int>(std::floor((y + 0.5) * sy)));
      for (int x = 0; x < out_w; ++x) {
        const int xi = std::min(mask.width - 1,
                                static_cast<int>(std::floor((x + 0.5) * sx)));
        out.at(t, y, x) = mask.at(t, yi, xi) ? 1 : 0;
      }
    }
  }
  return out;
}

VideoClip crop_video(const VideoClip& clip, const CropWindow& w) {
  VideoClip out(clip.frames, w.height, w.width, clip.frame_rate);
  for (int t = 0; t < clip.frames; ++t)
    for (int y = 0; y < w.height; ++y)
      for (int x = 0; x < w.width; ++x)
        for (int c = 0; c < 3; ++c)
          out.at(t, y, x, c) = clip.at(t, w.top + y, w.left + x, c);
  return out;
}

MaskStream crop_mask(const MaskStream& mask, const CropWindow& w) {
  MaskStream out(mask.frames, w.height, w.width);
  for (int t = 0; t < mask.frames; ++t)
    for (int y = 0; y < w.height; ++y)
      for (int x = 0; x < w.width; ++x)
        out.at(t, y, x) = mask.at(t, w.top + y, w.left + x);
  return out;
}

FocalPrompt build_focal_prompt(const VideoClip& video, const MaskStream& mask,
                               int backbone_size, int min_size) {
  if (video.frames != mask.frames || video.height != mask.height ||
      video.width != mask.width)
    throw DataError("build_focal_prompt: video/mask shape mismatch");
  const auto boxes = frame_bboxes(mask);
  const CropWindow w = crop_window(boxes, video.height, video.width, min_size);

  FocalPrompt p;
  p.window = w;
  p.global_video = resize_video(video, backbone_size, backbone_size);
  p.global_mask = resize_mask(mask, backbone_size, backbone_size);
  p.focal_video = resize_video(crop_video(video, w), backbone_size, backbone_size);
  p.focal_mask = resize_mask(crop_mask(mask, w), backbone_size, backbone_size);
  return p;
}

}  // namespace focal_prompt
}  // namespace segfoley
