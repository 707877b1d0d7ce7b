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

#ifndef SEGFOLEY_FOCAL_PROMPT_HPP_
#define SEGFOLEY_FOCAL_PROMPT_HPP_

#include <optional>
#include <vector>

#include "segfoley/media.hpp"

namespace segfoley {
namespace focal_prompt {

// Tight per-frame bounding box, inclusive pixel coordinates converted to
// (top, left, height, width).
struct BBox {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
};

struct CropWindow {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  bool operator==(const CropWindow&) const = default;
  bool is_full_frame(int frame_h, int frame_w) const {
    return top == 0 && left == 0 && height == frame_h && width == frame_w;
  }
};

struct FocalPrompt {
  VideoClip global_video;
  MaskStream global_mask;
  VideoClip focal_video;
  MaskStream focal_mask;
  CropWindow window;  // in source-pixel coordinates
};

// Tight bbox of nonzero pixels per frame; nullopt for empty frames.
std::vector<std::optional<BBox>> frame_bboxes(const MaskStream& mask);

// Aggregated crop window: centered at the mean of per-frame bbox centers,
// sized to contain the union of all bboxes (per axis), floored at min_size,
// then translated (not shrunk) to lie inside the frame. Axes whose required
// size exceeds the frame collapse to the full frame on that axis.
// Throws EmptyMaskError when every frame is empty.
CropWindow crop_window(const std::vector<std::optional<BBox>>& bboxes,
                       int frame_h, int frame_w, int min_size = 48);

// Bilinear resize for video, nearest for masks (stays binary).
VideoClip resize_video(const VideoClip& clip, int out_h, int out_w);
MaskStream resize_mask(const MaskStream& mask, int out_h, int out_w);

VideoClip crop_video(const VideoClip& clip, const CropWindow& w);
MaskStream crop_mask(const MaskStream& mask, const CropWindow& w);

// Builds the four-stream prompt: global and cropped video+mask, all resized
// to backbone_size x backbone_size.
FocalPrompt build_focal_prompt(const VideoClip& video, const MaskStream& mask,
                               int backbone_size, int min_size = 48);

}  // namespace focal_prompt
}  // namespace segfoley

#endif  // SEGFOLEY_FOCAL_PROMPT_HPP_
