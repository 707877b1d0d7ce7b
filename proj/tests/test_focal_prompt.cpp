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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "segfoley/focal_prompt.hpp"
#include "segfoley/rng.hpp"
#include "test_util.hpp"

using namespace segfoley;
using namespace segfoley::focal_prompt;

namespace {

// Brute-force oracle: pixel-level containment search for the smallest
// window (per axis) centered by the documented rule, then the same min-size
// and clamping rules. Shares no bbox arithmetic with the implementation.
CropWindow oracle_crop(const MaskStream& mask, int min_size) {
  double cy = 0, cx = 0;
  int frames_used = 0;
  std::vector<std::pair<int, int>> pixels;  // (y, x) of every set pixel
  for (int t = 0; t < mask.frames; ++t) {
    int top = mask.height, left = mask.width, bottom = -1, right = -1;
    for (int y = 0; y < mask.height; ++y)
      for (int x = 0; x < mask.width; ++x)
        if (mask.at(t, y, x)) {
          pixels.emplace_back(y, x);
          top = std::min(top, y);
          left = std::min(left, x);
          bottom = std::max(bottom, y);
          right = std::max(right, x);
        }
    if (bottom >= 0) {
      cy += (top + bottom) / 2.0;
      cx += (left + right) / 2.0;
      ++frames_used;
    }
  }
  REQUIRE(frames_used > 0);
  cy /= frames_used;
  cx /= frames_used;

  const auto origin = [](double c, int size) {
    return static_cast<int>(std::floor(c - size / 2.0 + 0.5));
  };
  const auto search = [&](double c, int limit, bool vertical) {
    const int lower = std::min(min_size, limit);
    for (int size = lower;; ++size) {
      const int o = origin(c, size);
      bool contains = true;
      for (const auto& [y, x] : pixels) {
        const int v = vertical ? y : x;
        if (v < o || v >= o + size) {
          contains = false;
          break;
        }
      }
      if (contains) return size;
    }
  };

  CropWindow w;
  const int h = search(cy, mask.height, true);
  const int ww = search(cx, mask.width, false);
  if (h >= mask.height) {
    w.top = 0;
    w.height = mask.height;
  } else {
    w.height = h;
    w.top = std::clamp(origin(cy, h), 0, mask.height - h);
  }
  if (ww >= mask.width) {
    w.left = 0;
    w.width = mask.width;
  } else {
    w.width = ww;
    w.left = std::clamp(origin(cx, ww), 0, mask.width - ww);
  }
  return w;
}

MaskStream random_mask_stream(Rng& rng, int frames, int h, int w) {
  MaskStream mask(frames, h, w);
  bool any = false;
  for (int t = 0; t < frames; ++t) {
    if (rng.uniform() < 0.2 && any) continue;  // occasional empty frame
    const int bh = 1 + static_cast<int>(rng.uniform_int(h / 2));
    const int bw = 1 + static_cast<int>(rng.uniform_int(w / 2));
    const int top = static_cast<int>(rng.uniform_int(h - bh + 1));
    const int left = static_cast<int>(rng.uniform_int(w - bw + 1));
    for (int y = top; y < top + bh; ++y)
      for (int x = left; x < left + bw; ++x)
        if (rng.uniform() < 0.8) {
          mask.at(t, y, x) = 1;
          any = true;
        }
    if (!any) {
      mask.at(t, top, left) = 1;
      any = true;
    }
  }
  return mask;
}

}  // namespace

TEST_CASE("frame_bboxes finds tight boxes, empty and full frames") {
  MaskStream mask(3, 64, 64);
  for (int y = 10; y <= 20; ++y)
    for (int x = 30; x <= 40; ++x) mask.at(0, y, x) = 1;
  // frame 1 left empty
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) mask.at(2, y, x) = 1;

  const auto boxes = frame_bboxes(mask);
  REQUIRE(boxes.size() == 3);
  REQUIRE(boxes[0].has_value());
  CHECK(boxes[0]->top == 10);
  CHECK(boxes[0]->left == 30);
  CHECK(boxes[0]->height == 11);
  CHECK(boxes[0]->width == 11);
  CHECK(!boxes[1].has_value());
  REQUIRE(boxes[2].has_value());
  CHECK(boxes[2]->top == 0);
  CHECK(boxes[2]->left == 0);
  CHECK(boxes[2]->height == 64);
  CHECK(boxes[2]->width == 64);
}

TEST_CASE("crop_window single-frame hand example") {
  // bbox rows 10..20, cols 30..40 in a 224x224 frame; min size 48
  std::vector<std::optional<BBox>> boxes = {BBox{10, 30, 11, 11}};
  const CropWindow w = crop_window(boxes, 224, 224, 48);
  CHECK(w.top == 0);     // unclamped -9, clamped to 0
  CHECK(w.height == 48);
  CHECK(w.left == 11);
  CHECK(w.width == 48);
}

TEST_CASE("static mask across frames matches the single-frame window") {
  MaskStream one(1, 224, 224), many(5, 224, 224);
  for (int y = 10; y <= 20; ++y)
    for (int x = 30; x <= 40; ++x) {
      one.at(0, y, x) = 1;
      for (int t = 0; t < 5; ++t) many.at(t, y, x) = 1;
    }
  const CropWindow wa = crop_window(frame_bboxes(one), 224, 224);
  const CropWindow wb = crop_window(frame_bboxes(many), 224, 224);
  CHECK(wa == wb);
}

TEST_CASE("full-frame mask gives the full-frame window") {
  MaskStream mask(4, 64, 64);
  std::fill(mask.data.begin(), mask.data.end(), 1);
  const CropWindow w = crop_window(frame_bboxes(mask), 64, 64);
  CHECK(w.is_full_frame(64, 64));
}

TEST_CASE("all-empty mask raises EmptyMask") {
  MaskStream mask(3, 32, 32);
  CHECK_THROWS_AS(crop_window(frame_bboxes(mask), 32, 32), EmptyMaskError);
  VideoClip video(3, 32, 32, 25.0);
  CHECK_THROWS_AS(build_focal_prompt(video, mask, 32), EmptyMaskError);
}

TEST_CASE("crop_window matches the brute-force oracle on random streams") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = 32 + static_cast<int>(rng.uniform_int(97));
    const int w = 32 + static_cast<int>(rng.uniform_int(97));
    const int frames = 1 + static_cast<int>(rng.uniform_int(6));
    const MaskStream mask = random_mask_stream(rng, frames, h, w);
    const CropWindow got = crop_window(frame_bboxes(mask), h, w, 48);
    const CropWindow want = oracle_crop(mask, 48);
    CAPTURE(trial);
    CAPTURE(h);
    CAPTURE(w);
    REQUIRE(got == want);
  }
}

TEST_CASE("union containment when the window is not full frame") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const MaskStream mask = random_mask_stream(rng, 4, 128, 128);
    const auto boxes = frame_bboxes(mask);
    const CropWindow w = crop_window(boxes, 128, 128, 48);
    for (const auto& ob : boxes) {
      if (!ob) continue;
      if (w.height < 128) {
        CHECK(ob->top >= w.top);
        CHECK(ob->top + ob->height <= w.top + w.height);
      }
      if (w.width < 128) {
        CHECK(ob->left >= w.left);
        CHECK(ob->left + ob->width <= w.left + w.width);
      }
    }
  }
}

TEST_CASE("translation equivariance away from borders") {
  MaskStream mask(3, 160, 160), shifted(3, 160, 160);
  const int dy = 9, dx = -6;
  Rng rng(5);
  for (int t = 0; t < 3; ++t) {
    const int top = 60 + static_cast<int>(rng.uniform_int(10));
    const int left = 60 + static_cast<int>(rng.uniform_int(10));
    for (int y = top; y < top + 12; ++y)
      for (int x = left; x < left + 12; ++x) {
        mask.at(t, y, x) = 1;
        shifted.at(t, y + dy, x + dx) = 1;
      }
  }
  const CropWindow a = crop_window(frame_bboxes(mask), 160, 160);
  const CropWindow b = crop_window(frame_bboxes(shifted), 160, 160);
  CHECK(b.top == a.top + dy);
  CHECK(b.left == a.left + dx);
  CHECK(b.height == a.height);
  CHECK(b.width == a.width);
}

TEST_CASE("min size collapses to the frame when the frame is smaller") {
  MaskStream mask(1, 32, 32);
  mask.at(0, 10, 10) = 1;
  const CropWindow w = crop_window(frame_bboxes(mask), 32, 32, 48);
  CHECK(w.is_full_frame(32, 32));
}

TEST_CASE("build_focal_prompt with a full-frame mask is the identity crop") {
  VideoClip video(4, 64, 64, 25.0);
  Rng rng(3);
  for (auto& v : video.data) v = static_cast<float>(rng.uniform());
  MaskStream mask(4, 64, 64);
  std::fill(mask.data.begin(), mask.data.end(), 1);
  const FocalPrompt p = build_focal_prompt(video, mask, 32);
  CHECK(p.window.is_full_frame(64, 64));
  CHECK(p.focal_video.data == p.global_video.data);
  CHECK(p.focal_mask.data == p.global_mask.data);
  CHECK(p.focal_video.height == 32);
  CHECK(p.focal_video.width == 32);
  CHECK(p.global_video.height == 32);
}

TEST_CASE("resized focal mask stays binary") {
  VideoClip video(2, 96, 96, 25.0);
  MaskStream mask(2, 96, 96);
  for (int t = 0; t < 2; ++t)
    for (int y = 20; y < 55; ++y)
      for (int x = 30; x < 61; ++x) mask.at(t, y, x) = 1;
  const FocalPrompt p = build_focal_prompt(video, mask, 33);
  for (auto v : p.focal_mask.data) CHECK((v == 0 || v == 1));
  for (auto v : p.global_mask.data) CHECK((v == 0 || v == 1));
}

TEST_CASE("resize identity and constant preservation") {
  VideoClip video(2, 24, 24, 25.0);
  std::fill(video.data.begin(), video.data.end(), 0.37f);
  const VideoClip same = resize_video(video, 24, 24);
  CHECK(same.data == video.data);
  const VideoClip up = resize_video(video, 48, 36);
  for (float v : up.data) CHECK(v == doctest::Approx(0.37f));
}
