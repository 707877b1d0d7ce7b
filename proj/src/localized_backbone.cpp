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

#include "segfoley/localized_backbone.hpp"

namespace segfoley {
namespace backbone {

template <typename S>
Mat<S> patchify_video(const VideoClip& clip, const BackboneConfig& cfg) {
  if (clip.frames != cfg.input_frames || clip.height != cfg.input_size ||
      clip.width != cfg.input_size)
    throw DataError("patchify_video: clip shape does not match backbone config");
  Mat<S> out(cfg.tokens(), cfg.video_patch_dim());
  int row = 0;
  for (int gt = 0; gt < cfg.grid_t(); ++gt) {
    for (int gy = 0; gy < cfg.grid_h(); ++gy) {
      for (int gx = 0; gx < cfg.grid_w(); ++gx, ++row) {
        int col = 0;
        for (int dt = 0; dt < cfg.patch_t; ++dt)
          for (int dy = 0; dy < cfg.patch_h; ++dy)
            for (int dx = 0; dx < cfg.patch_w; ++dx)
              for (int c = 0; c < 3; ++c)
                out(row, col++) = static_cast<S>(
                    clip.at(gt * cfg.patch_t + dt, gy * cfg.patch_h + dy,
                            gx * cfg.patch_w + dx, c));
      }
    }
  }
  return out;
}

template <typename S>
Mat<S> patchify_mask(const MaskStream& mask, const BackboneConfig& cfg) {
  if (mask.frames != cfg.input_frames || mask.height != cfg.input_size ||
      mask.width != cfg.input_size)
    throw DataError("patchify_mask: mask shape does not match backbone config");
  Mat<S> out(cfg.tokens(), cfg.mask_patch_dim());
  int row = 0;
  for (int gt = 0; gt < cfg.grid_t(); ++gt) {
    for (int gy = 0; gy < cfg.grid_h(); ++gy) {
      for (int gx = 0; gx < cfg.grid_w(); ++gx, ++row) {
        int col = 0;
        for (int dt = 0; dt < cfg.patch_t; ++dt)
          for (int dy = 0; dy < cfg.patch_h; ++dy)
            for (int dx = 0; dx < cfg.patch_w; ++dx)
              out(row, col++) = static_cast<S>(
                  mask.at(gt * cfg.patch_t + dt, gy * cfg.patch_h + dy,
                          gx * cfg.patch_w + dx));
      }
    }
  }
  return out;
}

template <typename S>
LocalizedBackbone<S>::LocalizedBackbone(const BackboneConfig& c, Rng& rng)
    : cfg(c),
      e_v("backbone.e_v", c.video_patch_dim(), c.dim),
      e_m("backbone.e_m", c.mask_patch_dim(), c.dim),
      pos("backbone.pos", c.tokens(), c.dim) {
  cfg.validate();
  fill_normal(e_v.value, rng, 1.0 / std::sqrt(double(c.video_patch_dim())));
  // e_m stays exactly zero (zero-init transparency)
  fill_normal(pos.value, rng, 0.02);
  for (int l = 0; l < c.n_layers; ++l) {
    blocks.emplace_back("backbone.block" + std::to_string(l), c.dim, c.n_heads,
                        c.ffn_hidden(), rng);
    adapters.emplace_back("backbone.adapter" + std::to_string(l), c.dim,
                          c.n_heads, c.ffn_hidden(), rng);
  }
}

template <typename S>
typename LocalizedBackbone<S>::Var LocalizedBackbone<S>::embed_streams(
    Tape<S>& t, Var video_patches, Var mask_patches) {
  Var x = t.matmul(video_patches, t.param(e_v));
  if (mask_patches.valid()) x = t.add(x, t.matmul(mask_patches, t.param(e_m)));
  return t.add(x, t.param(pos));
}

template <typename S>
typename LocalizedBackbone<S>::Var LocalizedBackbone<S>::embed_precomputed(
    Tape<S>& t, Var video_proj, Var mask_patches) {
  Var x = video_proj;
  if (mask_patches.valid()) x = t.add(x, t.matmul(mask_patches, t.param(e_m)));
  return t.add(x, t.param(pos));
}

template <typename S>
typename LocalizedBackbone<S>::Var LocalizedBackbone<S>::global_features(
    Tape<S>& t, Var x) {
  for (auto& block : blocks) x = block.forward(t, x);
  return x;
}

template <typename S>
typename LocalizedBackbone<S>::Var LocalizedBackbone<S>::gated_adapter_block(
    Tape<S>& t, int layer, Var h, Var f_syn) {
  return adapters[layer].forward(t, h, f_syn);
}

template <typename S>
typename LocalizedBackbone<S>::Var LocalizedBackbone<S>::regional_features(
    Tape<S>& t, Var x_prime, Var f_syn) {
  Var h = x_prime;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    h = blocks[l].forward(t, h);
    h = gated_adapter_block(t, static_cast<int>(l), h, f_syn);
  }
  return h;
}

template <typename S>
typename LocalizedBackbone<S>::Features LocalizedBackbone<S>::extract(
    Tape<S>& t, Var global_video_patches, Var global_mask_patches,
    Var focal_video_patches, Var focal_mask_patches) {
  Var x = embed_streams(t, global_video_patches, global_mask_patches);
  Var x_prime = embed_streams(t, focal_video_patches, focal_mask_patches);
  Var f_syn = global_features(t, x);
  Var f_syn_prime = regional_features(t, x_prime, f_syn);
  return {f_syn, f_syn_prime};
}

template <typename S>
void LocalizedBackbone<S>::collect(ParamList<S>& out) {
  out.push_back(&e_v);
  out.push_back(&e_m);
  out.push_back(&pos);
  for (auto& b : blocks) b.collect(out);
  for (auto& a : adapters) a.collect(out);
}

template <typename S>
void LocalizedBackbone<S>::collect_control(ParamList<S>& out) {
  out.push_back(&e_m);
  out.push_back(&pos);
  for (auto& a : adapters) a.collect(out);
}

template <typename S>
void LocalizedBackbone<S>::collect_shared(ParamList<S>& out) {
  out.push_back(&e_v);
  for (auto& b : blocks) b.collect(out);
}

template struct LocalizedBackbone<float>;
template struct LocalizedBackbone<double>;
template Mat<float> patchify_video<float>(const VideoClip&, const BackboneConfig&);
template Mat<double> patchify_video<double>(const VideoClip&, const BackboneConfig&);
template Mat<float> patchify_mask<float>(const MaskStream&, const BackboneConfig&);
template Mat<double> patchify_mask<double>(const MaskStream&, const BackboneConfig&);

}  // namespace backbone
}  // namespace segfoley
