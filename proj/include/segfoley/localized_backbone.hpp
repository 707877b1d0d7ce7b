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

#ifndef SEGFOLEY_LOCALIZED_BACKBONE_HPP_
#define SEGFOLEY_LOCALIZED_BACKBONE_HPP_

#include <string>
#include <vector>

#include "segfoley/focal_prompt.hpp"
#include "segfoley/media.hpp"
#include "segfoley/nn.hpp"

namespace segfoley {
namespace backbone {

struct BackboneConfig {
  int patch_t = 2;
  int patch_h = 32;
  int patch_w = 32;
  int dim = 48;
  int n_layers = 2;
  int n_heads = 4;
  int input_frames = 50;
  int input_size = 64;  // square H = W

  int grid_t() const { return input_frames / patch_t; }
  int grid_h() const { return input_size / patch_h; }
  int grid_w() const { return input_size / patch_w; }
  int tokens() const { return grid_t() * grid_h() * grid_w(); }
  int video_patch_dim() const { return patch_t * patch_h * patch_w * 3; }
  int mask_patch_dim() const { return patch_t * patch_h * patch_w; }
  int ffn_hidden() const { return dim * 4; }

  void validate() const {
    if (input_frames % patch_t || input_size % patch_h || input_size % patch_w)
      throw ConfigError("backbone: input dims not divisible by patch dims");
    if (dim % n_heads) throw ConfigError("backbone: dim not divisible by heads");
  }
};

// Token-major (t, then y, then x) 3-D patchification.
template <typename S>
Mat<S> patchify_video(const VideoClip& clip, const BackboneConfig& cfg);
template <typename S>
Mat<S> patchify_mask(const MaskStream& mask, const BackboneConfig& cfg);

// Dual-stream mask-aware extractor:
//   x  = E_V(V) + E_M(M) + P
//   F_syn  = F_G(x)
//   F_syn' = F_R(x', F_syn)
// F_R runs the same transformer blocks as F_G (shared weights) and applies a
// zero-gated cross-attention adapter after each block. At initialization the
// whole module is the plain backbone applied to the focal crop: E_M outputs
// zeros and every adapter gate is zero.
template <typename S>
struct LocalizedBackbone {
  BackboneConfig cfg;
  Param<S> e_v;   // video patch embedding, frozen during control training
  Param<S> e_m;   // mask patch embedding, zero-initialized
  Param<S> pos;   // learnable positional encodings
  std::vector<TransformerBlock<S>> blocks;   // shared by F_G and F_R
  std::vector<GatedAdapter<S>> adapters;     // one per block, F_R only

  LocalizedBackbone() = default;
  LocalizedBackbone(const BackboneConfig& c, Rng& rng);

  using Var = typename Tape<S>::Var;

  // x = E_V(video) + E_M(mask) + P. Pass an invalid mask Var to embed a
  // maskless stream (equivalent to an all-zero mask).
  Var embed_streams(Tape<S>& t, Var video_patches, Var mask_patches);
  // Same but with a precomputed E_V(video) product (frozen-E_V fast path).
  Var embed_precomputed(Tape<S>& t, Var video_proj, Var mask_patches);

  Var global_features(Tape<S>& t, Var x);
  Var gated_adapter_block(Tape<S>& t, int layer, Var h, Var f_syn);
  Var regional_features(Tape<S>& t, Var x_prime, Var f_syn);

  struct Features {
    Var f_syn;
    Var f_syn_prime;
  };
  // Full Eqs. 1-4 composition over a focal prompt.
  Features extract(Tape<S>& t, Var global_video_patches, Var global_mask_patches,
                   Var focal_video_patches, Var focal_mask_patches);

  void collect(ParamList<S>& out);
  // The tensors a control-training phase updates: E_M, P and the adapters.
  void collect_control(ParamList<S>& out);
  // The shared trunk: E_V plus the transformer blocks.
  void collect_shared(ParamList<S>& out);
};

extern template struct LocalizedBackbone<float>;
extern template struct LocalizedBackbone<double>;
extern template Mat<float> patchify_video<float>(const VideoClip&, const BackboneConfig&);
extern template Mat<double> patchify_video<double>(const VideoClip&, const BackboneConfig&);
extern template Mat<float> patchify_mask<float>(const MaskStream&, const BackboneConfig&);
extern template Mat<double> patchify_mask<double>(const MaskStream&, const BackboneConfig&);

}  // namespace backbone
}  // namespace segfoley

#endif  // SEGFOLEY_LOCALIZED_BACKBONE_HPP_
