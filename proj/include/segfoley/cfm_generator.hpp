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

#ifndef SEGFOLEY_CFM_GENERATOR_HPP_
#define SEGFOLEY_CFM_GENERATOR_HPP_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "segfoley/localized_backbone.hpp"
#include "segfoley/spectrogram.hpp"

namespace segfoley {
namespace cfm {

using backbone::BackboneConfig;
using backbone::LocalizedBackbone;

// Which visual streams condition the generator. kSaganet fuses global and
// focal streams with masks through the gated adapters; the others run the
// plain extractor on a single stream.
enum class VisualPromptMode { kFull, kFullMask, kFocal, kFocalMask, kSaganet };

VisualPromptMode parse_visual_prompt(const std::string& name);
std::string visual_prompt_name(VisualPromptMode mode);
bool mode_uses_mask(VisualPromptMode mode);
bool mode_uses_focal(VisualPromptMode mode);

struct GeneratorConfig {
  int latent_frames = 200;  // spectrogram frames (10 ms hop)
  int latent_bands = LatentCodec::kBands;
  int time_patch = 2;       // latent frames per token
  int width = 128;
  int n_blocks = 4;
  int n_heads = 4;
  int n_classes = 4;
  int cond_dim = 48;        // backbone token width
  int time_feat = 64;

  int latent_tokens() const { return latent_frames / time_patch; }
  int token_dim() const { return latent_bands * time_patch; }
  int ffn_hidden() const { return width * 4; }

  void validate() const {
    if (latent_frames % time_patch)
      throw ConfigError("generator: latent_frames not divisible by time_patch");
    if (width % n_heads) throw ConfigError("generator: width not divisible by heads");
  }
};

// ---- conditional flow matching primitives ----

// Rectified linear path: x_t = (1-t) x0 + t x1, target velocity x1 - x0.
template <typename S>
std::pair<Mat<S>, Mat<S>> flow_interpolate(const Mat<S>& x0, const Mat<S>& x1,
                                           double t) {
  if (x0.rows() != x1.rows() || x0.cols() != x1.cols())
    throw DataError("flow_interpolate: shape mismatch");
  Mat<S> xt = (S(1) - S(t)) * x0 + S(t) * x1;
  Mat<S> v = x1 - x0;
  return {std::move(xt), std::move(v)};
}

// v_uncond + scale * (v_cond - v_uncond).
template <typename S>
Mat<S> cfg_velocity(const Mat<S>& v_cond, const Mat<S>& v_uncond, double scale) {
  if (v_cond.rows() != v_uncond.rows() || v_cond.cols() != v_uncond.cols())
    throw DataError("cfg_velocity: shape mismatch");
  return v_uncond + S(scale) * (v_cond - v_uncond);
}

// Velocity field interface for the sampler; `conditioned` false selects the
// null-conditioned branch.
template <typename S>
using VelocityField = std::function<Mat<S>(const Mat<S>& x, double t, bool conditioned)>;

// Fixed-step Euler from x0 ~ N(0, I): x += (1/steps) * cfg(...). Throws
// NumericError on non-finite state.
template <typename S>
Mat<S> euler_sample(const VelocityField<S>& field, Eigen::Index rows,
                    Eigen::Index cols, int steps, double scale, Rng& rng);

// ---- DiT ----

template <typename S>
struct DiTBlock {
  LayerNorm<S> ln1, ln2, ln3;
  MultiHeadAttention<S> self_attn;
  MultiHeadAttention<S> cross_attn;  // keys/values consume conditioning tokens
  FeedForward<S> ffn;

  DiTBlock() = default;
  DiTBlock(const std::string& prefix, int width, int heads, int ffn_hidden,
           Rng& rng)
      : ln1(prefix + ".ln1", width),
        ln2(prefix + ".ln2", width),
        ln3(prefix + ".ln3", width),
        self_attn(prefix + ".self", width, heads, rng),
        cross_attn(prefix + ".cross", width, heads, rng),
        ffn(prefix + ".ffn", width, ffn_hidden, rng) {}

  typename Tape<S>::Var forward(Tape<S>& t, typename Tape<S>::Var h,
                                typename Tape<S>::Var cond) {
    auto n1 = ln1.forward(t, h);
    h = t.add(h, self_attn.forward(t, n1, n1));
    h = t.add(h, cross_attn.forward(t, ln2.forward(t, h), cond));
    h = t.add(h, ffn.forward(t, ln3.forward(t, h)));
    return h;
  }

  void collect(ParamList<S>& out) {
    ln1.collect(out);
    ln2.collect(out);
    ln3.collect(out);
    self_attn.collect(out);
    cross_attn.collect(out);
    ffn.collect(out);
  }
};

// Velocity-predicting token mixer over latent tokens with cross-attention to
// the conditioning set [visual tokens, f_v, f_t]. Dropped conditioning is
// replaced by learned null embeddings.
template <typename S>
struct Generator {
  GeneratorConfig cfg;
  Linear<S> in_proj;
  Param<S> pos;
  Linear<S> t_fc1, t_fc2;
  Linear<S> cond_proj;  // visual tokens -> width
  Linear<S> fv_proj;    // pooled clip feature -> width
  Param<S> text_table;  // n_classes x width
  Param<S> null_text, null_vis, null_fv;
  Param<S> mod_vis, mod_fv, mod_text;  // modality tag embeddings
  std::vector<DiTBlock<S>> blocks;
  LayerNorm<S> ln_final;
  Linear<S> out_proj;

  Generator() = default;
  Generator(const GeneratorConfig& c, Rng& rng);

  using Var = typename Tape<S>::Var;

  // Assembles conditioning tokens. Invalid vis/fv vars or text < 0 select
  // the corresponding null embedding.
  Var conditioning(Tape<S>& t, Var vis_tokens, Var fv_source, int text_class);
  Var null_conditioning(Tape<S>& t);

  // Velocity prediction for latent tokens x_t at schedule time `time`.
  Var forward(Tape<S>& t, const Mat<S>& x_tokens, double time, Var cond);

  void collect(ParamList<S>& out);
  // LoRA'd tensors live on the cross-attention q/v projections.
  void collect_lora(ParamList<S>& out);

  Mat<S> time_features(double time) const;
};

// Adds LoRA (rank, alpha) to the query and value projections of every DiT
// cross-attention block and freezes the wrapped base projections. Returns
// the number of adapted projections.
template <typename S>
int apply_lora(Generator<S>& gen, int rank, double alpha, Rng& rng);

// ---- combined model ----

struct ModelConfig {
  BackboneConfig backbone;
  GeneratorConfig generator;
  VisualPromptMode mode = VisualPromptMode::kSaganet;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

// Precomputed per-clip tensors for one training/eval sample. When E_V is
// frozen the *_video_proj fields may carry cached E_V(video) products; they
// take precedence over the raw patch fields.
template <typename S>
struct SampleInputs {
  Mat<S> global_video_patches;  // empty when unused by the mode
  Mat<S> focal_video_patches;
  Mat<S> global_mask_patches;
  Mat<S> focal_mask_patches;
  Mat<S> global_video_proj;
  Mat<S> focal_video_proj;
  int class_id = -1;
};

template <typename S>
struct SagaModel {
  ModelConfig cfg;
  LocalizedBackbone<S> backbone;
  Generator<S> generator;

  SagaModel(const ModelConfig& c, std::uint64_t init_seed);

  using Var = typename Tape<S>::Var;

  struct VisualFeatures {
    Var vis_tokens;  // conditioning token set
    Var fv_source;   // tokens pooled into the clip-level feature
  };
  // Runs the visual stack per cfg.mode.
  VisualFeatures visual_features(Tape<S>& t, const SampleInputs<S>& in);

  // Full conditional velocity evaluation (inference path).
  Mat<S> velocity(const Mat<S>& x_tokens, double time, const SampleInputs<S>& in,
                  int text_class, bool conditioned);

  // Conditioning tokens evaluated once; sampling reuses them across steps.
  Mat<S> conditioning_value(const SampleInputs<S>& in, int text_class);
  Mat<S> null_conditioning_value();
  Mat<S> velocity_with_cond(const Mat<S>& x_tokens, double time,
                            const Mat<S>& cond_value);

  void collect(ParamList<S>& out);
  // Freeze/unfreeze sets for the two training phases. `end_to_end` trains
  // everything; control training freezes the shared trunk and the generator
  // and leaves E_M, P, adapters (and LoRA, when attached) trainable.
  void set_phase_end_to_end();
  void set_phase_control();
};

// Latent token packing: T_lat x bands <-> tokens x (bands * time_patch).
template <typename S>
Mat<S> pack_latent(const Mat<S>& latent, int time_patch);
template <typename S>
Mat<S> unpack_latent(const Mat<S>& tokens, int time_patch, int bands);

// Builds SampleInputs from raw media for the model's mode. `min_crop` is the
// focal-prompt minimum crop size in source pixels.
template <typename S>
SampleInputs<S> prepare_inputs(const SagaModel<S>& model, const VideoClip& video,
                               const MaskStream& mask, int class_id,
                               int min_crop = 48);

struct GenerateOptions {
  int steps = 25;
  double cfg_scale = 7.0;
  std::uint64_t seed = 0;
  int sample_rate = 8000;
};

// End-to-end generation: focal prompt -> backbone -> conditioning -> Euler
// sampling -> waveform. `text_class` < 0 runs with the null text embedding.
template <typename S>
AudioTrack generate(SagaModel<S>& model, const VideoClip& video,
                    const MaskStream& mask, int text_class,
                    const GenerateOptions& opt);

extern template struct Generator<float>;
extern template struct Generator<double>;
extern template struct SagaModel<float>;
extern template struct SagaModel<double>;

}  // namespace cfm
}  // namespace segfoley

#endif  // SEGFOLEY_CFM_GENERATOR_HPP_
