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

#include "segfoley/cfm_generator.hpp"

#include <json.hpp>

namespace segfoley {
namespace cfm {

using nlohmann::json;

VisualPromptMode parse_visual_prompt(const std::string& name) {
  if (name == "full") return VisualPromptMode::kFull;
  if (name == "full+mask") return VisualPromptMode::kFullMask;
  if (name == "focal") return VisualPromptMode::kFocal;
  if (name == "focal+mask") return VisualPromptMode::kFocalMask;
  if (name == "saganet") return VisualPromptMode::kSaganet;
  throw ConfigError("unknown visual prompt mode: " + name);
}

std::string visual_prompt_name(VisualPromptMode mode) {
  switch (mode) {
    case VisualPromptMode::kFull: return "full";
    case VisualPromptMode::kFullMask: return "full+mask";
    case VisualPromptMode::kFocal: return "focal";
    case VisualPromptMode::kFocalMask: return "focal+mask";
    case VisualPromptMode::kSaganet: return "saganet";
  }
  throw ConfigError("bad visual prompt mode");
}

bool mode_uses_mask(VisualPromptMode mode) {
  return mode == VisualPromptMode::kFullMask ||
         mode == VisualPromptMode::kFocalMask ||
         mode == VisualPromptMode::kSaganet;
}

bool mode_uses_focal(VisualPromptMode mode) {
  return mode == VisualPromptMode::kFocal ||
         mode == VisualPromptMode::kFocalMask ||
         mode == VisualPromptMode::kSaganet;
}

template <typename S>
Mat<S> euler_sample(const VelocityField<S>& field, Eigen::Index rows,
                    Eigen::Index cols, int steps, double scale, Rng& rng) {
  if (steps < 1) throw ConfigError("euler_sample: steps must be >= 1");
  Mat<S> x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = static_cast<S>(rng.normal());
  const double dt = 1.0 / steps;
  for (int k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) / steps;
    Mat<S> v_cond = field(x, t, true);
    Mat<S> v;
    if (scale == 1.0) {
      v = std::move(v_cond);
    } else {
      Mat<S> v_uncond = field(x, t, false);
      v = cfg_velocity<S>(v_cond, v_uncond, scale);
    }
    x += static_cast<S>(dt) * v;
    if (!x.allFinite()) throw NumericError("euler_sample: non-finite state at step " +
                                           std::to_string(k));
  }
  return x;
}

template Mat<float> euler_sample<float>(const VelocityField<float>&, Eigen::Index,
                                        Eigen::Index, int, double, Rng&);
template Mat<double> euler_sample<double>(const VelocityField<double>&, Eigen::Index,
                                          Eigen::Index, int, double, Rng&);

template <typename S>
Generator<S>::Generator(const GeneratorConfig& c, Rng& rng)
    : cfg(c),
      in_proj("gen.in_proj", c.token_dim(), c.width, rng),
      pos("gen.pos", c.latent_tokens(), c.width),
      t_fc1("gen.t_fc1", c.time_feat, c.width, rng),
      t_fc2("gen.t_fc2", c.width, c.width, rng),
      cond_proj("gen.cond_proj", c.cond_dim, c.width, rng),
      fv_proj("gen.fv_proj", c.cond_dim, c.width, rng),
      text_table("gen.text_table", c.n_classes, c.width),
      null_text("gen.null_text", 1, c.width),
      null_vis("gen.null_vis", 1, c.width),
      null_fv("gen.null_fv", 1, c.width),
      mod_vis("gen.mod_vis", 1, c.width),
      mod_fv("gen.mod_fv", 1, c.width),
      mod_text("gen.mod_text", 1, c.width),
      ln_final("gen.ln_final", c.width),
      out_proj("gen.out_proj", c.width, c.token_dim(), rng) {
  cfg.validate();
  fill_normal(pos.value, rng, 0.02);
  fill_normal(text_table.value, rng, 0.02);
  fill_normal(null_text.value, rng, 0.02);
  fill_normal(null_vis.value, rng, 0.02);
  fill_normal(null_fv.value, rng, 0.02);
  fill_normal(mod_vis.value, rng, 0.02);
  fill_normal(mod_fv.value, rng, 0.02);
  fill_normal(mod_text.value, rng, 0.02);
  for (int b = 0; b < c.n_blocks; ++b)
    blocks.emplace_back("gen.block" + std::to_string(b), c.width, c.n_heads,
                        c.ffn_hidden(), rng);
}

template <typename S>
Mat<S> Generator<S>::time_features(double time) const {
  Mat<S> f(1, cfg.time_feat);
  const int half = cfg.time_feat / 2;
  for (int i = 0; i < half; ++i) {
    // geometric frequency ladder from 0.5 to ~100 cycles over [0,1]
    const double freq =
        0.5 * std::pow(200.0, static_cast<double>(i) / std::max(1, half - 1));
    f(0, 2 * i) = static_cast<S>(std::sin(2.0 * M_PI * freq * time));
    f(0, 2 * i + 1) = static_cast<S>(std::cos(2.0 * M_PI * freq * time));
  }
  return f;
}

template <typename S>
typename Generator<S>::Var Generator<S>::conditioning(Tape<S>& t, Var vis_tokens,
                                                      Var fv_source,
                                                      int text_class) {
  Var vis;
  if (vis_tokens.valid()) {
    vis = t.add_rowvec(cond_proj.forward(t, vis_tokens), t.param(mod_vis));
  } else {
    vis = t.add(t.param(null_vis), t.param(mod_vis));
  }
  Var fv;
  if (fv_source.valid()) {
    fv = t.add_rowvec(fv_proj.forward(t, t.mean_rows(fv_source)), t.param(mod_fv));
  } else {
    fv = t.add(t.param(null_fv), t.param(mod_fv));
  }
  Var text;
  if (text_class >= 0) {
    if (text_class >= cfg.n_classes)
      throw DataError("conditioning: class id out of range");
    text = t.add(t.select_row(t.param(text_table), text_class), t.param(mod_text));
  } else {
    text = t.add(t.param(null_text), t.param(mod_text));
  }
  return t.concat_rows({vis, fv, text});
}

template <typename S>
typename Generator<S>::Var Generator<S>::null_conditioning(Tape<S>& t) {
  Var vis = t.add(t.param(null_vis), t.param(mod_vis));
  Var fv = t.add(t.param(null_fv), t.param(mod_fv));
  Var text = t.add(t.param(null_text), t.param(mod_text));
  return t.concat_rows({vis, fv, text});
}

template <typename S>
typename Generator<S>::Var Generator<S>::forward(Tape<S>& t, const Mat<S>& x_tokens,
                                                 double time, Var cond) {
  if (x_tokens.rows() != cfg.latent_tokens() || x_tokens.cols() != cfg.token_dim())
    throw DataError("generator: latent token shape mismatch");
  Var h = in_proj.forward(t, t.input(x_tokens));
  h = t.add(h, t.param(pos));
  Var tf = t.input(time_features(time));
  Var temb = t_fc2.forward(t, t.gelu(t_fc1.forward(t, tf)));
  h = t.add_rowvec(h, temb);
  for (auto& block : blocks) h = block.forward(t, h, cond);
  return out_proj.forward(t, ln_final.forward(t, h));
}

template <typename S>
void Generator<S>::collect(ParamList<S>& out) {
  in_proj.collect(out);
  out.push_back(&pos);
  t_fc1.collect(out);
  t_fc2.collect(out);
  cond_proj.collect(out);
  fv_proj.collect(out);
  out.push_back(&text_table);
  out.push_back(&null_text);
  out.push_back(&null_vis);
  out.push_back(&null_fv);
  out.push_back(&mod_vis);
  out.push_back(&mod_fv);
  out.push_back(&mod_text);
  for (auto& b : blocks) b.collect(out);
  ln_final.collect(out);
  out_proj.collect(out);
}

template <typename S>
void Generator<S>::collect_lora(ParamList<S>& out) {
  for (auto& b : blocks) {
    for (Linear<S>* lin : {&b.cross_attn.wq, &b.cross_attn.wv}) {
      if (lin->lora) {
        out.push_back(&lin->lora->a);
        out.push_back(&lin->lora->b);
      }
    }
  }
}

template <typename S>
int apply_lora(Generator<S>& gen, int rank, double alpha, Rng& rng) {
  int adapted = 0;
  for (auto& b : gen.blocks) {
    b.cross_attn.wq.attach_lora(rank, alpha, rng);
    b.cross_attn.wv.attach_lora(rank, alpha, rng);
    adapted += 2;
  }
  if (adapted == 0) throw ConfigError("apply_lora: no target projections");
  return adapted;
}

template int apply_lora<float>(Generator<float>&, int, double, Rng&);
template int apply_lora<double>(Generator<double>&, int, double, Rng&);

std::string ModelConfig::to_json() const {
  json j;
  j["backbone"] = {{"patch_t", backbone.patch_t}, {"patch_h", backbone.patch_h},
                   {"patch_w", backbone.patch_w}, {"dim", backbone.dim},
                   {"n_layers", backbone.n_layers}, {"n_heads", backbone.n_heads},
                   {"input_frames", backbone.input_frames},
                   {"input_size", backbone.input_size}};
  j["generator"] = {{"latent_frames", generator.latent_frames},
                    {"latent_bands", generator.latent_bands},
                    {"time_patch", generator.time_patch},
                    {"width", generator.width},
                    {"n_blocks", generator.n_blocks},
                    {"n_heads", generator.n_heads},
                    {"n_classes", generator.n_classes},
                    {"cond_dim", generator.cond_dim},
                    {"time_feat", generator.time_feat}};
  j["mode"] = visual_prompt_name(mode);
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  ModelConfig c;
  const json& b = j.at("backbone");
  c.backbone.patch_t = b.at("patch_t");
  c.backbone.patch_h = b.at("patch_h");
  c.backbone.patch_w = b.at("patch_w");
  c.backbone.dim = b.at("dim");
  c.backbone.n_layers = b.at("n_layers");
  c.backbone.n_heads = b.at("n_heads");
  c.backbone.input_frames = b.at("input_frames");
  c.backbone.input_size = b.at("input_size");
  const json& g = j.at("generator");
  c.generator.latent_frames = g.at("latent_frames");
  c.generator.latent_bands = g.at("latent_bands");
  c.generator.time_patch = g.at("time_patch");
  c.generator.width = g.at("width");
  c.generator.n_blocks = g.at("n_blocks");
  c.generator.n_heads = g.at("n_heads");
  c.generator.n_classes = g.at("n_classes");
  c.generator.cond_dim = g.at("cond_dim");
  c.generator.time_feat = g.at("time_feat");
  c.mode = parse_visual_prompt(j.at("mode").get<std::string>());
  return c;
}

template <typename S>
SagaModel<S>::SagaModel(const ModelConfig& c, std::uint64_t init_seed) : cfg(c) {
  if (c.generator.cond_dim != c.backbone.dim)
    throw ConfigError("model: generator cond_dim must equal backbone dim");
  Rng rng(init_seed);
  backbone = LocalizedBackbone<S>(c.backbone, rng);
  generator = Generator<S>(c.generator, rng);
}

template <typename S>
typename SagaModel<S>::VisualFeatures SagaModel<S>::visual_features(
    Tape<S>& t, const SampleInputs<S>& in) {
  auto input_or_invalid = [&](const Mat<S>& m) {
    return m.size() ? t.input(m) : Var{};
  };
  // Embed a stream, preferring a cached E_V(video) product when present.
  auto embed = [&](const Mat<S>& proj, const Mat<S>& patches, const Mat<S>& mask) {
    if (proj.size())
      return backbone.embed_precomputed(t, t.input(proj), input_or_invalid(mask));
    return backbone.embed_streams(t, t.input(patches), input_or_invalid(mask));
  };
  const Mat<S> no_mask;
  const bool use_mask = mode_uses_mask(cfg.mode);
  switch (cfg.mode) {
    case VisualPromptMode::kFull:
    case VisualPromptMode::kFullMask: {
      Var x = embed(in.global_video_proj, in.global_video_patches,
                    use_mask ? in.global_mask_patches : no_mask);
      Var f = backbone.global_features(t, x);
      return {f, f};
    }
    case VisualPromptMode::kFocal:
    case VisualPromptMode::kFocalMask: {
      Var x = embed(in.focal_video_proj, in.focal_video_patches,
                    use_mask ? in.focal_mask_patches : no_mask);
      Var f = backbone.global_features(t, x);
      return {f, f};
    }
    case VisualPromptMode::kSaganet: {
      Var x = embed(in.global_video_proj, in.global_video_patches,
                    in.global_mask_patches);
      Var x_prime = embed(in.focal_video_proj, in.focal_video_patches,
                          in.focal_mask_patches);
      Var f_syn = backbone.global_features(t, x);
      Var f_prime = backbone.regional_features(t, x_prime, f_syn);
      return {f_prime, f_syn};
    }
  }
  throw ConfigError("bad visual prompt mode");
}

template <typename S>
Mat<S> SagaModel<S>::velocity(const Mat<S>& x_tokens, double time,
                              const SampleInputs<S>& in, int text_class,
                              bool conditioned) {
  Tape<S> tape(/*grads_enabled=*/false);
  Var cond;
  if (conditioned) {
    auto feats = visual_features(tape, in);
    cond = generator.conditioning(tape, feats.vis_tokens, feats.fv_source,
                                  text_class);
  } else {
    cond = generator.null_conditioning(tape);
  }
  Var v = generator.forward(tape, x_tokens, time, cond);
  return tape.val(v);
}

template <typename S>
Mat<S> SagaModel<S>::conditioning_value(const SampleInputs<S>& in, int text_class) {
  Tape<S> tape(/*grads_enabled=*/false);
  auto feats = visual_features(tape, in);
  Var cond = generator.conditioning(tape, feats.vis_tokens, feats.fv_source,
                                    text_class);
  return tape.val(cond);
}

template <typename S>
Mat<S> SagaModel<S>::null_conditioning_value() {
  Tape<S> tape(/*grads_enabled=*/false);
  return tape.val(generator.null_conditioning(tape));
}

template <typename S>
Mat<S> SagaModel<S>::velocity_with_cond(const Mat<S>& x_tokens, double time,
                                        const Mat<S>& cond_value) {
  Tape<S> tape(/*grads_enabled=*/false);
  Var v = generator.forward(tape, x_tokens, time, tape.input(cond_value));
  return tape.val(v);
}

template <typename S>
void SagaModel<S>::collect(ParamList<S>& out) {
  backbone.collect(out);
  generator.collect(out);
  generator.collect_lora(out);
}

template <typename S>
void SagaModel<S>::set_phase_end_to_end() {
  ParamList<S> all;
  collect(all);
  set_trainable(all, true);
}

template <typename S>
void SagaModel<S>::set_phase_control() {
  ParamList<S> all;
  collect(all);
  set_trainable(all, false);
  ParamList<S> control;
  backbone.collect_control(control);
  generator.collect_lora(control);
  set_trainable(control, true);
}

template <typename S>
Mat<S> pack_latent(const Mat<S>& latent, int time_patch) {
  const Eigen::Index frames = latent.rows();
  const Eigen::Index bands = latent.cols();
  if (frames % time_patch) throw DataError("pack_latent: frames not divisible");
  Mat<S> out(frames / time_patch, bands * time_patch);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (int p = 0; p < time_patch; ++p)
      out.row(i).segment(p * bands, bands) = latent.row(i * time_patch + p);
  return out;
}

template <typename S>
Mat<S> unpack_latent(const Mat<S>& tokens, int time_patch, int bands) {
  Mat<S> out(tokens.rows() * time_patch, bands);
  for (Eigen::Index i = 0; i < tokens.rows(); ++i)
    for (int p = 0; p < time_patch; ++p)
      out.row(i * time_patch + p) = tokens.row(i).segment(p * bands, bands);
  return out;
}

template Mat<float> pack_latent<float>(const Mat<float>&, int);
template Mat<double> pack_latent<double>(const Mat<double>&, int);
template Mat<float> unpack_latent<float>(const Mat<float>&, int, int);
template Mat<double> unpack_latent<double>(const Mat<double>&, int, int);

template <typename S>
SampleInputs<S> prepare_inputs(const SagaModel<S>& model, const VideoClip& video,
                               const MaskStream& mask, int class_id,
                               int min_crop) {
  const BackboneConfig& b = model.cfg.backbone;
  if (video.frames != b.input_frames)
    throw DataError("prepare_inputs: clip frame count does not match backbone");
  const VisualPromptMode mode = model.cfg.mode;

  SampleInputs<S> in;
  in.class_id = class_id;

  const bool wants_global = mode == VisualPromptMode::kFull ||
                            mode == VisualPromptMode::kFullMask ||
                            mode == VisualPromptMode::kSaganet;
  if (mode_uses_focal(mode)) {
    auto prompt = focal_prompt::build_focal_prompt(video, mask, b.input_size,
                                                   min_crop);
    in.focal_video_patches = backbone::patchify_video<S>(prompt.focal_video, b);
    if (mode_uses_mask(mode))
      in.focal_mask_patches = backbone::patchify_mask<S>(prompt.focal_mask, b);
    if (wants_global) {
      in.global_video_patches = backbone::patchify_video<S>(prompt.global_video, b);
      if (mode_uses_mask(mode))
        in.global_mask_patches = backbone::patchify_mask<S>(prompt.global_mask, b);
    }
  } else {
    const VideoClip g = focal_prompt::resize_video(video, b.input_size, b.input_size);
    in.global_video_patches = backbone::patchify_video<S>(g, b);
    if (mode_uses_mask(mode)) {
      const MaskStream gm = focal_prompt::resize_mask(mask, b.input_size, b.input_size);
      in.global_mask_patches = backbone::patchify_mask<S>(gm, b);
    }
  }
  return in;
}

template SampleInputs<float> prepare_inputs<float>(const SagaModel<float>&,
                                                   const VideoClip&,
                                                   const MaskStream&, int, int);
template SampleInputs<double> prepare_inputs<double>(const SagaModel<double>&,
                                                     const VideoClip&,
                                                     const MaskStream&, int, int);

template <typename S>
AudioTrack generate(SagaModel<S>& model, const VideoClip& video,
                    const MaskStream& mask, int text_class,
                    const GenerateOptions& opt) {
  SampleInputs<S> in = prepare_inputs<S>(model, video, mask, text_class);
  const GeneratorConfig& g = model.cfg.generator;
  Rng rng = Rng::derive(opt.seed, 0x5a6a4e7u, 1);
  const Mat<S> cond = model.conditioning_value(in, text_class);
  const Mat<S> null_cond = model.null_conditioning_value();
  VelocityField<S> field = [&](const Mat<S>& x, double t, bool conditioned) {
    return model.velocity_with_cond(x, t, conditioned ? cond : null_cond);
  };
  Mat<S> x = euler_sample<S>(field, g.latent_tokens(), g.token_dim(), opt.steps,
                             opt.cfg_scale, rng);
  Mat<S> latent = unpack_latent<S>(x, g.time_patch, g.latent_bands);
  MatF latent_f = latent.template cast<float>();
  return LatentCodec::synthesize(latent_f, opt.sample_rate);
}

template AudioTrack generate<float>(SagaModel<float>&, const VideoClip&,
                                    const MaskStream&, int, const GenerateOptions&);
template AudioTrack generate<double>(SagaModel<double>&, const VideoClip&,
                                     const MaskStream&, int, const GenerateOptions&);

template struct Generator<float>;
template struct Generator<double>;
template struct SagaModel<float>;
template struct SagaModel<double>;

}  // namespace cfm
}  // namespace segfoley
