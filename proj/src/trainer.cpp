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

#include "segfoley/trainer.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "segfoley/focal_prompt.hpp"

namespace segfoley {
namespace cfm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using synthetic_av::Manifest;
using synthetic_av::ManifestRecord;

std::vector<std::uint8_t> quantize_video(const VideoClip& clip) {
  std::vector<std::uint8_t> out(clip.data.size());
  for (std::size_t i = 0; i < clip.data.size(); ++i)
    out[i] = static_cast<std::uint8_t>(
        std::lrintf(std::clamp(clip.data[i], 0.0f, 1.0f) * 255.0f));
  return out;
}

VideoClip dequantize_video(const std::vector<std::uint8_t>& buf, int frames,
                           int size, double fps) {
  VideoClip clip(frames, size, size, fps);
  for (std::size_t i = 0; i < buf.size(); ++i)
    clip.data[i] = static_cast<float>(buf[i]) / 255.0f;
  return clip;
}

MaskStream unpack_mask(const std::vector<std::uint8_t>& buf, int frames, int size) {
  MaskStream m(frames, size, size);
  m.data = buf;
  return m;
}

constexpr std::uint64_t kBatchStream = 0xba7c4b17;
constexpr std::uint64_t kSampleStream = 0x5a3b1e00;
constexpr std::uint64_t kValStream = 0xeba10001;

}  // namespace

TrainState::TrainState(TrainConfig cfg) : cfg_(std::move(cfg)) {
  model_ = std::make_unique<SagaModel<float>>(cfg_.model, cfg_.init_seed);

  if (!cfg_.base_checkpoint.empty()) {
    Checkpoint base = Checkpoint::load(cfg_.base_checkpoint);
    ParamList<float> bp, gp;
    model_->backbone.collect(bp);
    model_->generator.collect(gp);
    deserialize_params<float>(base.get("backbone"), bp);
    deserialize_params<float>(base.get("generator"), gp);
    control_phase_ = true;
  } else {
    control_phase_ = false;
  }

  if (cfg_.lora) {
    if (!control_phase_)
      throw ConfigError("lora fine-tuning requires a base checkpoint");
    Rng lora_rng = Rng::derive(cfg_.init_seed, 0x10a4, 0);
    apply_lora(model_->generator, cfg_.lora_rank, cfg_.lora_alpha, lora_rng);
  }

  if (control_phase_)
    model_->set_phase_control();
  else
    model_->set_phase_end_to_end();

  ParamList<float> params;
  model_->collect(params);
  typename AdamW<float>::Options opt;
  opt.lr = cfg_.lr;
  opt.beta1 = cfg_.beta1;
  opt.beta2 = cfg_.beta2;
  opt.weight_decay = cfg_.weight_decay;
  opt_ = std::make_unique<AdamW<float>>(std::move(params), opt);

  load_data();
  if (control_phase_) refresh_video_proj_cache();
}

void TrainState::load_data() {
  const Manifest manifest = synthetic_av::read_manifest(cfg_.manifest_path);
  for (const ManifestRecord* rec : manifest.split("train"))
    train_.push_back(cache_clip(*rec, manifest));
  for (const ManifestRecord* rec : manifest.split("val"))
    val_.push_back(cache_clip(*rec, manifest));
  if (train_.empty()) throw DataError("training manifest has no train records");
}

CachedClip TrainState::cache_clip(const ManifestRecord& rec,
                                  const Manifest& manifest) const {
  const VideoClip video = read_rvid(manifest.resolve(rec.video_path));
  const MaskStream mask =
      read_mrle(manifest.resolve(rec.mask_paths.at(rec.target_index)));
  const AudioTrack audio = read_wav(manifest.resolve(rec.audio_target_path));

  const backbone::BackboneConfig& b = cfg_.model.backbone;
  if (video.frames != b.input_frames)
    throw DataError("clip frame count does not match backbone config: " + rec.id);

  CachedClip clip;
  clip.class_id = rec.class_label;

  const VisualPromptMode mode = cfg_.model.mode;
  const bool wants_global = mode == VisualPromptMode::kFull ||
                            mode == VisualPromptMode::kFullMask ||
                            mode == VisualPromptMode::kSaganet;
  if (mode_uses_focal(mode)) {
    auto prompt =
        focal_prompt::build_focal_prompt(video, mask, b.input_size, cfg_.min_crop);
    clip.focal_video = quantize_video(prompt.focal_video);
    if (mode_uses_mask(mode)) clip.focal_mask = prompt.focal_mask.data;
    if (wants_global) {
      clip.global_video = quantize_video(prompt.global_video);
      if (mode_uses_mask(mode)) clip.global_mask = prompt.global_mask.data;
    }
  } else {
    clip.global_video = quantize_video(
        focal_prompt::resize_video(video, b.input_size, b.input_size));
    if (mode_uses_mask(mode))
      clip.global_mask =
          focal_prompt::resize_mask(mask, b.input_size, b.input_size).data;
  }

  MatF latent = LatentCodec::analyze(audio);
  if (latent.rows() != cfg_.model.generator.latent_frames)
    throw DataError("clip latent length does not match generator config: " + rec.id);
  clip.latent_tokens = pack_latent<float>(latent, cfg_.model.generator.time_patch);
  return clip;
}

SampleInputs<float> TrainState::sample_inputs(const CachedClip& clip) const {
  const backbone::BackboneConfig& b = cfg_.model.backbone;
  SampleInputs<float> in;
  in.class_id = clip.class_id;
  if (!clip.global_video.empty())
    in.global_video_patches = backbone::patchify_video<float>(
        dequantize_video(clip.global_video, b.input_frames, b.input_size, 25.0), b);
  if (!clip.focal_video.empty())
    in.focal_video_patches = backbone::patchify_video<float>(
        dequantize_video(clip.focal_video, b.input_frames, b.input_size, 25.0), b);
  if (!clip.global_mask.empty())
    in.global_mask_patches = backbone::patchify_mask<float>(
        unpack_mask(clip.global_mask, b.input_frames, b.input_size), b);
  if (!clip.focal_mask.empty())
    in.focal_mask_patches = backbone::patchify_mask<float>(
        unpack_mask(clip.focal_mask, b.input_frames, b.input_size), b);
  return in;
}

void TrainState::refresh_video_proj_cache() {
  const MatF& ev = model_->backbone.e_v.value;
  auto project = [&](std::vector<MatF>& out_g, std::vector<MatF>& out_f,
                     const std::vector<CachedClip>& set) {
    out_g.assign(set.size(), MatF());
    out_f.assign(set.size(), MatF());
    const backbone::BackboneConfig& b = cfg_.model.backbone;
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (!set[i].global_video.empty())
        out_g[i] = backbone::patchify_video<float>(
                       dequantize_video(set[i].global_video, b.input_frames,
                                        b.input_size, 25.0), b) * ev;
      if (!set[i].focal_video.empty())
        out_f[i] = backbone::patchify_video<float>(
                       dequantize_video(set[i].focal_video, b.input_frames,
                                        b.input_size, 25.0), b) * ev;
    }
  };
  project(train_gproj_, train_fproj_, train_);
  project(val_gproj_, val_fproj_, val_);
}

double TrainState::training_step() {
  const auto step_idx = static_cast<std::uint64_t>(opt_->step_count());
  opt_->zero_grad();
  Rng batch_rng = Rng::derive(cfg_.seed, kBatchStream, step_idx);
  double total = 0.0;
  const double inv_batch = 1.0 / cfg_.batch_size;
  for (int b = 0; b < cfg_.batch_size; ++b) {
    const auto idx = batch_rng.uniform_int(train_.size());
    Rng srng = Rng::derive(cfg_.seed, kSampleStream + step_idx, b);
    const CachedClip& clip = train_[idx];

    SampleInputs<float> in = sample_inputs(clip);
    if (control_phase_) {
      if (train_gproj_[idx].size()) {
        in.global_video_proj = train_gproj_[idx];
        in.global_video_patches.resize(0, 0);
      }
      if (train_fproj_[idx].size()) {
        in.focal_video_proj = train_fproj_[idx];
        in.focal_video_patches.resize(0, 0);
      }
    }

    const double t = srng.uniform();
    MatF x0(clip.latent_tokens.rows(), clip.latent_tokens.cols());
    for (Eigen::Index i = 0; i < x0.rows(); ++i)
      for (Eigen::Index j = 0; j < x0.cols(); ++j)
        x0(i, j) = static_cast<float>(srng.normal());
    auto [xt, v] = flow_interpolate<float>(x0, clip.latent_tokens, t);
    const bool drop_text = srng.uniform() < cfg_.text_dropout;
    const bool drop_all = srng.uniform() < cfg_.all_dropout;

    Tape<float> tape;
    typename Tape<float>::Var cond;
    if (drop_all) {
      cond = model_->generator.null_conditioning(tape);
    } else {
      auto feats = model_->visual_features(tape, in);
      cond = model_->generator.conditioning(
          tape, feats.vis_tokens, feats.fv_source, drop_text ? -1 : clip.class_id);
    }
    auto pred = model_->generator.forward(tape, xt, t, cond);
    auto loss = tape.mse(pred, v);
    tape.backward(tape.scale(loss, static_cast<float>(inv_batch)));
    total += tape.val(loss)(0, 0);
  }
  const double loss = total * inv_batch;
  if (!std::isfinite(loss))
    throw NumericError("training_step: non-finite loss at step " +
                       std::to_string(step_idx) + " (lr=" + std::to_string(cfg_.lr) +
                       ", batch=" + std::to_string(cfg_.batch_size) + ")");
  opt_->step();
  last_loss_ = loss;
  return loss;
}

double TrainState::validation_loss() {
  if (val_.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < val_.size(); ++i) {
    const CachedClip& clip = val_[i];
    Rng rng = Rng::derive(kValStream, i, 0);
    const double t = rng.uniform();
    MatF x0(clip.latent_tokens.rows(), clip.latent_tokens.cols());
    for (Eigen::Index r = 0; r < x0.rows(); ++r)
      for (Eigen::Index c = 0; c < x0.cols(); ++c)
        x0(r, c) = static_cast<float>(rng.normal());
    auto [xt, v] = flow_interpolate<float>(x0, clip.latent_tokens, t);

    SampleInputs<float> in = sample_inputs(clip);
    if (control_phase_) {
      if (val_gproj_[i].size()) {
        in.global_video_proj = val_gproj_[i];
        in.global_video_patches.resize(0, 0);
      }
      if (val_fproj_[i].size()) {
        in.focal_video_proj = val_fproj_[i];
        in.focal_video_patches.resize(0, 0);
      }
    }

    Tape<float> tape(/*grads_enabled=*/false);
    auto feats = model_->visual_features(tape, in);
    auto cond = model_->generator.conditioning(tape, feats.vis_tokens,
                                               feats.fv_source, clip.class_id);
    auto pred = model_->generator.forward(tape, xt, t, cond);
    total += tape.val(tape.mse(pred, v))(0, 0);
  }
  return total / static_cast<double>(val_.size());
}

void TrainState::save_checkpoint(const std::string& path) {
  Checkpoint ckpt;
  json cfg_json;
  cfg_json["model"] = json::parse(cfg_.model.to_json());
  cfg_json["lora"] = cfg_.lora;
  cfg_json["lora_rank"] = cfg_.lora_rank;
  cfg_json["lora_alpha"] = cfg_.lora_alpha;
  cfg_json["seed"] = cfg_.seed;
  cfg_json["step"] = opt_->step_count();
  ckpt.set("config", cfg_json.dump());

  ParamList<float> bp, gp, lp;
  model_->backbone.collect(bp);
  model_->generator.collect(gp);
  model_->generator.collect_lora(lp);
  ckpt.set("backbone", serialize_params<float>(bp));
  ckpt.set("generator", serialize_params<float>(gp));
  if (!lp.empty()) ckpt.set("lora", serialize_params<float>(lp));
  ckpt.set("optimizer", serialize_optimizer<float>(*opt_));
  std::ostringstream rng_state;
  rng_state << cfg_.seed << ' ' << opt_->step_count();
  ckpt.set("rng_state", rng_state.str());
  ckpt.save(path);
}

void TrainState::load_checkpoint(const std::string& path) {
  Checkpoint ckpt = Checkpoint::load(path);
  ParamList<float> bp, gp, lp;
  model_->backbone.collect(bp);
  model_->generator.collect(gp);
  model_->generator.collect_lora(lp);
  deserialize_params<float>(ckpt.get("backbone"), bp);
  deserialize_params<float>(ckpt.get("generator"), gp);
  if (ckpt.has("lora")) {
    if (lp.empty()) throw DataError("checkpoint has LoRA but model does not");
    deserialize_params<float>(ckpt.get("lora"), lp);
  }
  deserialize_optimizer<float>(ckpt.get("optimizer"), *opt_);
  if (control_phase_)
    model_->set_phase_control();
  else
    model_->set_phase_end_to_end();
  if (control_phase_) refresh_video_proj_cache();
}

std::string TrainState::run() {
  fs::create_directories(cfg_.out_dir);
  const std::string latest = (fs::path(cfg_.out_dir) / "checkpoint_latest.ckpt").string();
  const std::string final_path = (fs::path(cfg_.out_dir) / "checkpoint_final.ckpt").string();
  if (fs::exists(latest)) {
    load_checkpoint(latest);
    if (!cfg_.quiet)
      std::printf("resuming from %s at step %lld\n", latest.c_str(),
                  static_cast<long long>(step()));
  }
  std::ofstream loss_log((fs::path(cfg_.out_dir) / "loss_log.tsv").string(),
                         std::ios::app);
  std::ofstream val_log((fs::path(cfg_.out_dir) / "val_log.tsv").string(),
                        std::ios::app);

  while (step() < cfg_.steps) {
    const double loss = training_step();
    loss_log << step() << '\t' << loss << '\n';
    if (!cfg_.quiet && step() % cfg_.log_every == 0) {
      std::printf("step %6lld  loss %.5f\n", static_cast<long long>(step()), loss);
      std::fflush(stdout);
    }
    if (cfg_.val_every > 0 && step() % cfg_.val_every == 0) {
      const double vl = validation_loss();
      val_log << step() << '\t' << vl << '\n';
      if (!cfg_.quiet) std::printf("step %6lld  val_loss %.5f\n",
                                   static_cast<long long>(step()), vl);
    }
    if (cfg_.checkpoint_every > 0 && step() % cfg_.checkpoint_every == 0)
      save_checkpoint(latest);
  }
  save_checkpoint(latest);
  save_checkpoint(final_path);
  return final_path;
}

std::string train_run(const TrainConfig& cfg) {
  TrainState state(cfg);
  return state.run();
}

std::unique_ptr<SagaModel<float>> load_model(const std::string& checkpoint_path) {
  Checkpoint ckpt = Checkpoint::load(checkpoint_path);
  const json cfg_json = json::parse(ckpt.get("config"));
  ModelConfig mc = ModelConfig::from_json(cfg_json.at("model").dump());
  auto model = std::make_unique<SagaModel<float>>(mc, /*init_seed=*/0);
  if (cfg_json.value("lora", false)) {
    Rng rng(0);
    apply_lora(model->generator, cfg_json.value("lora_rank", 16),
               cfg_json.value("lora_alpha", 32.0), rng);
  }
  ParamList<float> bp, gp, lp;
  model->backbone.collect(bp);
  model->generator.collect(gp);
  model->generator.collect_lora(lp);
  deserialize_params<float>(ckpt.get("backbone"), bp);
  deserialize_params<float>(ckpt.get("generator"), gp);
  if (ckpt.has("lora")) deserialize_params<float>(ckpt.get("lora"), lp);
  return model;
}

}  // namespace cfm
}  // namespace segfoley
