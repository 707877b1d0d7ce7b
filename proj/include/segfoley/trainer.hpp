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

#ifndef SEGFOLEY_TRAINER_HPP_
#define SEGFOLEY_TRAINER_HPP_

#include <memory>
#include <string>
#include <vector>

#include "segfoley/cfm_generator.hpp"
#include "segfoley/checkpoint.hpp"
#include "segfoley/synthetic_av.hpp"

namespace segfoley {
namespace cfm {

struct TrainConfig {
  std::string manifest_path;
  std::string out_dir;
  ModelConfig model;
  int steps = 1200;
  int batch_size = 4;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double weight_decay = 0.0;
  double text_dropout = 0.5;
  double all_dropout = 0.1;
  std::uint64_t seed = 0;
  std::uint64_t init_seed = 1;
  int val_every = 200;
  int checkpoint_every = 400;
  int log_every = 10;
  // Phase selection: with a base checkpoint the run trains only the control
  // module (E_M, P, adapters, LoRA); without one it trains end to end.
  std::string base_checkpoint;
  bool lora = false;
  int lora_rank = 16;
  double lora_alpha = 32.0;
  int min_crop = 48;
  bool quiet = false;
};

// Media cached per training record, stored quantized to keep the resident
// set small; patch tensors are materialized per batch sample.
struct CachedClip {
  std::vector<std::uint8_t> global_video;  // input_size^2 * frames * 3
  std::vector<std::uint8_t> focal_video;
  std::vector<std::uint8_t> global_mask;   // input_size^2 * frames
  std::vector<std::uint8_t> focal_mask;
  MatF latent_tokens;  // target x1, packed token layout
  int class_id = 0;
};

class TrainState {
 public:
  explicit TrainState(TrainConfig cfg);

  // One optimizer step over a freshly drawn batch; returns the batch loss.
  // Throws NumericError (with diagnostics) on a non-finite loss.
  double training_step();

  // Deterministic validation loss: fixed (t, x0) per val record, full
  // conditioning, no dropout.
  double validation_loss();

  void save_checkpoint(const std::string& path);
  void load_checkpoint(const std::string& path);

  // Runs the remaining steps with logging and periodic checkpoints; returns
  // the final checkpoint path.
  std::string run();

  SagaModel<float>& model() { return *model_; }
  AdamW<float>& optimizer() { return *opt_; }
  std::int64_t step() const { return opt_->step_count(); }
  const TrainConfig& config() const { return cfg_; }
  int train_size() const { return static_cast<int>(train_.size()); }

  // Materializes the autograd inputs for one cached clip.
  SampleInputs<float> sample_inputs(const CachedClip& clip) const;
  const std::vector<CachedClip>& train_set() const { return train_; }

 private:
  void load_data();
  CachedClip cache_clip(const synthetic_av::ManifestRecord& rec,
                        const synthetic_av::Manifest& manifest) const;
  void refresh_video_proj_cache();

  TrainConfig cfg_;
  std::unique_ptr<SagaModel<float>> model_;
  std::unique_ptr<AdamW<float>> opt_;
  std::vector<CachedClip> train_;
  std::vector<CachedClip> val_;
  // E_V(video) products cached while E_V is frozen (control phase).
  std::vector<MatF> train_gproj_, train_fproj_, val_gproj_, val_fproj_;
  bool control_phase_ = false;
  double last_loss_ = 0.0;
};

// Convenience wrapper used by the CLI: builds the state, runs to completion,
// returns the final checkpoint path.
std::string train_run(const TrainConfig& cfg);

// Restores a model (and its mode) from a checkpoint.
std::unique_ptr<SagaModel<float>> load_model(const std::string& checkpoint_path);

}  // namespace cfm
}  // namespace segfoley

#endif  // SEGFOLEY_TRAINER_HPP_
