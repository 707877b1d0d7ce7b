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

#ifndef SEGFOLEY_SPECTROGRAM_HPP_
#define SEGFOLEY_SPECTROGRAM_HPP_

#include "segfoley/autograd.hpp"
#include "segfoley/media.hpp"

namespace segfoley {

// Log-magnitude band analysis used as the generator's audio latent, plus a
// sinusoidal resynthesis back to a waveform. Band centers sit on quarter
// octaves so every class tone lands exactly on one band; see class_tone_hz.
//
// Latent layout: T_lat x n_bands, T_lat = duration * 100 (10 ms hop).
// Values are an affine log map with silence at -1 and a full-scale tone
// near +1.
class LatentCodec {
 public:
  static constexpr int kBands = 16;
  static constexpr double kHopS = 0.01;
  static constexpr double kWindowS = 0.08;

  // Band j center: 330 * 2^((j-4)/4) Hz. Class k tone sits on band k+4.
  static double band_hz(int band);

  static int latent_frames(double duration_s) {
    return static_cast<int>(std::lround(duration_s * 100.0));
  }

  // Waveform -> T_lat x kBands latent.
  static MatF analyze(const AudioTrack& audio);

  // Latent -> waveform via per-band sinusoids with continuous phase.
  static AudioTrack synthesize(const MatF& latent, int sample_rate);

  // Affine log map between band amplitude and latent value.
  static float amp_to_latent(double amp);
  static double latent_to_amp(float v);
};

// Fixed class-to-frequency map: class k -> 330 * 2^(k/4) Hz.
double class_tone_hz(int class_id);

// Nearest class id for a measured frequency, or -1 when the frequency is
// not within a quarter tone of any class in [0, n_classes).
int nearest_class_for_hz(double hz, int n_classes);

}  // namespace segfoley

#endif  // SEGFOLEY_SPECTROGRAM_HPP_
