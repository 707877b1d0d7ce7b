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

#include "segfoley/spectrogram.hpp"

#include <algorithm>
#include <cmath>

namespace segfoley {
namespace {

constexpr double kLogFloor = 1e-3;
constexpr double kLatentScale = 0.7;

}  // namespace

double LatentCodec::band_hz(int band) {
  return 330.0 * std::pow(2.0, (band - 4) / 4.0);
}

float LatentCodec::amp_to_latent(double amp) {
  return static_cast<float>((std::log10(amp + kLogFloor) + 3.0) * kLatentScale -
                            1.0);
}

double LatentCodec::latent_to_amp(float v) {
  const double amp = std::pow(10.0, (v + 1.0) / kLatentScale - 3.0) - kLogFloor;
  return std::max(0.0, amp);
}

MatF LatentCodec::analyze(const AudioTrack& audio) {
  const int sr = audio.sample_rate;
  const int n = static_cast<int>(audio.samples.size());
  const int t_lat = latent_frames(static_cast<double>(n) / sr);
  const int win = static_cast<int>(std::lround(kWindowS * sr));
  const int hop = static_cast<int>(std::lround(kHopS * sr));

  // Hann window and its coherent gain.
  std::vector<double> w(win);
  double wsum = 0.0;
  for (int i = 0; i < win; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (win - 1));
    wsum += w[i];
  }

  MatF latent(t_lat, kBands);
  for (int f = 0; f < t_lat; ++f) {
    const int center = f * hop;
    const int start = center - win / 2;
    for (int b = 0; b < kBands; ++b) {
      const double omega = 2.0 * M_PI * band_hz(b) / sr;
      double re = 0.0, im = 0.0;
      const int i0 = std::max(0, -start);
      const int i1 = std::min(win, n - start);
      for (int i = i0; i < i1; ++i) {
        const double x = w[i] * audio.samples[start + i];
        re += x * std::cos(omega * i);
        im -= x * std::sin(omega * i);
      }
      // 2|c|/sum(w) recovers the sinusoid amplitude.
      const double amp = 2.0 * std::sqrt(re * re + im * im) / wsum;
      latent(f, b) = amp_to_latent(amp);
    }
  }
  return latent;
}

AudioTrack LatentCodec::synthesize(const MatF& latent, int sample_rate) {
  const int t_lat = static_cast<int>(latent.rows());
  const int n = static_cast<int>(std::lround(t_lat * kHopS * sample_rate));
  AudioTrack audio(static_cast<std::size_t>(n), sample_rate);
  const double hop_samples = kHopS * sample_rate;
  for (int b = 0; b < static_cast<int>(latent.cols()); ++b) {
    const double omega = 2.0 * M_PI * band_hz(b) / sample_rate;
    for (int i = 0; i < n; ++i) {
      // Linear amplitude interpolation between latent frames.
      const double pos = i / hop_samples;
      const int f0 = std::min(t_lat - 1, static_cast<int>(pos));
      const int f1 = std::min(t_lat - 1, f0 + 1);
      const double frac = pos - f0;
      const double a0 = latent_to_amp(latent(f0, b));
      const double a1 = latent_to_amp(latent(f1, b));
      const double amp = a0 + (a1 - a0) * frac;
      if (amp > 1e-5) audio.samples[i] += static_cast<float>(amp * std::sin(omega * i));
    }
  }
  for (float& s : audio.samples) s = std::clamp(s, -1.0f, 1.0f);
  return audio;
}

double class_tone_hz(int class_id) {
  return 330.0 * std::pow(2.0, class_id / 4.0);
}

int nearest_class_for_hz(double hz, int n_classes) {
  if (hz <= 0.0) return -1;
  int best = -1;
  double best_ratio = 1e9;
  for (int k = 0; k < n_classes; ++k) {
    const double r = std::fabs(std::log2(hz / class_tone_hz(k)));
    if (r < best_ratio) {
      best_ratio = r;
      best = k;
    }
  }
  // 1/8 octave = half the class spacing.
  return best_ratio <= 0.125 ? best : -1;
}

}  // namespace segfoley
