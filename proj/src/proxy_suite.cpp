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

#include <algorithm>
#include <cmath>
#include <vector>

#include "segfoley/metrics.hpp"
#include "segfoley/spectrogram.hpp"
#include "segfoley/synthetic_av.hpp"

namespace segfoley {
namespace metrics {
namespace {

constexpr int kEnvBins = 8;
constexpr double kOffsetCap = 0.5;

// Linear band amplitudes per latent frame for the class bands.
MatD class_band_amps(const AudioTrack& audio, int n_classes) {
  const MatF latent = LatentCodec::analyze(audio);
  MatD amps(latent.rows(), n_classes);
  for (Eigen::Index t = 0; t < latent.rows(); ++t)
    for (int k = 0; k < n_classes; ++k)
      amps(t, k) = LatentCodec::latent_to_amp(latent(t, k + 4));
  return amps;
}

Eigen::VectorXd envelope_bins(const std::vector<double>& env) {
  Eigen::VectorXd bins = Eigen::VectorXd::Zero(kEnvBins);
  if (env.empty()) return bins;
  for (std::size_t i = 0; i < env.size(); ++i) {
    const int b = std::min<int>(kEnvBins - 1,
                                static_cast<int>(i * kEnvBins / env.size()));
    bins(b) += env[i];
  }
  const double s = bins.sum();
  if (s > 0) bins /= s;
  return bins;
}

// 10 ms RMS energy envelope.
std::vector<double> audio_envelope(const AudioTrack& audio) {
  const int hop = std::max(1, audio.sample_rate / 100);
  const int frames = static_cast<int>(audio.samples.size()) / hop;
  std::vector<double> env(frames, 0.0);
  for (int f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int i = 0; i < hop; ++i) {
      const double s = audio.samples[f * hop + i];
      acc += s * s;
    }
    env[f] = std::sqrt(acc / hop);
  }
  return env;
}

// Rising-edge onset times from an envelope with hop `dt`.
std::vector<double> onset_times(const std::vector<double>& env, double dt,
                                double rel_threshold, double abs_floor) {
  std::vector<double> onsets;
  if (env.empty()) return onsets;
  const double peak = *std::max_element(env.begin(), env.end());
  const double thr = std::max(abs_floor, rel_threshold * peak);
  bool above = false;
  for (std::size_t i = 0; i < env.size(); ++i) {
    if (env[i] > thr && !above) {
      onsets.push_back(i * dt);
      above = true;
    } else if (env[i] < 0.5 * thr) {
      above = false;
    }
  }
  return onsets;
}

// Mean frame brightness (flash pulses raise it).
std::vector<double> brightness_series(const VideoClip& video) {
  std::vector<double> out(video.frames, 0.0);
  const std::size_t per_frame =
      static_cast<std::size_t>(video.height) * video.width * 3;
  for (int t = 0; t < video.frames; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < per_frame; ++i)
      acc += video.data[static_cast<std::size_t>(t) * per_frame + i];
    out[t] = acc / double(per_frame);
  }
  return out;
}

std::vector<double> flash_times_from_video(const VideoClip& video) {
  const auto b = brightness_series(video);
  std::vector<double> diff(b.size(), 0.0);
  double peak = 0.0;
  for (std::size_t i = 1; i < b.size(); ++i) {
    diff[i] = std::max(0.0, b[i] - b[i - 1]);
    peak = std::max(peak, diff[i]);
  }
  std::vector<double> flashes;
  if (peak <= 1e-6) return flashes;
  bool above = false;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    if (diff[i] > 0.5 * peak && !above) {
      flashes.push_back(i / video.frame_rate);
      above = true;
    } else if (diff[i] < 0.25 * peak) {
      above = false;
    }
  }
  return flashes;
}

double chamfer(const std::vector<double>& a, const std::vector<double>& b) {
  auto side = [](const std::vector<double>& from, const std::vector<double>& to) {
    double acc = 0.0;
    for (double x : from) {
      double best = kOffsetCap;
      for (double y : to) best = std::min(best, std::fabs(x - y));
      acc += best;
    }
    return acc / double(from.size());
  };
  return 0.5 * (side(a, b) + side(b, a));
}

}  // namespace

EmbedderSuite build_proxy_suite(int n_classes) {
  EmbedderSuite suite;
  suite.n_classes = n_classes;
  suite.embed_dim = n_classes + kEnvBins;

  suite.audio_embedding = [n_classes](const AudioTrack& audio) {
    const MatD amps = class_band_amps(audio, n_classes);
    Eigen::VectorXd cls = amps.colwise().sum();
    const double cs = cls.sum();
    if (cs > 0) cls /= cs;
    std::vector<double> env(amps.rows());
    for (Eigen::Index t = 0; t < amps.rows(); ++t) env[t] = amps.row(t).sum();
    Eigen::VectorXd out(n_classes + kEnvBins);
    out << cls, envelope_bins(env);
    const double n = out.norm();
    if (n > 0) out /= n;
    return out;
  };

  suite.audio_posterior = [n_classes](const AudioTrack& audio) {
    const MatD amps = class_band_amps(audio, n_classes);
    Eigen::VectorXd e = amps.colwise().sum();
    e.array() += 1e-6;
    return Eigen::VectorXd(e / e.sum());
  };

  suite.video_embedding = [n_classes](const VideoClip& video) {
    // Foreground mean color matched against the class palette.
    double color[3] = {0, 0, 0};
    long count = 0;
    for (int t = 0; t < video.frames; ++t) {
      for (int y = 0; y < video.height; ++y) {
        for (int x = 0; x < video.width; ++x) {
          const float r = video.at(t, y, x, 0);
          const float g = video.at(t, y, x, 1);
          const float b = video.at(t, y, x, 2);
          if (std::max({r, g, b}) > 0.18f) {
            color[0] += r;
            color[1] += g;
            color[2] += b;
            ++count;
          }
        }
      }
    }
    Eigen::VectorXd cls = Eigen::VectorXd::Zero(n_classes);
    if (count > 0) {
      Eigen::Vector3d c(color[0] / count, color[1] / count, color[2] / count);
      c.normalize();
      for (int k = 0; k < n_classes; ++k) {
        float rgb[3];
        synthetic_av::class_color(k, rgb);
        Eigen::Vector3d pal(rgb[0], rgb[1], rgb[2]);
        pal.normalize();
        const double dot = std::max(0.0, c.dot(pal));
        cls(k) = dot * dot * dot * dot;  // sharpen
      }
      const double s = cls.sum();
      if (s > 0) cls /= s;
    }
    const auto b = brightness_series(video);
    std::vector<double> pulses(b.size(), 0.0);
    for (std::size_t i = 1; i < b.size(); ++i)
      pulses[i] = std::max(0.0, b[i] - b[i - 1]);
    Eigen::VectorXd out(n_classes + kEnvBins);
    out << cls, envelope_bins(pulses);
    const double n = out.norm();
    if (n > 0) out /= n;
    return out;
  };

  suite.offset_estimate = [](const AudioTrack& audio, const VideoClip& video) {
    const auto a_on = onset_times(audio_envelope(audio), 0.01, 0.25, 0.01);
    const auto v_on = flash_times_from_video(video);
    if (a_on.empty() || v_on.empty()) return kOffsetCap;
    return chamfer(a_on, v_on);
  };

  return suite;
}

}  // namespace metrics
}  // namespace segfoley
