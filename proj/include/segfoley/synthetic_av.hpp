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

#ifndef SEGFOLEY_SYNTHETIC_AV_HPP_
#define SEGFOLEY_SYNTHETIC_AV_HPP_

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "segfoley/media.hpp"
#include "segfoley/rng.hpp"

namespace segfoley {
namespace synthetic_av {

// Flash pulse / tone burst geometry shared by renderer and tests.
constexpr double kFlashDurS = 0.10;   // brightness pulse
constexpr double kBurstDurS = 0.15;   // tone burst
constexpr double kBurstDecayS = 0.05;
constexpr double kBurstAmp = 0.85;

// Scene description. Motion tracks are derived deterministically from the
// seed inside make_scene; the spec only fixes what sounds when.
struct SceneSpec {
  int n_objects = 1;
  std::vector<int> object_classes;               // class id per object
  std::vector<std::vector<double>> flash_times;  // onsets per object, seconds
  double duration_s = 2.0;
  double frame_rate = 25.0;
  int height = 64;
  int width = 64;
  int audio_rate = 8000;
  std::uint64_t seed = 0;

  int video_frames() const {
    return static_cast<int>(std::lround(duration_s * frame_rate));
  }
  // Throws ConfigError when invariants are violated.
  void validate() const;
};

struct SceneRender {
  VideoClip video;
  std::vector<AudioTrack> object_tracks;
  AudioTrack mixed;
  std::vector<MaskStream> masks;
};

// Renders moving colored blobs that pulse at their flash times while the
// class tone burst is written into the per-object track. Deterministic in
// spec.seed. Throws DataError when no non-overlapping placement is found
// after 100 retries.
SceneRender make_scene(const SceneSpec& spec);

// RGB color for a class id (8 entries, wraps after that).
void class_color(int class_id, float rgb[3]);

struct DatasetConfig {
  int train = 100;
  int val = 10;
  int test = 20;
  int n_classes = 4;
  double duration_s = 2.0;
  double frame_rate = 25.0;
  int height = 64;
  int width = 64;
  int audio_rate = 8000;
  int test_min_objects = 2;
  int test_max_objects = 2;
  // Fraction of target flashes that distractor objects copy (simultaneous
  // onsets, ensemble-style) in multi-source test scenes.
  double test_coincident_fraction = 0.5;
  int distractor_solo_flashes = 2;
  std::uint64_t seed = 0;
  std::string out_dir;
};

struct ManifestRecord {
  std::string id;
  std::string split;  // train | val | test
  std::string video_path;
  std::vector<std::string> mask_paths;
  std::string audio_mixed_path;
  std::string audio_target_path;
  int target_index = 0;
  int class_label = 0;
  double frame_rate = 25.0;
  int sample_rate = 8000;
  // extras beyond the required schema
  int n_objects = 1;
  std::vector<int> object_classes;
  std::vector<std::vector<double>> flash_times;  // per object

  bool operator==(const ManifestRecord&) const = default;
};

struct Manifest {
  std::string root_dir;  // directory of the manifest file; paths are relative
  std::vector<ManifestRecord> records;

  std::string resolve(const std::string& rel) const;
  std::vector<const ManifestRecord*> split(const std::string& name) const;
};

// Writes clips + masks + manifest.jsonl under config.out_dir and returns the
// manifest. Record generation depends only on (seed, record index), so
// records may be produced in parallel; this implementation is sequential.
Manifest make_dataset(const DatasetConfig& config);

void write_manifest(const std::string& path, const Manifest& manifest);
Manifest read_manifest(const std::string& path);

// Argmax-magnitude frequency of the DFT of samples in [t0, t1), with bin
// resolution 1/(t1-t0). Returns 0.0 (the "no tone" sentinel) when the peak
// is below the silence floor. Throws ConfigError when the window is shorter
// than 4 periods of the lowest class tone (330 Hz) or out of range.
double dominant_tone(const AudioTrack& track, double t0, double t1);
constexpr double kNoTone = 0.0;

}  // namespace synthetic_av
}  // namespace segfoley

#endif  // SEGFOLEY_SYNTHETIC_AV_HPP_
