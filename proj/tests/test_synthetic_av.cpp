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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "segfoley/spectrogram.hpp"
#include "segfoley/synthetic_av.hpp"
#include "test_util.hpp"

using namespace segfoley;
using namespace segfoley::synthetic_av;

namespace {

SceneSpec single_object_spec(int class_id, std::vector<double> flashes,
                             std::uint64_t seed = 1) {
  SceneSpec spec;
  spec.n_objects = 1;
  spec.object_classes = {class_id};
  spec.flash_times = {std::move(flashes)};
  spec.seed = seed;
  return spec;
}

// Independent naive DFT magnitude (the oracle for dominant_tone checks).
double naive_bin_magnitude(const AudioTrack& a, double t0, double t1, double hz) {
  const int i0 = static_cast<int>(std::lround(t0 * a.sample_rate));
  const int i1 = static_cast<int>(std::lround(t1 * a.sample_rate));
  const int n = i1 - i0;
  double re = 0.0, im = 0.0;
  for (int i = 0; i < n; ++i) {
    const double phase = 2.0 * M_PI * hz * i / a.sample_rate;
    re += a.samples[i0 + i] * std::cos(phase);
    im -= a.samples[i0 + i] * std::sin(phase);
  }
  return 2.0 * std::sqrt(re * re + im * im) / n;
}

}  // namespace

TEST_CASE("single object scene has one tone burst at the flash time") {
  const SceneSpec spec = single_object_spec(0, {0.5});
  const SceneRender scene = make_scene(spec);
  REQUIRE(scene.object_tracks.size() == 1);
  const auto& track = scene.object_tracks[0];

  // first audible sample within +-1 sample of the onset
  int first = -1;
  for (std::size_t i = 0; i < track.samples.size(); ++i) {
    if (std::fabs(track.samples[i]) > 1e-6) {
      first = static_cast<int>(i);
      break;
    }
  }
  REQUIRE(first >= 0);
  const int expected = static_cast<int>(std::lround(0.5 * spec.audio_rate));
  CHECK(std::abs(first - expected) <= 1 + 1);  // sin(0)=0 skips one sample

  // tone frequency equals the class-0 tone (330 Hz by the fixed map)
  const double hz = dominant_tone(track, 0.5, 0.65);
  CHECK(hz == doctest::Approx(class_tone_hz(0)).epsilon(0.03));
}

TEST_CASE("two object mix is the clipped samplewise sum") {
  SceneSpec spec;
  spec.n_objects = 2;
  spec.object_classes = {0, 2};
  spec.flash_times = {{0.3, 0.9}, {0.3, 1.3}};
  spec.height = spec.width = 128;
  spec.seed = 3;
  const SceneRender scene = make_scene(spec);
  for (std::size_t i = 0; i < scene.mixed.samples.size(); ++i) {
    const float expected =
        std::clamp(scene.object_tracks[0].samples[i] +
                       scene.object_tracks[1].samples[i],
                   -1.0f, 1.0f);
    REQUIRE(scene.mixed.samples[i] == expected);
  }
}

TEST_CASE("make_scene is bit-identical for the same spec and seed") {
  SceneSpec spec;
  spec.n_objects = 2;
  spec.object_classes = {1, 3};
  spec.flash_times = {{0.4}, {1.1}};
  spec.height = spec.width = 96;
  spec.seed = 77;
  const SceneRender a = make_scene(spec);
  const SceneRender b = make_scene(spec);
  CHECK(a.video.data == b.video.data);
  CHECK(a.mixed.samples == b.mixed.samples);
  for (int i = 0; i < 2; ++i) {
    CHECK(a.object_tracks[i].samples == b.object_tracks[i].samples);
    CHECK(a.masks[i].data == b.masks[i].data);
  }
}

TEST_CASE("scene spec invariants are enforced") {
  SceneSpec spec = single_object_spec(0, {0.5, 0.6});  // 0.1 s gap
  CHECK_THROWS_AS(make_scene(spec), ConfigError);
  spec = single_object_spec(0, {2.5});  // past the end
  CHECK_THROWS_AS(make_scene(spec), ConfigError);
  spec = single_object_spec(0, {0.5});
  spec.object_classes = {0, 1};
  CHECK_THROWS_AS(make_scene(spec), ConfigError);
}

TEST_CASE("audio energy appears exactly in flash-burst windows") {
  const SceneSpec spec = single_object_spec(2, {0.4, 1.2}, 9);
  const SceneRender scene = make_scene(spec);
  const auto& track = scene.object_tracks[0];
  const double floor_rms = 1e-4;
  const int sr = spec.audio_rate;
  const int win = sr / 10;  // 100 ms
  for (double t0 = 0.0; t0 + 0.1 <= spec.duration_s; t0 += 0.01) {
    const int i0 = static_cast<int>(std::lround(t0 * sr));
    double acc = 0.0;
    for (int i = 0; i < win; ++i) acc += double(track.samples[i0 + i]) *
                                         track.samples[i0 + i];
    const double rms = std::sqrt(acc / win);
    // overlap of [t0, t0+0.1) with any burst [tf, tf+0.15)
    double overlap = 0.0;
    for (double tf : spec.flash_times[0])
      overlap = std::max(overlap, std::min(t0 + 0.1, tf + kBurstDurS) -
                                      std::max(t0, tf));
    if (overlap > 0.002) {
      CHECK(rms > floor_rms);
    } else if (overlap <= 0.0) {
      CHECK(rms <= floor_rms);
    }  // sub-2ms overlaps are boundary cases, not asserted
  }
}

TEST_CASE("per-object masks are mostly disjoint") {
  SceneSpec spec;
  spec.n_objects = 3;
  spec.object_classes = {0, 1, 2};
  spec.flash_times = {{0.3}, {0.8}, {1.4}};
  spec.height = spec.width = 128;
  spec.seed = 21;
  const SceneRender scene = make_scene(spec);
  for (int f = 0; f < scene.video.frames; ++f) {
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        long size_i = 0, inter = 0;
        for (int y = 0; y < 128; ++y)
          for (int x = 0; x < 128; ++x) {
            size_i += scene.masks[i].at(f, y, x);
            inter += scene.masks[i].at(f, y, x) & scene.masks[j].at(f, y, x);
          }
        REQUIRE(size_i > 0);
        CHECK(inter * 10 <= size_i + 9);  // >= 90% disjoint
      }
    }
  }
}

TEST_CASE("make_dataset writes the expected record counts and shapes") {
  testutil::TempDir dir("synth");
  DatasetConfig cfg;
  cfg.train = 6;
  cfg.val = 2;
  cfg.test = 3;
  cfg.n_classes = 4;
  cfg.seed = 5;
  cfg.out_dir = dir.path();
  const Manifest manifest = make_dataset(cfg);
  CHECK(manifest.records.size() == 11);

  int test_count = 0;
  for (const auto& rec : manifest.records) {
    const VideoClip clip = read_rvid(manifest.resolve(rec.video_path));
    CHECK(clip.frames == 50);  // 25 fps x 2 s
    CHECK(static_cast<int>(rec.mask_paths.size()) == rec.n_objects);
    if (rec.split == "test") {
      ++test_count;
      CHECK(rec.n_objects >= 2);
      CHECK(rec.audio_target_path != rec.audio_mixed_path);
      // stored ground truth is the target's solo track: single dominant tone
      const AudioTrack target = read_wav(manifest.resolve(rec.audio_target_path));
      const double tf = rec.flash_times[rec.target_index][0];
      const double hz = dominant_tone(target, tf, tf + 0.15);
      CHECK(nearest_class_for_hz(hz, cfg.n_classes) == rec.class_label);
    } else {
      CHECK(rec.n_objects == 1);
      CHECK(rec.audio_target_path == rec.audio_mixed_path);
    }
  }
  CHECK(test_count == 3);
}

TEST_CASE("manifest write/read round trip reproduces all records") {
  testutil::TempDir dir("manifest");
  DatasetConfig cfg;
  cfg.train = 3;
  cfg.val = 1;
  cfg.test = 2;
  cfg.seed = 8;
  cfg.out_dir = dir.path();
  const Manifest manifest = make_dataset(cfg);
  const Manifest loaded = read_manifest(dir.file("manifest.jsonl"));
  REQUIRE(loaded.records.size() == manifest.records.size());
  for (std::size_t i = 0; i < manifest.records.size(); ++i)
    CHECK(loaded.records[i] == manifest.records[i]);
}

TEST_CASE("make_dataset is deterministic in the seed") {
  testutil::TempDir dir_a("det_a");
  testutil::TempDir dir_b("det_b");
  DatasetConfig cfg;
  cfg.train = 2;
  cfg.val = 1;
  cfg.test = 1;
  cfg.seed = 123;
  cfg.out_dir = dir_a.path();
  const Manifest a = make_dataset(cfg);
  cfg.out_dir = dir_b.path();
  const Manifest b = make_dataset(cfg);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].flash_times == b.records[i].flash_times);
    const VideoClip va = read_rvid(a.resolve(a.records[i].video_path));
    const VideoClip vb = read_rvid(b.resolve(b.records[i].video_path));
    CHECK(va.data == vb.data);
  }
}

TEST_CASE("dominant_tone finds a pure sine to bin resolution") {
  AudioTrack track(8000, 8000);
  for (int i = 0; i < 8000; ++i)
    track.samples[i] = 0.8f * std::sin(2.0 * M_PI * 440.0 * i / 8000.0);
  const double hz = dominant_tone(track, 0.0, 0.5);
  CHECK(std::fabs(hz - 440.0) <= 1.0 / 0.5 + 1e-9);
}

TEST_CASE("dominant_tone returns the no-tone sentinel on silence") {
  AudioTrack track(8000, 8000);
  CHECK(dominant_tone(track, 0.0, 0.5) == kNoTone);
}

TEST_CASE("dominant_tone picks the stronger of two tones") {
  AudioTrack track(8000, 8000);
  for (int i = 0; i < 8000; ++i) {
    const double t = static_cast<double>(i) / 8000.0;
    track.samples[i] = static_cast<float>(0.6 * std::sin(2.0 * M_PI * 440.0 * t) +
                                          0.18 * std::sin(2.0 * M_PI * 660.0 * t));
  }
  // independent oracle: direct spectrum magnitudes
  const double mag440 = naive_bin_magnitude(track, 0.0, 1.0, 440.0);
  const double mag660 = naive_bin_magnitude(track, 0.0, 1.0, 660.0);
  REQUIRE(mag440 > mag660);
  const double hz = dominant_tone(track, 0.0, 1.0);
  CHECK(std::fabs(hz - 440.0) <= 1.0);
}

TEST_CASE("dominant_tone rejects windows shorter than 4 periods of 330 Hz") {
  AudioTrack track(8000, 8000);
  CHECK_THROWS_AS(dominant_tone(track, 0.0, 0.01), ConfigError);
  CHECK_THROWS_AS(dominant_tone(track, 0.9, 0.8), ConfigError);
  CHECK_THROWS_AS(dominant_tone(track, 0.0, 1.5), ConfigError);
}

TEST_CASE("wav round trip preserves samples to 16-bit precision") {
  testutil::TempDir dir("wav");
  AudioTrack a(1000, 8000);
  Rng rng(3);
  for (auto& s : a.samples) s = static_cast<float>(rng.uniform(-1.0, 1.0));
  write_wav(dir.file("x.wav"), a);
  const AudioTrack b = read_wav(dir.file("x.wav"));
  REQUIRE(b.samples.size() == a.samples.size());
  CHECK(b.sample_rate == 8000);
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    CHECK(std::fabs(a.samples[i] - b.samples[i]) <= 1.0 / 32767.0 + 1e-6);
}

TEST_CASE("mask rle round trip is exact on random masks") {
  testutil::TempDir dir("mrle");
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    MaskStream mask(3, 17, 23);
    for (auto& v : mask.data) v = rng.uniform() < 0.35 ? 1 : 0;
    write_mrle(dir.file("m.mrle"), mask);
    const MaskStream back = read_mrle(dir.file("m.mrle"));
    REQUIRE(back.data == mask.data);
  }
  // degenerate frames
  MaskStream empty(2, 4, 4);
  write_mrle(dir.file("e.mrle"), empty);
  CHECK(read_mrle(dir.file("e.mrle")).data == empty.data);
  MaskStream full(2, 4, 4);
  std::fill(full.data.begin(), full.data.end(), 1);
  write_mrle(dir.file("f.mrle"), full);
  CHECK(read_mrle(dir.file("f.mrle")).data == full.data);
}

TEST_CASE("mask debug export writes one pgm per frame") {
  testutil::TempDir dir("pgm");
  MaskStream mask(3, 8, 8);
  mask.at(1, 2, 2) = 1;
  write_mask_pgm_sequence(dir.file("dbg"), mask);
  CHECK(std::filesystem::exists(dir.file("dbg_000000.pgm")));
  CHECK(std::filesystem::exists(dir.file("dbg_000002.pgm")));
}

TEST_CASE("latent codec: class tones land on their bands and survive resynthesis") {
  for (int k = 0; k < 4; ++k) {
    AudioTrack tone(16000, 8000);
    const double hz = class_tone_hz(k);
    for (int i = 0; i < 16000; ++i)
      tone.samples[i] = 0.7f * std::sin(2.0 * M_PI * hz * i / 8000.0);
    const MatF latent = LatentCodec::analyze(tone);
    CHECK(latent.rows() == 200);
    CHECK(latent.cols() == 16);
    Eigen::Index peak_band;
    latent.row(100).maxCoeff(&peak_band);
    CHECK(peak_band == k + 4);

    const AudioTrack resynth = LatentCodec::synthesize(latent, 8000);
    const double back_hz = dominant_tone(resynth, 0.5, 1.5);
    CHECK(nearest_class_for_hz(back_hz, 8) == k);
  }
}

TEST_CASE("latent amplitude map is monotone and invertible") {
  for (double amp : {0.0, 0.01, 0.1, 0.5, 0.9}) {
    const float v = LatentCodec::amp_to_latent(amp);
    CHECK(LatentCodec::latent_to_amp(v) == doctest::Approx(amp).epsilon(1e-4));
  }
  CHECK(LatentCodec::amp_to_latent(0.0) == doctest::Approx(-1.0));
}
