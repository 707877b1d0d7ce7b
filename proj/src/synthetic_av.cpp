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

#include "segfoley/synthetic_av.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "segfoley/spectrogram.hpp"

namespace segfoley {
namespace synthetic_av {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kMinFlashGapS = 0.2;

struct Track {
  double y0, x0, vy, vx;
  double radius;

  // Position with reflection inside [radius, limit-1-radius].
  static double reflect(double p, double lo, double hi) {
    const double span = hi - lo;
    if (span <= 0.0) return lo;
    double x = std::fmod(p - lo, 2.0 * span);
    if (x < 0.0) x += 2.0 * span;
    return lo + (span - std::fabs(x - span));
  }

  double y(double t, int height) const {
    return reflect(y0 + vy * t, radius, height - 1 - radius);
  }
  double x(double t, int width) const {
    return reflect(x0 + vx * t, radius, width - 1 - radius);
  }
};

struct BBox {
  int top, left, bottom, right;  // inclusive
  long area() const {
    return static_cast<long>(bottom - top + 1) * (right - left + 1);
  }
};

BBox track_bbox(const Track& tr, double t, int h, int w) {
  const int r = static_cast<int>(tr.radius);
  const int cy = static_cast<int>(std::lround(tr.y(t, h)));
  const int cx = static_cast<int>(std::lround(tr.x(t, w)));
  return {std::max(0, cy - r), std::max(0, cx - r), std::min(h - 1, cy + r),
          std::min(w - 1, cx + r)};
}

long overlap_area(const BBox& a, const BBox& b) {
  const int t = std::max(a.top, b.top);
  const int l = std::max(a.left, b.left);
  const int bo = std::min(a.bottom, b.bottom);
  const int r = std::min(a.right, b.right);
  if (t > bo || l > r) return 0;
  return static_cast<long>(bo - t + 1) * (r - l + 1);
}

std::vector<Track> place_objects(const SceneSpec& spec, Rng& rng) {
  const double radius = std::max(5.0, std::min(spec.height, spec.width) / 10.0);
  const double speed_lo = 0.10 * std::min(spec.height, spec.width);
  const double speed_hi = 0.30 * std::min(spec.height, spec.width);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<Track> tracks;
    for (int i = 0; i < spec.n_objects; ++i) {
      Track tr;
      tr.radius = radius;
      tr.y0 = rng.uniform(radius + 1, spec.height - 2 - radius);
      tr.x0 = rng.uniform(radius + 1, spec.width - 2 - radius);
      const double speed = rng.uniform(speed_lo, speed_hi);
      const double angle = rng.uniform(0.0, 2.0 * M_PI);
      tr.vy = speed * std::sin(angle);
      tr.vx = speed * std::cos(angle);
      tracks.push_back(tr);
    }
    bool ok = true;
    const int frames = spec.video_frames();
    for (int f = 0; f < frames && ok; ++f) {
      const double t = f / spec.frame_rate;
      for (int i = 0; i < spec.n_objects && ok; ++i) {
        const BBox bi = track_bbox(tracks[i], t, spec.height, spec.width);
        for (int j = i + 1; j < spec.n_objects; ++j) {
          const BBox bj = track_bbox(tracks[j], t, spec.height, spec.width);
          const long inter = overlap_area(bi, bj);
          if (inter * 10 > std::min(bi.area(), bj.area())) {
            ok = false;
            break;
          }
        }
      }
    }
    if (ok) return tracks;
  }
  throw DataError("make_scene: no non-overlapping placement after 100 retries");
}

void render_burst(AudioTrack& track, double onset_s, double freq_hz) {
  const int sr = track.sample_rate;
  const int start = static_cast<int>(std::lround(onset_s * sr));
  const int len = static_cast<int>(std::lround(kBurstDurS * sr));
  for (int i = 0; i < len; ++i) {
    const int idx = start + i;
    if (idx < 0 || idx >= static_cast<int>(track.samples.size())) continue;
    const double tau = static_cast<double>(i) / sr;
    track.samples[idx] += static_cast<float>(
        kBurstAmp * std::exp(-tau / kBurstDecayS) * std::sin(2.0 * M_PI * freq_hz * tau));
  }
}

std::vector<double> draw_flash_times(Rng& rng, int count, double lo, double hi,
                                     const std::vector<double>& avoid,
                                     double avoid_gap) {
  std::vector<double> out;
  for (int tries = 0; tries < 400 && static_cast<int>(out.size()) < count; ++tries) {
    const double t = rng.uniform(lo, hi);
    bool ok = true;
    for (double o : out)
      if (std::fabs(t - o) < kMinFlashGapS) ok = false;
    for (double a : avoid)
      if (std::fabs(t - a) < avoid_gap) ok = false;
    if (ok) out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

json record_to_json(const ManifestRecord& r) {
  json j;
  j["id"] = r.id;
  j["split"] = r.split;
  j["video_path"] = r.video_path;
  j["mask_paths"] = r.mask_paths;
  j["audio_mixed_path"] = r.audio_mixed_path;
  j["audio_target_path"] = r.audio_target_path;
  j["target_index"] = r.target_index;
  j["class_label"] = r.class_label;
  j["frame_rate"] = r.frame_rate;
  j["sample_rate"] = r.sample_rate;
  j["n_objects"] = r.n_objects;
  j["object_classes"] = r.object_classes;
  j["flash_times"] = r.flash_times;
  return j;
}

ManifestRecord record_from_json(const json& j) {
  ManifestRecord r;
  r.id = j.at("id").get<std::string>();
  r.split = j.at("split").get<std::string>();
  r.video_path = j.at("video_path").get<std::string>();
  r.mask_paths = j.at("mask_paths").get<std::vector<std::string>>();
  r.audio_mixed_path = j.at("audio_mixed_path").get<std::string>();
  r.audio_target_path = j.at("audio_target_path").get<std::string>();
  r.target_index = j.at("target_index").get<int>();
  r.class_label = j.at("class_label").get<int>();
  r.frame_rate = j.at("frame_rate").get<double>();
  r.sample_rate = j.at("sample_rate").get<int>();
  r.n_objects = j.value("n_objects", 1);
  if (j.contains("object_classes"))
    r.object_classes = j.at("object_classes").get<std::vector<int>>();
  if (j.contains("flash_times"))
    r.flash_times = j.at("flash_times").get<std::vector<std::vector<double>>>();
  return r;
}

}  // namespace

void SceneSpec::validate() const {
  if (n_objects < 1) throw ConfigError("SceneSpec: n_objects must be >= 1");
  if (static_cast<int>(object_classes.size()) != n_objects)
    throw ConfigError("SceneSpec: object_classes size mismatch");
  if (static_cast<int>(flash_times.size()) != n_objects)
    throw ConfigError("SceneSpec: flash_times size mismatch");
  if (duration_s <= 0 || frame_rate <= 0 || height < 16 || width < 16 ||
      audio_rate < 2000)
    throw ConfigError("SceneSpec: bad dimensions");
  for (const auto& times : flash_times) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (times[i] < 0.0 || times[i] >= duration_s)
        throw ConfigError("SceneSpec: flash time out of range");
      for (std::size_t j = i + 1; j < times.size(); ++j)
        if (std::fabs(times[i] - times[j]) < kMinFlashGapS)
          throw ConfigError("SceneSpec: flash times closer than 0.2 s");
    }
  }
}

void class_color(int class_id, float rgb[3]) {
  static const float kPalette[8][3] = {
      {0.55f, 0.08f, 0.08f}, {0.08f, 0.55f, 0.08f}, {0.10f, 0.10f, 0.55f},
      {0.55f, 0.55f, 0.08f}, {0.55f, 0.08f, 0.55f}, {0.08f, 0.55f, 0.55f},
      {0.55f, 0.30f, 0.08f}, {0.40f, 0.40f, 0.40f}};
  const float* c = kPalette[class_id % 8];
  rgb[0] = c[0];
  rgb[1] = c[1];
  rgb[2] = c[2];
}

SceneRender make_scene(const SceneSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::vector<Track> tracks = place_objects(spec, rng);
  const int frames = spec.video_frames();

  SceneRender out;
  out.video = VideoClip(frames, spec.height, spec.width, spec.frame_rate);
  std::fill(out.video.data.begin(), out.video.data.end(), 0.08f);
  out.masks.assign(spec.n_objects, MaskStream(frames, spec.height, spec.width));

  for (int f = 0; f < frames; ++f) {
    const double t = f / spec.frame_rate;
    for (int i = 0; i < spec.n_objects; ++i) {
      float base[3];
      class_color(spec.object_classes[i], base);
      double flash = 0.0;
      for (double onset : spec.flash_times[i])
        if (t >= onset && t < onset + kFlashDurS) flash = 1.0;
      const double cy = tracks[i].y(t, spec.height);
      const double cx = tracks[i].x(t, spec.width);
      const double r = tracks[i].radius;
      const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
      const int y1 = std::min(spec.height - 1, static_cast<int>(std::ceil(cy + r)));
      const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
      const int x1 = std::min(spec.width - 1, static_cast<int>(std::ceil(cx + r)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double dy = y - cy, dx = x - cx;
          if (dy * dy + dx * dx > r * r) continue;
          out.masks[i].at(f, y, x) = 1;
          for (int c = 0; c < 3; ++c)
            out.video.at(f, y, x, c) =
                std::min(1.0f, base[c] + static_cast<float>(flash) * 0.45f);
        }
      }
    }
  }

  const std::size_t n_samples =
      static_cast<std::size_t>(std::lround(spec.duration_s * spec.audio_rate));
  out.object_tracks.assign(spec.n_objects, AudioTrack(n_samples, spec.audio_rate));
  for (int i = 0; i < spec.n_objects; ++i) {
    for (double onset : spec.flash_times[i])
      render_burst(out.object_tracks[i], onset,
                   class_tone_hz(spec.object_classes[i]));
    for (float& s : out.object_tracks[i].samples) s = std::clamp(s, -1.0f, 1.0f);
  }
  out.mixed = AudioTrack(n_samples, spec.audio_rate);
  for (int i = 0; i < spec.n_objects; ++i)
    for (std::size_t s = 0; s < n_samples; ++s)
      out.mixed.samples[s] += out.object_tracks[i].samples[s];
  for (float& s : out.mixed.samples) s = std::clamp(s, -1.0f, 1.0f);
  return out;
}

std::string Manifest::resolve(const std::string& rel) const {
  if (rel.empty() || rel.front() == '/') return rel;
  return root_dir.empty() ? rel : root_dir + "/" + rel;
}

std::vector<const ManifestRecord*> Manifest::split(const std::string& name) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records)
    if (r.split == name) out.push_back(&r);
  return out;
}

Manifest make_dataset(const DatasetConfig& config) {
  if (config.n_classes < 1 || config.n_classes > 8)
    throw ConfigError("make_dataset: n_classes must be in [1,8]");
  fs::create_directories(fs::path(config.out_dir) / "clips");

  Manifest manifest;
  manifest.root_dir = config.out_dir;

  const char* split_names[3] = {"train", "val", "test"};
  const int counts[3] = {config.train, config.val, config.test};

  for (int s = 0; s < 3; ++s) {
    for (int i = 0; i < counts[s]; ++i) {
      Rng rng = Rng::derive(config.seed, static_cast<std::uint64_t>(s) + 1, i);
      SceneSpec spec;
      spec.duration_s = config.duration_s;
      spec.frame_rate = config.frame_rate;
      spec.height = config.height;
      spec.width = config.width;
      spec.audio_rate = config.audio_rate;
      spec.seed = rng.next_u64();

      const double flash_lo = 0.12;
      const double flash_hi = config.duration_s - kBurstDurS - 0.15;
      int target_index = 0;

      if (s < 2) {
        spec.n_objects = 1;
        spec.object_classes = {static_cast<int>(rng.uniform_int(config.n_classes))};
        const int n_flashes = 2 + static_cast<int>(rng.uniform_int(2));
        spec.flash_times = {draw_flash_times(rng, n_flashes, flash_lo, flash_hi, {}, 0.0)};
      } else {
        int n_obj = config.test_min_objects +
                    static_cast<int>(rng.uniform_int(
                        config.test_max_objects - config.test_min_objects + 1));
        n_obj = std::max(2, std::min(n_obj, config.n_classes));
        spec.n_objects = n_obj;
        // distinct classes so the target tone is unambiguous
        std::vector<int> classes(config.n_classes);
        for (int k = 0; k < config.n_classes; ++k) classes[k] = k;
        for (int k = config.n_classes - 1; k > 0; --k)
          std::swap(classes[k], classes[rng.uniform_int(k + 1)]);
        classes.resize(n_obj);
        spec.object_classes = classes;
        target_index = static_cast<int>(rng.uniform_int(n_obj));

        std::vector<std::vector<double>> flashes(n_obj);
        flashes[target_index] =
            draw_flash_times(rng, 3, flash_lo, flash_hi, {}, 0.0);
        const auto& target_flashes = flashes[target_index];
        for (int o = 0; o < n_obj; ++o) {
          if (o == target_index) continue;
          std::vector<double> own;
          // Coincident onsets: distractors play in time with the target,
          // like an ensemble. These windows carry both tones at once.
          for (double tf : target_flashes)
            if (rng.uniform() < config.test_coincident_fraction) own.push_back(tf);
          if (own.empty() && !target_flashes.empty())
            own.push_back(target_flashes[rng.uniform_int(target_flashes.size())]);
          // Solo onsets well away from every target flash; these are the
          // spurious-content probes for alignment metrics.
          auto solo = draw_flash_times(rng, config.distractor_solo_flashes,
                                       flash_lo, flash_hi, target_flashes, 0.3);
          for (double t : solo) {
            bool ok = true;
            for (double o2 : own)
              if (std::fabs(t - o2) < kMinFlashGapS) ok = false;
            if (ok) own.push_back(t);
          }
          std::sort(own.begin(), own.end());
          flashes[o] = own;
        }
        spec.flash_times = flashes;
      }

      const SceneRender scene = make_scene(spec);

      char idbuf[32];
      std::snprintf(idbuf, sizeof(idbuf), "%s_%06d", split_names[s], i);
      ManifestRecord rec;
      rec.id = idbuf;
      rec.split = split_names[s];
      rec.frame_rate = config.frame_rate;
      rec.sample_rate = config.audio_rate;
      rec.n_objects = spec.n_objects;
      rec.object_classes = spec.object_classes;
      rec.flash_times = spec.flash_times;
      rec.target_index = target_index;
      rec.class_label = spec.object_classes[target_index];

      rec.video_path = std::string("clips/") + idbuf + ".rvid";
      write_rvid(manifest.resolve(rec.video_path), scene.video);
      for (int o = 0; o < spec.n_objects; ++o) {
        char mbuf[48];
        std::snprintf(mbuf, sizeof(mbuf), "clips/%s_obj%d.mrle", idbuf, o);
        rec.mask_paths.push_back(mbuf);
        write_mrle(manifest.resolve(mbuf), scene.masks[o]);
      }
      rec.audio_mixed_path = std::string("clips/") + idbuf + "_mix.wav";
      write_wav(manifest.resolve(rec.audio_mixed_path), scene.mixed);
      if (s < 2) {
        // single source: the mix is the object track
        rec.audio_target_path = rec.audio_mixed_path;
      } else {
        rec.audio_target_path = std::string("clips/") + idbuf + "_target.wav";
        write_wav(manifest.resolve(rec.audio_target_path),
                  scene.object_tracks[target_index]);
      }
      manifest.records.push_back(std::move(rec));
    }
  }

  write_manifest((fs::path(config.out_dir) / "manifest.jsonl").string(), manifest);
  return manifest;
}

void write_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write manifest: " + path);
  for (const auto& r : manifest.records) os << record_to_json(r).dump() << "\n";
}

Manifest read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read manifest: " + path);
  Manifest m;
  m.root_dir = fs::path(path).parent_path().string();
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    m.records.push_back(record_from_json(json::parse(line)));
  }
  return m;
}

double dominant_tone(const AudioTrack& track, double t0, double t1) {
  const int sr = track.sample_rate;
  const double duration = track.duration_s();
  if (t0 < 0.0 || t1 > duration + 1e-9 || t0 >= t1)
    throw ConfigError("dominant_tone: window out of range");
  if (t1 - t0 < 4.0 / 330.0)
    throw ConfigError("dominant_tone: window shorter than 4 periods of 330 Hz");
  const int i0 = static_cast<int>(std::lround(t0 * sr));
  const int i1 = std::min(static_cast<int>(track.samples.size()),
                          static_cast<int>(std::lround(t1 * sr)));
  const int n = i1 - i0;

  double best_mag = 0.0;
  int best_k = 0;
  for (int k = 1; k <= n / 2; ++k) {
    // Goertzel recurrence for bin k.
    const double w = 2.0 * M_PI * k / n;
    const double coeff = 2.0 * std::cos(w);
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double s = track.samples[i0 + i] + coeff * s1 - s2;
      s2 = s1;
      s1 = s;
    }
    const double power = s1 * s1 + s2 * s2 - coeff * s1 * s2;
    const double mag = 2.0 * std::sqrt(std::max(0.0, power)) / n;
    if (mag > best_mag) {
      best_mag = mag;
      best_k = k;
    }
  }
  if (best_mag < 1e-4) return kNoTone;
  return static_cast<double>(best_k) * sr / n;
}

}  // namespace synthetic_av
}  // namespace segfoley
