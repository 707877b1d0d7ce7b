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

#include "segfoley/curation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "segfoley/spectrogram.hpp"

namespace segfoley {
namespace curation {
namespace {

namespace fs = std::filesystem;

bool any_true(const PresenceTimeline& t) {
  return std::any_of(t.flags.begin(), t.flags.end(), [](bool b) { return b; });
}

bool gate(const std::vector<LabelScore>& preds,
          const std::vector<std::string>& wanted, int top_k, double confidence) {
  const int n = std::min<int>(top_k, static_cast<int>(preds.size()));
  for (int i = 0; i < n; ++i) {
    if (preds[i].score <= confidence) continue;
    for (const auto& w : wanted)
      if (preds[i].label == w) return true;
  }
  return false;
}

int timeline_windows(const Scene& scene, double window_s) {
  return static_cast<int>(
      std::ceil((scene.end_s - scene.start_s) / window_s - 1e-9));
}

VideoClip slice_video(const VideoClip& video, double start_s, int n_frames) {
  const int f0 = static_cast<int>(std::lround(start_s * video.frame_rate));
  VideoClip out(n_frames, video.height, video.width, video.frame_rate);
  const std::size_t per_frame =
      static_cast<std::size_t>(video.height) * video.width * 3;
  for (int f = 0; f < n_frames; ++f) {
    const int src = std::min(video.frames - 1, f0 + f);
    std::copy_n(video.data.begin() + src * per_frame, per_frame,
                out.data.begin() + f * per_frame);
  }
  return out;
}

AudioTrack slice_audio(const AudioTrack& audio, double start_s, double dur_s) {
  const int i0 = static_cast<int>(std::lround(start_s * audio.sample_rate));
  const int n = static_cast<int>(std::lround(dur_s * audio.sample_rate));
  AudioTrack out(static_cast<std::size_t>(n), audio.sample_rate);
  for (int i = 0; i < n; ++i) {
    const int src = i0 + i;
    if (src >= 0 && src < static_cast<int>(audio.samples.size()))
      out.samples[i] = audio.samples[src];
  }
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string StageStats::to_string() const {
  std::ostringstream os;
  for (const auto& [name, c] : stages)
    os << name << ": in=" << c.in << " accepted=" << c.accepted
       << " rejected=" << c.rejected << "\n";
  return os.str();
}

std::vector<Scene> split_scenes(const SourceMedia& source,
                                SceneDetector& detector) {
  const double dur = source.duration_s();
  if (dur <= 0.0) throw DataError("split_scenes: empty source " + source.id);
  std::vector<double> cuts = detector.cuts(source);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<double> bounds = {0.0};
  for (double c : cuts)
    if (c > 1e-9 && c < dur - 1e-9) bounds.push_back(c);
  bounds.push_back(dur);
  std::vector<Scene> scenes;
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i)
    scenes.push_back({source.id, bounds[i], bounds[i + 1]});
  return scenes;
}

SignatureMap visual_signatures(const std::vector<std::string>& target_classes,
                               const std::vector<std::string>& vocab,
                               TextEmbedder& embedder, int k) {
  if (vocab.empty()) throw ConfigError("visual_signatures: empty vocabulary");
  SignatureMap out;
  std::vector<std::pair<std::string, Eigen::VectorXd>> vocab_embs;
  vocab_embs.reserve(vocab.size());
  for (const auto& v : vocab) {
    Eigen::VectorXd e = embedder.embed(v);
    const double n = e.norm();
    if (n > 0) e /= n;
    vocab_embs.emplace_back(v, std::move(e));
  }
  for (const auto& target : target_classes) {
    Eigen::VectorXd te = embedder.embed(target);
    const double n = te.norm();
    if (n > 0) te /= n;
    std::vector<LabelScore> scored;
    scored.reserve(vocab.size());
    for (const auto& [label, emb] : vocab_embs)
      scored.push_back({label, te.dot(emb)});
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.label < b.label;  // deterministic tie-break
    });
    if (static_cast<int>(scored.size()) > k) scored.resize(k);
    out[target] = std::move(scored);
  }
  return out;
}

PresenceTimeline verify_visual(const SourceMedia& source, const Scene& scene,
                               const std::vector<LabelScore>& signatures,
                               ImageClassifier& classifier, double sample_fps,
                               double confidence, int top_k) {
  PresenceTimeline tl;
  tl.start_s = scene.start_s;
  tl.window_s = 1.0 / sample_fps;
  tl.modality = "visual";
  std::vector<std::string> wanted;
  for (const auto& s : signatures) wanted.push_back(s.label);
  const int n = timeline_windows(scene, tl.window_s);
  tl.flags.resize(n, false);
  for (int w = 0; w < n; ++w) {
    const double t = scene.start_s + w * tl.window_s;
    try {
      tl.flags[w] = gate(classifier.classify(source, t), wanted, top_k, confidence);
    } catch (const Error&) {
      tl.flags[w] = false;  // classifier failure: window absent
    }
  }
  return tl;
}

PresenceTimeline verify_audio(const SourceMedia& source, const Scene& scene,
                              const std::vector<LabelScore>& signatures,
                              const std::vector<std::string>& silence_labels,
                              AudioClassifier& classifier, double window_s,
                              double confidence, int top_k) {
  PresenceTimeline tl;
  tl.start_s = scene.start_s;
  tl.window_s = window_s;
  tl.modality = "audio";
  std::vector<std::string> wanted;
  for (const auto& s : signatures) wanted.push_back(s.label);
  for (const auto& s : silence_labels) wanted.push_back(s);
  const int n = timeline_windows(scene, window_s);
  tl.flags.resize(n, false);
  for (int w = 0; w < n; ++w) {
    const double t0 = scene.start_s + w * window_s;
    const double t1 = std::min(scene.end_s, t0 + window_s);
    try {
      tl.flags[w] = gate(classifier.classify(source, t0, t1), wanted, top_k,
                         confidence);
    } catch (const Error&) {
      tl.flags[w] = false;
    }
  }
  return tl;
}

std::vector<ClipSpan> extract_clips(const PresenceTimeline& visual,
                                    const PresenceTimeline& audio,
                                    double clip_s) {
  if (visual.flags.size() != audio.flags.size() ||
      std::fabs(visual.window_s - audio.window_s) > 1e-9 ||
      std::fabs(visual.start_s - audio.start_s) > 1e-9)
    throw DataError("extract_clips: timelines not aligned");
  const double ratio = clip_s / visual.window_s;
  const int k = static_cast<int>(std::lround(ratio));
  if (std::fabs(ratio - k) > 1e-9 || k < 1)
    throw ConfigError("extract_clips: clip length must be a multiple of window");
  const int n = static_cast<int>(visual.flags.size());
  std::vector<ClipSpan> out;
  int i = 0;
  while (i + k <= n) {
    bool ok = true;
    for (int j = i; j < i + k; ++j)
      if (!(visual.flags[j] && audio.flags[j])) {
        ok = false;
        break;
      }
    if (ok) {
      out.push_back({visual.start_s + i * visual.window_s, clip_s});
      i += k;
    } else {
      ++i;
    }
  }
  return out;
}

std::optional<MaskStream> generate_masks(const SourceMedia& source,
                                         const ClipSpan& span,
                                         const std::string& label,
                                         Segmenter& segmenter) {
  auto init = segmenter.initial_mask(source, span.start_s, label);
  if (!init) return std::nullopt;
  const int n_frames =
      static_cast<int>(std::lround(span.duration_s * source.video.frame_rate));
  MaskStream mask = segmenter.propagate(source, span.start_s, n_frames, *init);
  if (mask.frames != n_frames)
    throw DataError("segmenter returned wrong mask frame count for " + source.id);
  return mask;
}

PipelineResult run_pipeline(const std::vector<SourceMedia>& sources,
                            const CurationConfig& config, ModelSuite& suite) {
  if (!suite.detector || !suite.image_classifier || !suite.audio_classifier ||
      !suite.embedder || !suite.segmenter)
    throw ConfigError("run_pipeline: incomplete model suite");
  const SignatureMap image_sigs = visual_signatures(
      config.target_classes, config.image_vocab, *suite.embedder, config.top_k);
  const SignatureMap audio_sigs = visual_signatures(
      config.target_classes, config.audio_vocab, *suite.embedder, config.top_k);

  PipelineResult result;
  result.manifest.root_dir = config.out_dir;
  if (!config.out_dir.empty())
    fs::create_directories(fs::path(config.out_dir) / "clips");

  const double window_s = 1.0 / config.sample_fps;
  int clip_counter = 0;

  for (const auto& source : sources) {
    const bool labeled = image_sigs.count(source.label) > 0;
    result.stats.add("stage1_sources", labeled);
    if (!labeled) continue;

    for (const Scene& scene : split_scenes(source, *suite.detector)) {
      const PresenceTimeline vis =
          verify_visual(source, scene, image_sigs.at(source.label),
                        *suite.image_classifier, config.sample_fps,
                        config.confidence, config.top_k);
      result.stats.add("stage2_visual", any_true(vis));
      if (!any_true(vis)) continue;

      const PresenceTimeline aud =
          verify_audio(source, scene, audio_sigs.at(source.label),
                       config.silence_labels, *suite.audio_classifier, window_s,
                       config.confidence, config.top_k);
      result.stats.add("stage3_audio", any_true(aud));
      if (!any_true(aud)) continue;

      std::vector<ClipSpan> spans = extract_clips(vis, aud, config.clip_s);

      if (config.max_silent_fraction >= 0.0) {
        // Optional knob on top of the verbatim silence rule: drop clips with
        // too many fully-silent audio windows.
        std::vector<ClipSpan> kept;
        for (const ClipSpan& span : spans) {
          int silent = 0, total = 0;
          for (double t = span.start_s; t + window_s <= span.start_s + span.duration_s + 1e-9;
               t += window_s) {
            const auto preds =
                suite.audio_classifier->classify(source, t, t + window_s);
            bool is_silent = false;
            if (!preds.empty())
              for (const auto& sl : config.silence_labels)
                if (preds.front().label == sl) is_silent = true;
            silent += is_silent ? 1 : 0;
            ++total;
          }
          if (total == 0 ||
              static_cast<double>(silent) / total <= config.max_silent_fraction)
            kept.push_back(span);
        }
        spans = std::move(kept);
      }

      result.stats.add("stage4_clipping", !spans.empty());

      for (const ClipSpan& span : spans) {
        auto mask = generate_masks(source, span, source.label, *suite.segmenter);
        result.stats.add("stage5_masks", mask.has_value());
        if (!mask) continue;  // flagged and excluded, pipeline continues

        char idbuf[64];
        std::snprintf(idbuf, sizeof(idbuf), "%s_clip%04d", source.id.c_str(),
                      clip_counter++);
        synthetic_av::ManifestRecord rec;
        rec.id = idbuf;
        rec.split = "train";
        rec.frame_rate = source.video.frame_rate;
        rec.sample_rate = source.audio.sample_rate;
        rec.n_objects = 1;
        rec.target_index = 0;
        auto it = config.class_ids.find(source.label);
        rec.class_label = it == config.class_ids.end() ? 0 : it->second;
        rec.object_classes = {rec.class_label};
        rec.flash_times = {{}};

        if (!config.out_dir.empty()) {
          const int n_frames = mask->frames;
          const VideoClip clip_video =
              slice_video(source.video, span.start_s, n_frames);
          const AudioTrack clip_audio =
              slice_audio(source.audio, span.start_s, span.duration_s);
          rec.video_path = std::string("clips/") + idbuf + ".rvid";
          rec.mask_paths = {std::string("clips/") + idbuf + "_obj0.mrle"};
          rec.audio_mixed_path = std::string("clips/") + idbuf + "_mix.wav";
          rec.audio_target_path = rec.audio_mixed_path;
          write_rvid(result.manifest.resolve(rec.video_path), clip_video);
          write_mrle(result.manifest.resolve(rec.mask_paths[0]), *mask);
          write_wav(result.manifest.resolve(rec.audio_mixed_path), clip_audio);
        }
        result.manifest.records.push_back(std::move(rec));
      }
    }
  }

  if (!config.out_dir.empty())
    synthetic_av::write_manifest(
        (fs::path(config.out_dir) / "manifest.jsonl").string(), result.manifest);
  return result;
}

// ---- mock suite ----

namespace {

class ScriptedSceneDetector : public SceneDetector {
 public:
  explicit ScriptedSceneDetector(std::map<std::string, std::vector<double>> cuts)
      : cuts_(std::move(cuts)) {}
  std::vector<double> cuts(const SourceMedia& source) override {
    auto it = cuts_.find(source.id);
    return it == cuts_.end() ? std::vector<double>{} : it->second;
  }

 private:
  std::map<std::string, std::vector<double>> cuts_;
};

class HashTextEmbedder : public TextEmbedder {
 public:
  Eigen::VectorXd embed(const std::string& label) override {
    Rng rng(fnv1a(label));
    Eigen::VectorXd v(16);
    for (int i = 0; i < 16; ++i) v(i) = rng.normal();
    v.normalize();
    return v;
  }
};

int parse_tone_class(const std::string& label) {
  if (label.rfind("tone_", 0) != 0) return -1;
  try {
    return std::stoi(label.substr(5));
  } catch (...) {
    return -1;
  }
}

// Scores classes by matching the foreground mean color against the palette.
class ColorImageClassifier : public ImageClassifier {
 public:
  std::vector<LabelScore> classify(const SourceMedia& source,
                                   double time_s) override {
    const VideoClip& v = source.video;
    const int f = std::clamp(
        static_cast<int>(std::lround(time_s * v.frame_rate)), 0, v.frames - 1);
    double color[3] = {0, 0, 0};
    long count = 0;
    for (int y = 0; y < v.height; ++y) {
      for (int x = 0; x < v.width; ++x) {
        const float r = v.at(f, y, x, 0), g = v.at(f, y, x, 1),
                    b = v.at(f, y, x, 2);
        if (std::max({r, g, b}) > 0.18f) {
          color[0] += r;
          color[1] += g;
          color[2] += b;
          ++count;
        }
      }
    }
    std::vector<LabelScore> out;
    if (count == 0) return out;
    Eigen::Vector3d c(color[0] / count, color[1] / count, color[2] / count);
    c.normalize();
    for (int k = 0; k < 8; ++k) {
      float rgb[3];
      synthetic_av::class_color(k, rgb);
      Eigen::Vector3d pal(rgb[0], rgb[1], rgb[2]);
      pal.normalize();
      const double dot = std::max(0.0, c.dot(pal));
      out.push_back({"tone_" + std::to_string(k), dot * dot * dot * dot});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.label < b.label;
    });
    return out;
  }
};

class BandAudioClassifier : public AudioClassifier {
 public:
  std::vector<LabelScore> classify(const SourceMedia& source, double t0,
                                   double t1) override {
    const AudioTrack& a = source.audio;
    const int i0 = std::max(0, static_cast<int>(std::lround(t0 * a.sample_rate)));
    const int i1 = std::min<int>(a.samples.size(),
                                 static_cast<int>(std::lround(t1 * a.sample_rate)));
    AudioTrack window(static_cast<std::size_t>(std::max(0, i1 - i0)),
                      a.sample_rate);
    std::copy(a.samples.begin() + i0, a.samples.begin() + i1,
              window.samples.begin());
    double rms = 0.0;
    for (float s : window.samples) rms += double(s) * s;
    rms = window.samples.empty() ? 0.0 : std::sqrt(rms / window.samples.size());
    std::vector<LabelScore> out;
    if (rms < 1e-3) {
      out.push_back({"silence", 0.9});
      return out;
    }
    const MatF latent = LatentCodec::analyze(window);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(8);
    for (Eigen::Index t = 0; t < latent.rows(); ++t)
      for (int k = 0; k < 8; ++k)
        e(k) += LatentCodec::latent_to_amp(latent(t, k + 4));
    const double total = e.sum() + 1e-12;
    for (int k = 0; k < 8; ++k)
      out.push_back({"tone_" + std::to_string(k), e(k) / total});
    std::sort(out.begin(), out.end(), [](const auto& a2, const auto& b2) {
      if (a2.score != b2.score) return a2.score > b2.score;
      return a2.label < b2.label;
    });
    return out;
  }
};

class ThresholdSegmenter : public Segmenter {
 public:
  std::optional<MaskStream> initial_mask(const SourceMedia& source,
                                         double start_s,
                                         const std::string& /*label*/) override {
    const MaskStream m = frame_mask(source, start_s);
    if (m.frame_empty(0)) return std::nullopt;
    return m;
  }

  MaskStream propagate(const SourceMedia& source, double start_s, int n_frames,
                       const MaskStream& /*init*/) override {
    MaskStream out(n_frames, source.video.height, source.video.width);
    for (int f = 0; f < n_frames; ++f) {
      const MaskStream m =
          frame_mask(source, start_s + f / source.video.frame_rate);
      std::copy(m.data.begin(), m.data.end(),
                out.data.begin() +
                    static_cast<std::size_t>(f) * out.height * out.width);
    }
    return out;
  }

 private:
  static MaskStream frame_mask(const SourceMedia& source, double time_s) {
    const VideoClip& v = source.video;
    const int f = std::clamp(
        static_cast<int>(std::lround(time_s * v.frame_rate)), 0, v.frames - 1);
    MaskStream m(1, v.height, v.width);
    for (int y = 0; y < v.height; ++y)
      for (int x = 0; x < v.width; ++x)
        m.at(0, y, x) =
            std::max({v.at(f, y, x, 0), v.at(f, y, x, 1), v.at(f, y, x, 2)}) > 0.18f
                ? 1
                : 0;
    return m;
  }
};

}  // namespace

ModelSuite build_mock_suite(
    const std::map<std::string, std::vector<double>>& scripted_cuts) {
  ModelSuite suite;
  suite.detector = std::make_shared<ScriptedSceneDetector>(scripted_cuts);
  suite.image_classifier = std::make_shared<ColorImageClassifier>();
  suite.audio_classifier = std::make_shared<BandAudioClassifier>();
  suite.embedder = std::make_shared<HashTextEmbedder>();
  suite.segmenter = std::make_shared<ThresholdSegmenter>();
  return suite;
}

}  // namespace curation
}  // namespace segfoley
