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

#ifndef SEGFOLEY_CURATION_HPP_
#define SEGFOLEY_CURATION_HPP_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "segfoley/media.hpp"
#include "segfoley/synthetic_av.hpp"

namespace segfoley {
namespace curation {

// In-memory source video with its audio and the label of the sounding
// object. Real deployments stream from disk; desk scale keeps clips small.
struct SourceMedia {
  std::string id;
  std::string label;
  VideoClip video;
  AudioTrack audio;

  double duration_s() const { return video.frames / video.frame_rate; }
};

struct Scene {
  std::string source_id;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct LabelScore {
  std::string label;
  double score = 0.0;
  bool operator==(const LabelScore&) const = default;
};

// Per target class: top classifier-vocabulary labels by cosine similarity,
// scores descending.
using SignatureMap = std::map<std::string, std::vector<LabelScore>>;

struct PresenceTimeline {
  double start_s = 0.0;
  double window_s = 0.5;
  std::vector<bool> flags;
  std::string modality;  // "visual" | "audio"
};

struct ClipSpan {
  double start_s = 0.0;
  double duration_s = 5.0;
  bool operator==(const ClipSpan&) const = default;
};

// ---- model-suite interfaces ----

class SceneDetector {
 public:
  virtual ~SceneDetector() = default;
  // Cut timestamps strictly inside (0, duration).
  virtual std::vector<double> cuts(const SourceMedia& source) = 0;
};

class ImageClassifier {
 public:
  virtual ~ImageClassifier() = default;
  // Top-k (label, confidence) for the frame nearest time_s.
  virtual std::vector<LabelScore> classify(const SourceMedia& source,
                                           double time_s) = 0;
};

class AudioClassifier {
 public:
  virtual ~AudioClassifier() = default;
  virtual std::vector<LabelScore> classify(const SourceMedia& source, double t0,
                                           double t1) = 0;
};

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  // Unit-norm embedding of a label string.
  virtual Eigen::VectorXd embed(const std::string& label) = 0;
};

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  // Initial mask for the first frame of the span, or nullopt on failure.
  virtual std::optional<MaskStream> initial_mask(const SourceMedia& source,
                                                 double start_s,
                                                 const std::string& label) = 0;
  // Propagates the initial single-frame mask across n_frames.
  virtual MaskStream propagate(const SourceMedia& source, double start_s,
                               int n_frames, const MaskStream& init) = 0;
};

struct ModelSuite {
  std::shared_ptr<SceneDetector> detector;
  std::shared_ptr<ImageClassifier> image_classifier;
  std::shared_ptr<AudioClassifier> audio_classifier;
  std::shared_ptr<TextEmbedder> embedder;
  std::shared_ptr<Segmenter> segmenter;
};

struct CurationConfig {
  std::vector<std::string> target_classes;
  std::vector<std::string> image_vocab;
  std::vector<std::string> audio_vocab;
  std::vector<std::string> silence_labels = {"silence"};
  int top_k = 5;
  double confidence = 0.2;  // presence needs confidence strictly above this
  double sample_fps = 2.0;
  double clip_s = 5.0;
  // Optional cap on the fraction of silent audio windows inside a clip;
  // negative disables the check (the verbatim stage-3 rule).
  double max_silent_fraction = -1.0;
  std::map<std::string, int> class_ids;  // label -> manifest class id
  std::string out_dir;
};

struct StageCount {
  long in = 0;
  long accepted = 0;
  long rejected = 0;
};

struct StageStats {
  std::map<std::string, StageCount> stages;
  void add(const std::string& stage, bool ok) {
    auto& c = stages[stage];
    ++c.in;
    ++(ok ? c.accepted : c.rejected);
  }
  std::string to_string() const;
};

// ---- stages ----

// Ordered, disjoint scenes covering [0, duration).
std::vector<Scene> split_scenes(const SourceMedia& source, SceneDetector& detector);

// Top-k vocabulary labels per target class by embedding cosine similarity;
// ties break lexicographically.
SignatureMap visual_signatures(const std::vector<std::string>& target_classes,
                               const std::vector<std::string>& vocab,
                               TextEmbedder& embedder, int k = 5);

// Present iff a signature label appears in the classifier's top-k with
// confidence strictly above the threshold. Classifier failures mark the
// window absent.
PresenceTimeline verify_visual(const SourceMedia& source, const Scene& scene,
                               const std::vector<LabelScore>& signatures,
                               ImageClassifier& classifier, double sample_fps = 2.0,
                               double confidence = 0.2, int top_k = 5);

// Same gate over audio windows; silence labels also count as present.
PresenceTimeline verify_audio(const SourceMedia& source, const Scene& scene,
                              const std::vector<LabelScore>& signatures,
                              const std::vector<std::string>& silence_labels,
                              AudioClassifier& classifier, double window_s,
                              double confidence = 0.2, int top_k = 5);

// Greedy left-to-right non-overlapping clips where both timelines are true
// for every covered window.
std::vector<ClipSpan> extract_clips(const PresenceTimeline& visual,
                                    const PresenceTimeline& audio,
                                    double clip_s = 5.0);

// Mask for one clip via the segmenter; nullopt when no initial mask.
std::optional<MaskStream> generate_masks(const SourceMedia& source,
                                         const ClipSpan& span,
                                         const std::string& label,
                                         Segmenter& segmenter);

struct PipelineResult {
  synthetic_av::Manifest manifest;
  StageStats stats;
};

// Full five-stage pipeline; per-item failures are counted, never fatal.
PipelineResult run_pipeline(const std::vector<SourceMedia>& sources,
                            const CurationConfig& config, ModelSuite& suite);

// ---- deterministic mock suite ----
// Heuristic oracles over the synthetic toy media: color matching for the
// image classifier, band energy for the audio classifier, hashed unit
// vectors for the embedder, scripted cuts, and threshold segmentation.
ModelSuite build_mock_suite(const std::map<std::string, std::vector<double>>&
                                scripted_cuts = {});

}  // namespace curation
}  // namespace segfoley

#endif  // SEGFOLEY_CURATION_HPP_
