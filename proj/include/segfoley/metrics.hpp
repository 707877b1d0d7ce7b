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

#ifndef SEGFOLEY_METRICS_HPP_
#define SEGFOLEY_METRICS_HPP_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "segfoley/media.hpp"
#include "segfoley/trainer.hpp"

namespace segfoley {
namespace metrics {

// N x d embedding vectors from one source (generated or reference audio,
// video, ...).
struct EmbeddingSet {
  MatD vectors;
  std::string source;
};

// N x C rows, each a probability distribution.
struct PosteriorSet {
  MatD rows;
  void validate() const;
};

// Symmetric PSD square root via eigendecomposition, negative eigenvalues
// clamped at zero.
MatD psd_sqrt(const MatD& m);

// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa Sb)^{1/2}), unbiased covariances.
double frechet_distance(const EmbeddingSet& a, const EmbeddingSet& b);

// Mean over paired rows of KL(gt_i || gen_i), eps = 1e-8 smoothing.
double kl_metric(const PosteriorSet& gt, const PosteriorSet& gen);

// exp(mean_i KL(p_i || mean_j p_j)).
double inception_score(const PosteriorSet& p);

// 100 x mean pairwise cosine similarity.
double ib_score(const EmbeddingSet& audio, const EmbeddingSet& video);

// Mean absolute offset.
double desync(const std::vector<double>& offsets);

// Pluggable embedder/classifier/offset-estimator suite. Video inputs are
// already cropped to the target region by the evaluator.
struct EmbedderSuite {
  int embed_dim = 0;
  int n_classes = 0;
  std::function<Eigen::VectorXd(const AudioTrack&)> audio_embedding;
  std::function<Eigen::VectorXd(const VideoClip&)> video_embedding;
  std::function<Eigen::VectorXd(const AudioTrack&)> audio_posterior;
  std::function<double(const AudioTrack&, const VideoClip&)> offset_estimate;
};

// Deterministic desk-scale proxies: spectrogram-statistics audio embedder,
// color/flash video embedder in the same space, tone-class posterior, and a
// chamfer onset-alignment offset estimator.
EmbedderSuite build_proxy_suite(int n_classes);

struct MetricReport {
  std::map<std::string, double> values;
  std::map<std::string, long> counts;
  std::string config_hash;

  std::string to_json() const;
  static MetricReport from_json(const std::string& text);
  bool operator==(const MetricReport&) const = default;
};

struct EvalOptions {
  int n_samples = 5;
  std::uint64_t seed = 0;
  int steps = 25;
  double cfg_scale = 7.0;
  std::string split = "test";
  // Text conditioning during evaluation; classes are inferred from records.
  bool use_text = false;
  int min_crop = 48;
};

// Generates n samples per eval clip, computes FD / KL / IS / IB / DeSync
// against the stored target tracks plus the desk-scale extras
// (tone_accuracy, onset alignment). Clips without ground truth are skipped
// and counted.
MetricReport evaluate(const synthetic_av::Manifest& manifest,
                      cfm::SagaModel<float>& model, const EmbedderSuite& suite,
                      const EvalOptions& opt);

}  // namespace metrics
}  // namespace segfoley

#endif  // SEGFOLEY_METRICS_HPP_
