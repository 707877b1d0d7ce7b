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

#include "segfoley/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

#include <json.hpp>

#include "segfoley/focal_prompt.hpp"
#include "segfoley/spectrogram.hpp"

namespace segfoley {
namespace metrics {
namespace {

using nlohmann::json;
constexpr double kEps = 1e-8;
constexpr double kToneWindowS = 0.25;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

void PosteriorSet::validate() const {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    if ((rows.row(i).array() < -1e-12).any())
      throw DataError("posterior row has negative mass");
    if (std::fabs(rows.row(i).sum() - 1.0) > 1e-6)
      throw DataError("posterior row does not sum to 1");
  }
}

MatD psd_sqrt(const MatD& m) {
  const MatD sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<MatD> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("psd_sqrt: eigensolver failed");
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double frechet_distance(const EmbeddingSet& a, const EmbeddingSet& b) {
  if (a.vectors.cols() != b.vectors.cols() || a.vectors.cols() == 0)
    throw DataError("frechet_distance: dimension mismatch");
  if (a.vectors.rows() < 2 || b.vectors.rows() < 2)
    throw DataError("frechet_distance: need at least 2 samples per set");
  const auto moments = [](const MatD& x) {
    Eigen::RowVectorXd mu = x.colwise().mean();
    MatD centered = x.rowwise() - mu;
    MatD sigma = centered.transpose() * centered / double(x.rows() - 1);
    return std::make_pair(mu, sigma);
  };
  auto [mu_a, sig_a] = moments(a.vectors);
  auto [mu_b, sig_b] = moments(b.vectors);
  const double mean_term = (mu_a - mu_b).squaredNorm();
  const MatD root_a = psd_sqrt(sig_a);
  const MatD cross = psd_sqrt(root_a * sig_b * root_a);
  return mean_term + sig_a.trace() + sig_b.trace() - 2.0 * cross.trace();
}

double kl_metric(const PosteriorSet& gt, const PosteriorSet& gen) {
  if (gt.rows.rows() != gen.rows.rows() || gt.rows.cols() != gen.rows.cols())
    throw DataError("kl_metric: sets are not paired");
  if (gt.rows.rows() == 0) throw DataError("kl_metric: empty sets");
  double total = 0.0;
  for (Eigen::Index i = 0; i < gt.rows.rows(); ++i)
    for (Eigen::Index c = 0; c < gt.rows.cols(); ++c)
      total += gt.rows(i, c) * (std::log(gt.rows(i, c) + kEps) -
                                std::log(gen.rows(i, c) + kEps));
  return total / double(gt.rows.rows());
}

double inception_score(const PosteriorSet& p) {
  if (p.rows.rows() < 1) throw DataError("inception_score: empty set");
  Eigen::RowVectorXd marginal = p.rows.colwise().mean();
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows.rows(); ++i)
    for (Eigen::Index c = 0; c < p.rows.cols(); ++c)
      total += p.rows(i, c) *
               (std::log(p.rows(i, c) + kEps) - std::log(marginal(c) + kEps));
  return std::exp(total / double(p.rows.rows()));
}

double ib_score(const EmbeddingSet& audio, const EmbeddingSet& video) {
  if (audio.vectors.rows() != video.vectors.rows() ||
      audio.vectors.cols() != video.vectors.cols())
    throw DataError("ib_score: sets are not paired");
  if (audio.vectors.rows() == 0) throw DataError("ib_score: empty sets");
  double total = 0.0;
  for (Eigen::Index i = 0; i < audio.vectors.rows(); ++i) {
    const double na = audio.vectors.row(i).norm();
    const double nv = video.vectors.row(i).norm();
    if (na == 0.0 || nv == 0.0) throw DataError("ib_score: zero-norm embedding");
    total += audio.vectors.row(i).dot(video.vectors.row(i)) / (na * nv);
  }
  return 100.0 * total / double(audio.vectors.rows());
}

double desync(const std::vector<double>& offsets) {
  if (offsets.empty()) throw DataError("desync: empty offset list");
  double total = 0.0;
  for (double o : offsets) total += std::fabs(o);
  return total / double(offsets.size());
}

std::string MetricReport::to_json() const {
  json j;
  j["values"] = values;
  j["counts"] = counts;
  j["config_hash"] = config_hash;
  return j.dump(2);
}

MetricReport MetricReport::from_json(const std::string& text) {
  const json j = json::parse(text);
  MetricReport r;
  r.values = j.at("values").get<std::map<std::string, double>>();
  r.counts = j.at("counts").get<std::map<std::string, long>>();
  r.config_hash = j.at("config_hash").get<std::string>();
  return r;
}

MetricReport evaluate(const synthetic_av::Manifest& manifest,
                      cfm::SagaModel<float>& model, const EmbedderSuite& suite,
                      const EvalOptions& opt) {
  const auto records = manifest.split(opt.split);
  std::vector<Eigen::RowVectorXd> gen_embs, gt_embs, video_embs;
  std::vector<Eigen::RowVectorXd> gt_posts, gen_posts;
  std::vector<double> offsets;
  long tone_total = 0, tone_correct = 0;
  long skipped = 0, samples = 0;

  for (std::size_t idx = 0; idx < records.size(); ++idx) {
    const auto& rec = *records[idx];
    if (rec.audio_target_path.empty()) {
      ++skipped;
      continue;
    }
    VideoClip video;
    MaskStream mask;
    AudioTrack gt_audio;
    try {
      video = read_rvid(manifest.resolve(rec.video_path));
      mask = read_mrle(manifest.resolve(rec.mask_paths.at(rec.target_index)));
      gt_audio = read_wav(manifest.resolve(rec.audio_target_path));
    } catch (const DataError&) {
      ++skipped;
      continue;
    }

    // Ground-truth video cropped to the target region (same window rule as
    // the focal prompt) for the video-side embeddings.
    const auto boxes = focal_prompt::frame_bboxes(mask);
    const auto window =
        focal_prompt::crop_window(boxes, video.height, video.width, opt.min_crop);
    const VideoClip cropped = focal_prompt::crop_video(video, window);

    const Eigen::RowVectorXd gt_emb = suite.audio_embedding(gt_audio).transpose();
    const Eigen::RowVectorXd gt_post = suite.audio_posterior(gt_audio).transpose();
    const Eigen::RowVectorXd video_emb = suite.video_embedding(cropped).transpose();
    gt_embs.push_back(gt_emb);

    const auto& flashes = rec.flash_times.at(rec.target_index);
    for (int s = 0; s < opt.n_samples; ++s) {
      cfm::GenerateOptions gopt;
      gopt.steps = opt.steps;
      gopt.cfg_scale = opt.cfg_scale;
      gopt.sample_rate = rec.sample_rate;
      gopt.seed = Rng::derive(opt.seed, idx, s).next_u64();
      const AudioTrack audio = cfm::generate<float>(
          model, video, mask, opt.use_text ? rec.class_label : -1, gopt);
      ++samples;

      gen_embs.push_back(suite.audio_embedding(audio).transpose());
      gen_posts.push_back(suite.audio_posterior(audio).transpose());
      gt_posts.push_back(gt_post);
      video_embs.push_back(video_emb);
      offsets.push_back(suite.offset_estimate(audio, cropped));

      for (double tf : flashes) {
        const double t1 = std::min(tf + kToneWindowS, audio.duration_s());
        const double hz = synthetic_av::dominant_tone(audio, tf, t1);
        ++tone_total;
        if (nearest_class_for_hz(hz, model.cfg.generator.n_classes) ==
            rec.class_label)
          ++tone_correct;
      }
    }
  }

  if (gen_embs.empty()) throw DataError("evaluate: no usable eval clips");

  auto stack = [](const std::vector<Eigen::RowVectorXd>& rows) {
    MatD m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(i) = rows[i];
    return m;
  };

  MetricReport report;
  report.values["fd"] =
      frechet_distance({stack(gen_embs), "generated"}, {stack(gt_embs), "reference"});
  report.values["kl"] = kl_metric({stack(gt_posts)}, {stack(gen_posts)});
  report.values["is"] = inception_score({stack(gen_posts)});
  report.values["ib_score"] =
      ib_score({stack(gen_embs), "generated"}, {stack(video_embs), "video"});
  report.values["desync"] = desync(offsets);
  report.values["tone_accuracy"] =
      tone_total ? double(tone_correct) / double(tone_total) : 0.0;
  report.counts["clips"] = static_cast<long>(records.size()) - skipped;
  report.counts["skipped"] = skipped;
  report.counts["samples"] = samples;
  report.counts["tone_windows"] = tone_total;

  std::ostringstream h;
  h << cfm::visual_prompt_name(model.cfg.mode) << '|' << opt.n_samples << '|'
    << opt.seed << '|' << opt.steps << '|' << opt.cfg_scale << '|' << opt.split
    << '|' << opt.use_text;
  std::ostringstream hex;
  hex << std::hex << fnv1a(h.str());
  report.config_hash = hex.str();
  return report;
}

}  // namespace metrics
}  // namespace segfoley
