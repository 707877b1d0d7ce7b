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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "segfoley/curation.hpp"
#include "segfoley/metrics.hpp"
#include "segfoley/run_config.hpp"
#include "segfoley/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace segfoley;

namespace {

std::vector<std::string> tone_labels(int n) {
  std::vector<std::string> out;
  for (int k = 0; k < n; ++k) out.push_back("tone_" + std::to_string(k));
  return out;
}

// ---- synth ----

int cmd_synth(const RunConfig& cfg) {
  synthetic_av::DatasetConfig dc;
  dc.train = cfg.get<int>("train");
  dc.val = cfg.get<int>("val");
  dc.test = cfg.get<int>("test");
  dc.n_classes = cfg.get<int>("classes");
  dc.duration_s = cfg.get<double>("duration");
  dc.frame_rate = cfg.get<double>("fps");
  dc.height = cfg.get<int>("resolution");
  dc.width = cfg.get<int>("resolution");
  dc.audio_rate = cfg.get<int>("audio_rate");
  dc.test_min_objects = cfg.get<int>("test_min_objects");
  dc.test_max_objects = cfg.get<int>("test_max_objects");
  dc.test_coincident_fraction = cfg.get<double>("test_coincident_fraction");
  dc.distractor_solo_flashes = cfg.get<int>("distractor_solo_flashes");
  dc.seed = cfg.get<std::uint64_t>("seed");
  dc.out_dir = cfg.get<std::string>("out");
  cfg.save(dc.out_dir);

  const auto manifest = synthetic_av::make_dataset(dc);
  int train = 0, val = 0, test = 0;
  for (const auto& r : manifest.records) {
    if (r.split == "train") ++train;
    else if (r.split == "val") ++val;
    else ++test;
  }
  std::printf("wrote %zu records (train %d, val %d, test %d)\n",
              manifest.records.size(), train, val, test);
  std::printf("manifest: %s/manifest.jsonl\n", dc.out_dir.c_str());
  return 0;
}

// ---- curate ----

struct SourceEntry {
  curation::SourceMedia media;
  std::vector<double> cuts;
};

std::vector<SourceEntry> read_sources(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read sources file: " + path);
  const std::string root = fs::path(path).parent_path().string();
  std::vector<SourceEntry> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    SourceEntry e;
    e.media.id = j.at("id").get<std::string>();
    e.media.label = j.at("label").get<std::string>();
    const auto resolve = [&](const std::string& rel) {
      return rel.empty() || rel.front() == '/' ? rel : root + "/" + rel;
    };
    e.media.video = read_rvid(resolve(j.at("video_path").get<std::string>()));
    e.media.audio = read_wav(resolve(j.at("audio_path").get<std::string>()));
    if (j.contains("cuts")) e.cuts = j.at("cuts").get<std::vector<double>>();
    out.push_back(std::move(e));
  }
  return out;
}

// Synthesizes demo source videos (long single-object scenes with a silent
// stretch) and writes a sources.jsonl next to them.
std::string make_demo_sources(const std::string& dir, int count,
                              std::uint64_t seed, int n_classes) {
  fs::create_directories(dir);
  const std::string sources_path = (fs::path(dir) / "sources.jsonl").string();
  std::ofstream os(sources_path);
  if (!os) throw DataError("cannot write " + sources_path);
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::derive(seed, 0xdeee0, i);
    synthetic_av::SceneSpec spec;
    spec.duration_s = 12.0;
    spec.n_objects = 1;
    spec.object_classes = {static_cast<int>(rng.uniform_int(n_classes))};
    std::vector<double> flashes;
    for (double t = 0.4; t < 11.2; t += 0.7 + 0.2 * rng.uniform()) {
      if (t > 5.0 && t < 7.2) continue;  // silent stretch
      flashes.push_back(t);
    }
    spec.flash_times = {flashes};
    spec.seed = rng.next_u64();
    const auto scene = synthetic_av::make_scene(spec);

    char id[32];
    std::snprintf(id, sizeof(id), "source_%03d", i);
    const std::string vid = std::string(id) + ".rvid";
    const std::string wav = std::string(id) + ".wav";
    write_rvid((fs::path(dir) / vid).string(), scene.video);
    write_wav((fs::path(dir) / wav).string(), scene.mixed);
    json j;
    j["id"] = id;
    j["label"] = "tone_" + std::to_string(spec.object_classes[0]);
    j["video_path"] = vid;
    j["audio_path"] = wav;
    j["cuts"] = json::array();
    os << j.dump() << "\n";
  }
  return sources_path;
}

int cmd_curate(const RunConfig& cfg, bool print_stats) {
  const std::string out_dir = cfg.get<std::string>("out");
  cfg.save(out_dir);
  std::string sources_path = cfg.get<std::string>("sources");
  const int demo = cfg.get<int>("demo");
  const int n_classes = cfg.get<int>("classes");
  if (sources_path.empty()) {
    if (demo <= 0)
      throw ConfigError("curate needs --sources FILE or --demo N");
    sources_path = make_demo_sources((fs::path(out_dir) / "sources").string(),
                                     demo, cfg.get<std::uint64_t>("seed"),
                                     n_classes);
    std::printf("demo sources: %s\n", sources_path.c_str());
  }
  const auto entries = read_sources(sources_path);

  std::map<std::string, std::vector<double>> cuts;
  std::vector<curation::SourceMedia> sources;
  for (const auto& e : entries) {
    cuts[e.media.id] = e.cuts;
    sources.push_back(e.media);
  }

  curation::CurationConfig cc;
  cc.target_classes = tone_labels(n_classes);
  cc.image_vocab = tone_labels(8);
  cc.audio_vocab = tone_labels(8);
  cc.audio_vocab.push_back("silence");
  cc.top_k = cfg.get<int>("top_k");
  cc.confidence = cfg.get<double>("confidence");
  cc.sample_fps = cfg.get<double>("sample_fps");
  cc.clip_s = cfg.get<double>("clip_s");
  cc.max_silent_fraction = cfg.get<double>("max_silent_fraction");
  for (int k = 0; k < n_classes; ++k) cc.class_ids["tone_" + std::to_string(k)] = k;
  cc.out_dir = out_dir;

  curation::ModelSuite suite = curation::build_mock_suite(cuts);
  const auto result = curation::run_pipeline(sources, cc, suite);
  std::printf("curated %zu clips -> %s/manifest.jsonl\n",
              result.manifest.records.size(), out_dir.c_str());
  if (print_stats) std::fputs(result.stats.to_string().c_str(), stdout);
  return 0;
}

// ---- train ----

int cmd_train(const RunConfig& cfg) {
  cfm::TrainConfig tc;
  tc.manifest_path = cfg.get<std::string>("manifest");
  tc.out_dir = cfg.get<std::string>("out");
  tc.model.mode = cfm::parse_visual_prompt(cfg.get<std::string>("visual_prompt"));
  tc.steps = cfg.get<int>("steps");
  tc.batch_size = cfg.get<int>("batch");
  tc.lr = cfg.get<double>("lr");
  tc.beta1 = cfg.get<double>("beta1");
  tc.beta2 = cfg.get<double>("beta2");
  tc.weight_decay = cfg.get<double>("weight_decay");
  tc.text_dropout = cfg.get<double>("text_dropout");
  tc.all_dropout = cfg.get<double>("all_dropout");
  tc.seed = cfg.get<std::uint64_t>("seed");
  tc.init_seed = cfg.get<std::uint64_t>("init_seed");
  tc.val_every = cfg.get<int>("val_every");
  tc.checkpoint_every = cfg.get<int>("checkpoint_every");
  tc.base_checkpoint = cfg.get<std::string>("base");
  tc.lora = cfg.get<bool>("lora");
  tc.lora_rank = cfg.get<int>("lora_rank");
  tc.lora_alpha = cfg.get<double>("lora_alpha");
  tc.min_crop = cfg.get<int>("min_crop");

  tc.model.backbone.patch_t = cfg.get<int>("bb_patch_t");
  tc.model.backbone.patch_h = cfg.get<int>("bb_patch_hw");
  tc.model.backbone.patch_w = cfg.get<int>("bb_patch_hw");
  tc.model.backbone.dim = cfg.get<int>("bb_dim");
  tc.model.backbone.n_layers = cfg.get<int>("bb_layers");
  tc.model.backbone.n_heads = cfg.get<int>("bb_heads");
  tc.model.backbone.input_frames = cfg.get<int>("bb_input_frames");
  tc.model.backbone.input_size = cfg.get<int>("bb_input_size");
  tc.model.generator.latent_frames = cfg.get<int>("gen_latent_frames");
  tc.model.generator.time_patch = cfg.get<int>("gen_time_patch");
  tc.model.generator.width = cfg.get<int>("gen_width");
  tc.model.generator.n_blocks = cfg.get<int>("gen_blocks");
  tc.model.generator.n_heads = cfg.get<int>("gen_heads");
  tc.model.generator.n_classes = cfg.get<int>("classes");
  tc.model.generator.cond_dim = tc.model.backbone.dim;

  cfg.save(tc.out_dir);
  const std::string ckpt = cfm::train_run(tc);
  std::printf("final checkpoint: %s\n", ckpt.c_str());
  return 0;
}

// ---- generate ----

int cmd_generate(const RunConfig& cfg) {
  const std::string ckpt_path = cfg.get<std::string>("checkpoint");
  auto model = cfm::load_model(ckpt_path);

  VideoClip video;
  MaskStream mask;
  int sample_rate = cfg.get<int>("audio_rate");
  const std::string clip_id = cfg.get<std::string>("clip_id");
  if (!clip_id.empty()) {
    const auto manifest =
        synthetic_av::read_manifest(cfg.get<std::string>("manifest"));
    const synthetic_av::ManifestRecord* rec = nullptr;
    for (const auto& r : manifest.records)
      if (r.id == clip_id) rec = &r;
    if (!rec) throw DataError("clip id not found in manifest: " + clip_id);
    int mask_index = cfg.get<int>("mask_index");
    if (mask_index < 0) mask_index = rec->target_index;
    video = read_rvid(manifest.resolve(rec->video_path));
    mask = read_mrle(manifest.resolve(rec->mask_paths.at(mask_index)));
    sample_rate = rec->sample_rate;
  } else {
    video = read_rvid(cfg.get<std::string>("video"));
    mask = read_mrle(cfg.get<std::string>("mask"));
  }

  cfm::GenerateOptions opt;
  opt.steps = cfg.get<int>("steps");
  opt.seed = cfg.get<std::uint64_t>("seed");
  opt.sample_rate = sample_rate;
  opt.cfg_scale = cfg.get<double>("scale");
  if (opt.cfg_scale < 0)  // per-mode default: 7.0, 4.5 for the plain baseline
    opt.cfg_scale = model->cfg.mode == cfm::VisualPromptMode::kFull ? 4.5 : 7.0;

  const int text = cfg.get<int>("text");
  const AudioTrack audio = cfm::generate<float>(*model, video, mask, text, opt);

  const std::string out = cfg.get<std::string>("out");
  if (!fs::path(out).parent_path().empty())
    fs::create_directories(fs::path(out).parent_path());
  write_wav(out, audio);

  json sidecar;
  sidecar["checkpoint"] = ckpt_path;
  sidecar["clip_id"] = clip_id;
  sidecar["video"] = cfg.get<std::string>("video");
  sidecar["mask"] = cfg.get<std::string>("mask");
  sidecar["text"] = text;
  sidecar["seed"] = opt.seed;
  sidecar["steps"] = opt.steps;
  sidecar["cfg_scale"] = opt.cfg_scale;
  sidecar["mode"] = cfm::visual_prompt_name(model->cfg.mode);
  std::ofstream os(out + ".json");
  os << sidecar.dump(2) << "\n";
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

// ---- eval ----

int cmd_eval(const RunConfig& cfg, const std::vector<std::string>& checkpoints) {
  if (checkpoints.empty()) throw ConfigError("eval needs at least one --checkpoint");
  const auto manifest =
      synthetic_av::read_manifest(cfg.get<std::string>("manifest"));
  const std::string out_dir = cfg.get<std::string>("out");
  cfg.save(out_dir);

  metrics::EvalOptions eo;
  eo.n_samples = cfg.get<int>("n_samples");
  eo.seed = cfg.get<std::uint64_t>("seed");
  eo.steps = cfg.get<int>("steps");
  eo.split = cfg.get<std::string>("split");
  eo.use_text = cfg.get<bool>("use_text");
  eo.min_crop = cfg.get<int>("min_crop");

  const std::vector<std::string> metric_names = {
      "fd", "kl", "is", "ib_score", "desync", "tone_accuracy"};
  std::vector<std::pair<std::string, metrics::MetricReport>> rows;
  for (const auto& ckpt : checkpoints) {
    auto model = cfm::load_model(ckpt);
    metrics::EvalOptions opt = eo;
    opt.cfg_scale = cfg.get<double>("scale");
    if (opt.cfg_scale < 0)
      opt.cfg_scale = model->cfg.mode == cfm::VisualPromptMode::kFull ? 4.5 : 7.0;
    const auto suite = metrics::build_proxy_suite(model->cfg.generator.n_classes);
    const auto report = metrics::evaluate(manifest, *model, suite, opt);
    const std::string name = fs::path(ckpt).parent_path().filename().string();
    const std::string report_path =
        (fs::path(out_dir) / (name + "_report.json")).string();
    std::ofstream os(report_path);
    os << report.to_json() << "\n";
    rows.emplace_back(name.empty() ? ckpt : name, report);
  }

  // side-by-side table
  std::ostringstream table;
  table << "checkpoint";
  for (const auto& m : metric_names) table << '\t' << m;
  table << '\n';
  for (const auto& [name, report] : rows) {
    table << name;
    for (const auto& m : metric_names) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", report.values.at(m));
      table << '\t' << buf;
    }
    table << '\n';
  }
  std::fputs(table.str().c_str(), stdout);
  std::ofstream ts((fs::path(out_dir) / "comparison.tsv").string());
  ts << table.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segfoley: segmentation-aware foley toolkit"};
  app.require_subcommand(1);

  // Every command: optional config file, flags override it.
  auto add_common = [](CLI::App* sub, std::string& config_file) {
    sub->add_option("--config", config_file, "JSON config file");
  };

  // synth
  auto* synth = app.add_subcommand("synth", "synthesize a toy dataset");
  std::string synth_config;
  add_common(synth, synth_config);
  std::string synth_out;
  int synth_train = 100, synth_val = 10, synth_test = 20, synth_classes = 4;
  double synth_duration = 2.0, synth_fps = 25.0, synth_coinc = 0.5;
  int synth_res = 64, synth_rate = 8000, synth_minobj = 2, synth_maxobj = 2,
      synth_solo = 2;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--train", synth_train);
  synth->add_option("--val", synth_val);
  synth->add_option("--test", synth_test);
  synth->add_option("--classes", synth_classes);
  synth->add_option("--duration", synth_duration);
  synth->add_option("--fps", synth_fps);
  synth->add_option("--resolution", synth_res);
  synth->add_option("--audio-rate", synth_rate);
  synth->add_option("--test-min-objects", synth_minobj);
  synth->add_option("--test-max-objects", synth_maxobj);
  synth->add_option("--test-coincident-fraction", synth_coinc);
  synth->add_option("--distractor-solo-flashes", synth_solo);
  synth->add_option("--seed", synth_seed);

  // curate
  auto* curate = app.add_subcommand("curate", "run the curation pipeline");
  std::string curate_config;
  add_common(curate, curate_config);
  std::string curate_out, curate_sources;
  int curate_demo = 0, curate_classes = 4, curate_topk = 5;
  double curate_conf = 0.2, curate_fps = 2.0, curate_clip = 5.0,
         curate_max_silent = -1.0;
  std::uint64_t curate_seed = 0;
  bool curate_stats = false;
  curate->add_option("--out", curate_out)->required();
  curate->add_option("--sources", curate_sources);
  curate->add_option("--demo", curate_demo, "synthesize N demo sources first");
  curate->add_option("--classes", curate_classes);
  curate->add_option("--top-k", curate_topk);
  curate->add_option("--confidence", curate_conf);
  curate->add_option("--sample-fps", curate_fps);
  curate->add_option("--clip-s", curate_clip);
  curate->add_option("--max-silent-fraction", curate_max_silent);
  curate->add_option("--seed", curate_seed);
  curate->add_flag("--stats", curate_stats, "print per-stage acceptance counts");

  // train
  auto* train = app.add_subcommand("train", "train a model");
  std::string train_config;
  add_common(train, train_config);
  std::string train_manifest, train_out, train_prompt = "saganet", train_base;
  int train_steps = 1200, train_batch = 4, train_val_every = 200,
      train_ckpt_every = 400, train_classes = 4, train_min_crop = 48;
  double train_lr = 1e-4, train_b1 = 0.9, train_b2 = 0.95, train_wd = 0.0;
  double train_tdrop = 0.5, train_adrop = 0.1;
  std::uint64_t train_seed = 0, train_init_seed = 1;
  bool train_lora = false;
  int train_lora_rank = 16;
  double train_lora_alpha = 32.0;
  int bb_patch_t = 2, bb_patch_hw = 32, bb_dim = 48, bb_layers = 2, bb_heads = 4,
      bb_in_frames = 50, bb_in_size = 64;
  int gen_latent_frames = 200, gen_time_patch = 2, gen_width = 128,
      gen_blocks = 4, gen_heads = 4;
  train->add_option("--manifest", train_manifest)->required();
  train->add_option("--out", train_out)->required();
  train->add_option("--visual-prompt", train_prompt)
      ->check(CLI::IsMember({"full", "full+mask", "focal", "focal+mask", "saganet"}));
  train->add_option("--steps", train_steps);
  train->add_option("--batch", train_batch);
  train->add_option("--lr", train_lr);
  train->add_option("--beta1", train_b1);
  train->add_option("--beta2", train_b2);
  train->add_option("--weight-decay", train_wd);
  train->add_option("--text-dropout", train_tdrop);
  train->add_option("--all-dropout", train_adrop);
  train->add_option("--seed", train_seed);
  train->add_option("--init-seed", train_init_seed);
  train->add_option("--val-every", train_val_every);
  train->add_option("--checkpoint-every", train_ckpt_every);
  train->add_option("--base", train_base, "base checkpoint (control training)");
  train->add_flag("--lora", train_lora);
  train->add_option("--lora-rank", train_lora_rank);
  train->add_option("--lora-alpha", train_lora_alpha);
  train->add_option("--min-crop", train_min_crop);
  train->add_option("--classes", train_classes);
  train->add_option("--bb-patch-t", bb_patch_t);
  train->add_option("--bb-patch-hw", bb_patch_hw);
  train->add_option("--bb-dim", bb_dim);
  train->add_option("--bb-layers", bb_layers);
  train->add_option("--bb-heads", bb_heads);
  train->add_option("--bb-input-frames", bb_in_frames);
  train->add_option("--bb-input-size", bb_in_size);
  train->add_option("--gen-latent-frames", gen_latent_frames);
  train->add_option("--gen-time-patch", gen_time_patch);
  train->add_option("--gen-width", gen_width);
  train->add_option("--gen-blocks", gen_blocks);
  train->add_option("--gen-heads", gen_heads);

  // generate
  auto* gen = app.add_subcommand("generate", "generate audio for a clip");
  std::string gen_config;
  add_common(gen, gen_config);
  std::string gen_ckpt, gen_manifest, gen_clip, gen_video, gen_mask, gen_out;
  int gen_text = -1, gen_steps = 25, gen_mask_index = -1, gen_rate = 8000;
  double gen_scale = -1.0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--checkpoint", gen_ckpt)->required();
  gen->add_option("--manifest", gen_manifest);
  gen->add_option("--clip-id", gen_clip);
  gen->add_option("--mask-index", gen_mask_index);
  gen->add_option("--video", gen_video);
  gen->add_option("--mask", gen_mask);
  gen->add_option("--text", gen_text, "class id, -1 for none");
  gen->add_option("--seed", gen_seed);
  gen->add_option("--steps", gen_steps);
  gen->add_option("--scale", gen_scale, "CFG scale; default 7.0 (4.5 for full)");
  gen->add_option("--audio-rate", gen_rate);
  gen->add_option("--out", gen_out)->required();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate checkpoints");
  std::string eval_config;
  add_common(eval, eval_config);
  std::vector<std::string> eval_ckpts;
  std::string eval_manifest, eval_out, eval_split = "test";
  int eval_samples = 5, eval_steps = 25, eval_min_crop = 48;
  double eval_scale = -1.0;
  std::uint64_t eval_seed = 0;
  bool eval_use_text = false;
  eval->add_option("--checkpoint", eval_ckpts)->required();
  eval->add_option("--manifest", eval_manifest)->required();
  eval->add_option("--out", eval_out)->required();
  eval->add_option("--split", eval_split);
  eval->add_option("--n-samples", eval_samples);
  eval->add_option("--steps", eval_steps);
  eval->add_option("--scale", eval_scale);
  eval->add_option("--seed", eval_seed);
  eval->add_flag("--use-text", eval_use_text);
  eval->add_option("--min-crop", eval_min_crop);

  try {
    app.parse(argc, argv);

    auto overrides_from = [](CLI::App* sub, auto&&... pairs) {
      json j = json::object();
      auto put = [&](const char* flag, const char* key, const auto& value) {
        if (sub->count(flag) > 0) j[key] = value;
      };
      (put(std::get<0>(pairs), std::get<1>(pairs), *std::get<2>(pairs)), ...);
      return j;
    };

    if (synth->parsed()) {
      RunConfig cfg(
          json{{"out", ""}, {"train", synth_train}, {"val", synth_val},
               {"test", synth_test}, {"classes", synth_classes},
               {"duration", synth_duration}, {"fps", synth_fps},
               {"resolution", synth_res}, {"audio_rate", synth_rate},
               {"test_min_objects", synth_minobj},
               {"test_max_objects", synth_maxobj},
               {"test_coincident_fraction", synth_coinc},
               {"distractor_solo_flashes", synth_solo}, {"seed", synth_seed}},
          {"out", "train", "val", "test", "classes", "duration", "fps",
           "resolution", "audio_rate", "test_min_objects", "test_max_objects",
           "test_coincident_fraction", "distractor_solo_flashes", "seed"});
      if (!synth_config.empty()) cfg.merge_file(synth_config);
      json ov = overrides_from(
          synth, std::tuple{"--train", "train", &synth_train},
          std::tuple{"--val", "val", &synth_val},
          std::tuple{"--test", "test", &synth_test},
          std::tuple{"--classes", "classes", &synth_classes},
          std::tuple{"--duration", "duration", &synth_duration},
          std::tuple{"--fps", "fps", &synth_fps},
          std::tuple{"--resolution", "resolution", &synth_res},
          std::tuple{"--audio-rate", "audio_rate", &synth_rate},
          std::tuple{"--test-min-objects", "test_min_objects", &synth_minobj},
          std::tuple{"--test-max-objects", "test_max_objects", &synth_maxobj},
          std::tuple{"--test-coincident-fraction", "test_coincident_fraction",
                     &synth_coinc},
          std::tuple{"--distractor-solo-flashes", "distractor_solo_flashes",
                     &synth_solo},
          std::tuple{"--seed", "seed", &synth_seed});
      ov["out"] = synth_out;
      cfg.merge_overrides(ov);
      return cmd_synth(cfg);
    }
    if (curate->parsed()) {
      RunConfig cfg(
          json{{"out", ""}, {"sources", curate_sources}, {"demo", curate_demo},
               {"classes", curate_classes}, {"top_k", curate_topk},
               {"confidence", curate_conf}, {"sample_fps", curate_fps},
               {"clip_s", curate_clip},
               {"max_silent_fraction", curate_max_silent}, {"seed", curate_seed}},
          {"out", "sources", "demo", "classes", "top_k", "confidence",
           "sample_fps", "clip_s", "max_silent_fraction", "seed"});
      if (!curate_config.empty()) cfg.merge_file(curate_config);
      json ov = overrides_from(
          curate, std::tuple{"--sources", "sources", &curate_sources},
          std::tuple{"--demo", "demo", &curate_demo},
          std::tuple{"--classes", "classes", &curate_classes},
          std::tuple{"--top-k", "top_k", &curate_topk},
          std::tuple{"--confidence", "confidence", &curate_conf},
          std::tuple{"--sample-fps", "sample_fps", &curate_fps},
          std::tuple{"--clip-s", "clip_s", &curate_clip},
          std::tuple{"--max-silent-fraction", "max_silent_fraction",
                     &curate_max_silent},
          std::tuple{"--seed", "seed", &curate_seed});
      ov["out"] = curate_out;
      cfg.merge_overrides(ov);
      return cmd_curate(cfg, curate_stats);
    }
    if (train->parsed()) {
      json defaults{{"manifest", ""}, {"out", ""}, {"visual_prompt", train_prompt},
                    {"steps", train_steps}, {"batch", train_batch},
                    {"lr", train_lr}, {"beta1", train_b1}, {"beta2", train_b2},
                    {"weight_decay", train_wd}, {"text_dropout", train_tdrop},
                    {"all_dropout", train_adrop}, {"seed", train_seed},
                    {"init_seed", train_init_seed}, {"val_every", train_val_every},
                    {"checkpoint_every", train_ckpt_every}, {"base", train_base},
                    {"lora", train_lora}, {"lora_rank", train_lora_rank},
                    {"lora_alpha", train_lora_alpha}, {"min_crop", train_min_crop},
                    {"classes", train_classes}, {"bb_patch_t", bb_patch_t},
                    {"bb_patch_hw", bb_patch_hw}, {"bb_dim", bb_dim},
                    {"bb_layers", bb_layers}, {"bb_heads", bb_heads},
                    {"bb_input_frames", bb_in_frames},
                    {"bb_input_size", bb_in_size},
                    {"gen_latent_frames", gen_latent_frames},
                    {"gen_time_patch", gen_time_patch}, {"gen_width", gen_width},
                    {"gen_blocks", gen_blocks}, {"gen_heads", gen_heads}};
      std::set<std::string> keys;
      for (const auto& [k, v] : defaults.items()) keys.insert(k);
      RunConfig cfg(defaults, keys);
      if (!train_config.empty()) cfg.merge_file(train_config);
      json ov = overrides_from(
          train, std::tuple{"--visual-prompt", "visual_prompt", &train_prompt},
          std::tuple{"--steps", "steps", &train_steps},
          std::tuple{"--batch", "batch", &train_batch},
          std::tuple{"--lr", "lr", &train_lr},
          std::tuple{"--beta1", "beta1", &train_b1},
          std::tuple{"--beta2", "beta2", &train_b2},
          std::tuple{"--weight-decay", "weight_decay", &train_wd},
          std::tuple{"--text-dropout", "text_dropout", &train_tdrop},
          std::tuple{"--all-dropout", "all_dropout", &train_adrop},
          std::tuple{"--seed", "seed", &train_seed},
          std::tuple{"--init-seed", "init_seed", &train_init_seed},
          std::tuple{"--val-every", "val_every", &train_val_every},
          std::tuple{"--checkpoint-every", "checkpoint_every", &train_ckpt_every},
          std::tuple{"--base", "base", &train_base},
          std::tuple{"--lora-rank", "lora_rank", &train_lora_rank},
          std::tuple{"--lora-alpha", "lora_alpha", &train_lora_alpha},
          std::tuple{"--min-crop", "min_crop", &train_min_crop},
          std::tuple{"--classes", "classes", &train_classes},
          std::tuple{"--bb-patch-t", "bb_patch_t", &bb_patch_t},
          std::tuple{"--bb-patch-hw", "bb_patch_hw", &bb_patch_hw},
          std::tuple{"--bb-dim", "bb_dim", &bb_dim},
          std::tuple{"--bb-layers", "bb_layers", &bb_layers},
          std::tuple{"--bb-heads", "bb_heads", &bb_heads},
          std::tuple{"--bb-input-frames", "bb_input_frames", &bb_in_frames},
          std::tuple{"--bb-input-size", "bb_input_size", &bb_in_size},
          std::tuple{"--gen-latent-frames", "gen_latent_frames", &gen_latent_frames},
          std::tuple{"--gen-time-patch", "gen_time_patch", &gen_time_patch},
          std::tuple{"--gen-width", "gen_width", &gen_width},
          std::tuple{"--gen-blocks", "gen_blocks", &gen_blocks},
          std::tuple{"--gen-heads", "gen_heads", &gen_heads});
      ov["manifest"] = train_manifest;
      ov["out"] = train_out;
      if (train->count("--lora")) ov["lora"] = train_lora;
      cfg.merge_overrides(ov);
      return cmd_train(cfg);
    }
    if (gen->parsed()) {
      RunConfig cfg(
          json{{"checkpoint", gen_ckpt}, {"manifest", gen_manifest},
               {"clip_id", gen_clip}, {"mask_index", gen_mask_index},
               {"video", gen_video}, {"mask", gen_mask}, {"text", gen_text},
               {"seed", gen_seed}, {"steps", gen_steps}, {"scale", gen_scale},
               {"audio_rate", gen_rate}, {"out", gen_out}},
          {"checkpoint", "manifest", "clip_id", "mask_index", "video", "mask",
           "text", "seed", "steps", "scale", "audio_rate", "out"});
      if (!gen_config.empty()) cfg.merge_file(gen_config);
      return cmd_generate(cfg);
    }
    if (eval->parsed()) {
      RunConfig cfg(
          json{{"manifest", eval_manifest}, {"out", eval_out},
               {"split", eval_split}, {"n_samples", eval_samples},
               {"steps", eval_steps}, {"scale", eval_scale}, {"seed", eval_seed},
               {"use_text", eval_use_text}, {"min_crop", eval_min_crop}},
          {"manifest", "out", "split", "n_samples", "steps", "scale", "seed",
           "use_text", "min_crop"});
      if (!eval_config.empty()) cfg.merge_file(eval_config);
      return cmd_eval(cfg, eval_ckpts);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return 4;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
