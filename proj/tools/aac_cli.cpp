// tools/aac_cli.cpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: featurize | train | caption | evaluate | toygen.
//
// Exit codes:
//   0  success
//   1  usage or configuration error
//   2  missing or corrupt input file
//   3  malformed JSON
//   4  non-finite values during training

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "aac/error.h"
#include "aac/pipeline.h"
#include "aac/wav.h"

namespace {

enum Exit { kOk = 0, kUsage = 1, kFile = 2, kJson = 3, kNumeric = 4 };

struct FeatureFlags {
  aac::GammatoneConfig cfg;
  void add(CLI::App* app) {
    app->add_option("--bands", cfg.num_bands, "Gammatone bands")->capture_default_str();
    app->add_option("--f-min", cfg.f_min, "Lowest center frequency (Hz)")->capture_default_str();
    app->add_option("--f-max", cfg.f_max, "Highest center frequency (Hz), 0 = Nyquist")
        ->capture_default_str();
    app->add_option("--filter-order", cfg.filter_order, "Gammatone filter order")
        ->capture_default_str();
    app->add_option("--window-ms", cfg.window_ms, "Analysis window (ms)")->capture_default_str();
    app->add_option("--hop-fraction", cfg.hop_fraction, "Hop as a fraction of the window")
        ->capture_default_str();
    app->add_option("--log-floor", cfg.log_floor, "Energy floor before the log")
        ->capture_default_str();
    app->add_option("--sample-rate", cfg.sample_rate, "Required clip rate, 0 = any")
        ->capture_default_str();
  }
  // Flags given on the command line win over the config file.
  aac::GammatoneConfig merge(CLI::App* app, aac::GammatoneConfig base) const {
    if (app->count("--bands")) base.num_bands = cfg.num_bands;
    if (app->count("--f-min")) base.f_min = cfg.f_min;
    if (app->count("--f-max")) base.f_max = cfg.f_max;
    if (app->count("--filter-order")) base.filter_order = cfg.filter_order;
    if (app->count("--window-ms")) base.window_ms = cfg.window_ms;
    if (app->count("--hop-fraction")) base.hop_fraction = cfg.hop_fraction;
    if (app->count("--log-floor")) base.log_floor = cfg.log_floor;
    if (app->count("--sample-rate")) base.sample_rate = cfg.sample_rate;
    return base;
  }
};

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw aac::InputError("cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio captioning pipeline"};
  app.require_subcommand(1, 1);
  app.get_formatter()->column_width(36);

  // featurize
  auto* feat = app.add_subcommand("featurize", "Compute gammatone features for every clip");
  std::string feat_manifest, feat_audio, feat_out, feat_config;
  std::size_t jobs = 1;
  FeatureFlags feat_flags;
  feat->add_option("--manifest", feat_manifest, "Manifest CSV")->required();
  feat->add_option("--audio-dir", feat_audio, "Directory holding the WAV files")->required();
  feat->add_option("--out-dir", feat_out, "Feature output directory")->required();
  feat->add_option("--config", feat_config, "JSON run config (features section is used)");
  feat->add_option("--jobs", jobs, "Worker threads")->capture_default_str()->check(
      CLI::PositiveNumber);
  feat_flags.add(feat);

  // train
  auto* tr = app.add_subcommand("train", "Train a captioning model");
  std::string tr_manifest, tr_features, tr_val_manifest, tr_val_features, tr_out, tr_config;
  std::string recipe = "default";
  aac::RunConfig tr_cfg;
  FeatureFlags tr_flags;
  tr->add_option("--manifest", tr_manifest, "Training manifest CSV")->required();
  tr->add_option("--features-dir", tr_features, "Features of the training clips")->required();
  tr->add_option("--val-manifest", tr_val_manifest,
                 "Validation manifest (default: the training manifest)");
  tr->add_option("--val-features-dir", tr_val_features,
                 "Features of the validation clips (default: --features-dir)");
  tr->add_option("--out-dir", tr_out, "Model directory")->required();
  tr->add_option("--config", tr_config, "JSON run config");
  tr->add_option("--recipe", recipe, "Base settings: default, or toy (200 epochs, lr 1e-3)")
      ->capture_default_str()
      ->check(CLI::IsMember({"default", "toy"}));
  tr->add_option("--preset", tr_cfg.model.preset, "Encoder preset")
      ->capture_default_str()
      ->check(CLI::IsMember(aac::encoder_preset_names()));
  tr->add_option("--annotation-size", tr_cfg.model.annotation_size, "Annotation vector size")
      ->capture_default_str();
  tr->add_option("--hidden-size", tr_cfg.model.hidden_size, "LSTM hidden size")
      ->capture_default_str();
  tr->add_option("--embed-size", tr_cfg.model.embed_size, "Word embedding size")
      ->capture_default_str();
  tr->add_option("--attention-size", tr_cfg.model.attention_size, "Attention size")
      ->capture_default_str();
  tr->add_option("--lr", tr_cfg.train.lr, "Adam learning rate")->capture_default_str();
  tr->add_option("--batch-size", tr_cfg.train.batch_size, "Examples per batch")
      ->capture_default_str();
  tr->add_option("--epochs", tr_cfg.train.epochs, "Training epochs")->capture_default_str();
  tr->add_option("--clip-norm", tr_cfg.train.clip_norm, "Global gradient-norm threshold")
      ->capture_default_str();
  tr->add_option("--adam-beta1", tr_cfg.train.adam_beta1, "Adam beta1")->capture_default_str();
  tr->add_option("--adam-beta2", tr_cfg.train.adam_beta2, "Adam beta2")->capture_default_str();
  tr->add_option("--adam-eps", tr_cfg.train.adam_eps, "Adam epsilon")->capture_default_str();
  tr->add_option("--val-max-len", tr_cfg.val_max_len, "Greedy validation length limit")
      ->capture_default_str();
  std::uint64_t seed = 0;
  tr->add_option("--seed", seed, "Seed for initialization and shuffling")->capture_default_str();
  tr_flags.add(tr);
  bool quiet = false;
  tr->add_flag("--quiet", quiet, "No per-epoch progress on stderr");

  // caption
  auto* cap = app.add_subcommand("caption", "Caption clips with a trained model");
  std::string cap_manifest, cap_features, cap_model, cap_ckpt, cap_out;
  aac::CaptionOptions cap_opt;
  cap->add_option("--manifest", cap_manifest, "Manifest CSV naming the clips")->required();
  cap->add_option("--features-dir", cap_features, "Feature directory")->required();
  cap->add_option("--model-dir", cap_model, "Directory written by train")->required();
  cap->add_option("--checkpoint", cap_ckpt, "Weights (default: <model-dir>/best.tens)");
  cap->add_option("--out", cap_out, "Output JSON lines (default: stdout)");
  cap->add_option("--beam-width", cap_opt.beam.width, "Beam width")->capture_default_str();
  cap->add_option("--max-len", cap_opt.beam.max_len, "Length limit including <sos> and <eos>")
      ->capture_default_str();
  cap->add_flag("--length-normalize", cap_opt.beam.length_normalize,
                "Rank finished hypotheses by mean log-probability");
  cap->add_flag("--greedy", cap_opt.greedy, "Greedy decoding instead of beam search");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score captions against manifest references");
  std::string ev_captions, ev_manifest, ev_out, ev_csv;
  ev->add_option("--captions", ev_captions, "Caption JSON lines")->required();
  ev->add_option("--manifest", ev_manifest, "Manifest CSV with reference captions")->required();
  ev->add_option("--out", ev_out, "Report JSON (default: stdout)");
  ev->add_option("--csv", ev_csv, "Also write the corpus scores as CSV");

  // toygen
  auto* toy = app.add_subcommand("toygen", "Write a synthetic toy dataset");
  std::string toy_out;
  std::size_t toy_clips = 10;
  std::uint64_t toy_seed = 7;
  toy->add_option("--out-dir", toy_out, "Dataset directory")->required();
  toy->add_option("--num-clips", toy_clips, "Number of clips")->capture_default_str();
  toy->add_option("--seed", toy_seed, "Generator seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*feat) {
      aac::FeaturizeOptions opt;
      opt.manifest = feat_manifest;
      opt.audio_dir = feat_audio;
      opt.out_dir = feat_out;
      opt.jobs = jobs;
      aac::RunConfig base;
      if (!feat_config.empty()) base = aac::RunConfig::load(feat_config, base);
      opt.features = feat_flags.merge(feat, base.features);
      const auto report = aac::featurize(opt);
      for (const auto& f : report.failures)
        std::cerr << "error: " << f.path.string() << ": " << f.message << "\n";
      std::cerr << "featurize: " << report.written << " written, " << report.skipped
                << " unchanged, " << report.failures.size() << " failed\n";
      return report.failures.empty() ? kOk : kFile;
    }

    if (*tr) {
      aac::RunConfig cfg = recipe == "toy" ? aac::toy_recipe() : aac::RunConfig{};
      if (!tr_config.empty()) cfg = aac::RunConfig::load(tr_config, cfg);
      cfg.features = tr_flags.merge(tr, cfg.features);
      if (tr->count("--preset")) cfg.model.preset = tr_cfg.model.preset;
      if (tr->count("--annotation-size")) cfg.model.annotation_size = tr_cfg.model.annotation_size;
      if (tr->count("--hidden-size")) cfg.model.hidden_size = tr_cfg.model.hidden_size;
      if (tr->count("--embed-size")) cfg.model.embed_size = tr_cfg.model.embed_size;
      if (tr->count("--attention-size")) cfg.model.attention_size = tr_cfg.model.attention_size;
      if (tr->count("--lr")) cfg.train.lr = tr_cfg.train.lr;
      if (tr->count("--batch-size")) cfg.train.batch_size = tr_cfg.train.batch_size;
      if (tr->count("--epochs")) cfg.train.epochs = tr_cfg.train.epochs;
      if (tr->count("--clip-norm")) cfg.train.clip_norm = tr_cfg.train.clip_norm;
      if (tr->count("--adam-beta1")) cfg.train.adam_beta1 = tr_cfg.train.adam_beta1;
      if (tr->count("--adam-beta2")) cfg.train.adam_beta2 = tr_cfg.train.adam_beta2;
      if (tr->count("--adam-eps")) cfg.train.adam_eps = tr_cfg.train.adam_eps;
      if (tr->count("--val-max-len")) cfg.val_max_len = tr_cfg.val_max_len;
      if (tr->count("--seed")) cfg.model.seed = cfg.train.seed = seed;

      aac::TrainRunOptions opt;
      opt.manifest = tr_manifest;
      opt.features_dir = tr_features;
      opt.val_manifest = tr_val_manifest;
      opt.val_features_dir = tr_val_features;
      opt.out_dir = tr_out;
      opt.config = cfg;
      if (!quiet)
        opt.on_epoch = [](const aac::EpochLog& e) {
          std::fprintf(stderr, "epoch %zu loss %.5f grad %.3f spider-lite %.4f%s\n", e.epoch,
                       e.loss, e.grad_norm_max, e.validation.spider_lite, e.best ? " *" : "");
        };
      const auto result = aac::train_run(opt);
      std::fprintf(stderr, "best epoch %zu, validation SPIDEr-lite %.4f\n", result.best_epoch,
                   result.best_spider_lite);
      return kOk;
    }

    if (*cap) {
      aac::CaptionRunOptions opt{cap_manifest, cap_features, cap_model, cap_ckpt, cap_opt};
      const auto lines = aac::caption_run(opt);
      std::ostringstream ss;
      aac::write_captions_jsonl(ss, lines);
      write_output(cap_out, ss.str());
      return kOk;
    }

    if (*ev) {
      const auto result = aac::evaluate_run(ev_captions, ev_manifest);
      write_output(ev_out, aac::report_json(result));
      if (!ev_csv.empty()) write_output(ev_csv, aac::report_csv(result.report));
      return kOk;
    }

    if (*toy) {
      const auto clips = aac::generate_toy_corpus(toy_clips, toy_seed);
      aac::write_toy_dataset(toy_out, clips);
      std::cerr << "toygen: " << clips.size() << " clips in " << toy_out << "\n";
      return kOk;
    }
  } catch (const aac::JsonError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kJson;
  } catch (const aac::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const aac::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFile;
  } catch (const aac::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFile;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFile;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
