// include/aac/pipeline.h
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "aac/caption_metrics.h"
#include "aac/caption_model.h"
#include "aac/training.h"

namespace aac {

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
// FNV-1a 64-bit; `seed` chains a previous hash.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = kFnvOffset);
std::string fnv1a_hex(std::string_view bytes, std::uint64_t seed = kFnvOffset);

struct FeaturizeOptions {
  std::filesystem::path manifest;
  std::filesystem::path audio_dir;
  std::filesystem::path out_dir;
  GammatoneConfig features;
  std::size_t jobs = 1;
};

struct FeaturizeFailure {
  std::filesystem::path path;
  std::string message;
};

struct FeaturizeReport {
  std::size_t written = 0;
  std::size_t skipped = 0;  // source and config unchanged since the last run
  std::vector<FeaturizeFailure> failures;  // manifest order
};

// One <out_dir>/<clip_id>.gtfm (+ .json sidecar) per manifest entry. Files
// whose WAV bytes and feature config hash to the stored value are skipped.
FeaturizeReport featurize(const FeaturizeOptions& opt);

std::vector<FeatureMap> load_features(const std::vector<CaptionedClip>& clips,
                                      const std::filesystem::path& features_dir);

// Feature, model and optimizer settings in one JSON document:
//   {"features": {...}, "model": {...}, "train": {...}, "val_max_len": n}
// Every section and field is optional; absent values keep their defaults.
struct RunConfig {
  GammatoneConfig features;
  ModelConfig model;  // vocab_size is filled in by train_run
  TrainConfig train;
  std::size_t val_max_len = 22;

  std::string to_json() const;
  // Values in `text` override `base`; JsonError on malformed or unknown keys.
  static RunConfig from_json(const std::string& text, const RunConfig& base);
  static RunConfig from_json(const std::string& text);
  static RunConfig load(const std::filesystem::path& path, const RunConfig& base);
};

// Settings for the synthetic toy corpus: 200 epochs at lr 1e-3.
RunConfig toy_recipe();

struct TrainRunOptions {
  std::filesystem::path manifest;
  std::filesystem::path features_dir;
  std::filesystem::path val_manifest;      // empty: validate on the training set
  std::filesystem::path val_features_dir;  // empty: same as features_dir
  std::filesystem::path out_dir;
  RunConfig config;
  std::function<void(const EpochLog&)> on_epoch;
};

// Writes vocab.json, model.json, train_log.jsonl, last.tens and best.tens.
TrainResult train_run(const TrainRunOptions& opt);

struct LoadedModel {
  Vocabulary vocab;
  CaptionModel<float> model;
};

// model.json + vocab.json from `model_dir`; weights from `checkpoint`
// (default <model_dir>/best.tens).
LoadedModel load_trained_model(const std::filesystem::path& model_dir,
                               const std::filesystem::path& checkpoint = {});

struct CaptionLine {
  std::string id;
  std::string caption;
};

struct CaptionRunOptions {
  std::filesystem::path manifest;
  std::filesystem::path features_dir;
  std::filesystem::path model_dir;
  std::filesystem::path checkpoint;
  CaptionOptions decode;
};

std::vector<CaptionLine> caption_run(const CaptionRunOptions& opt);

// {"id": ..., "caption": ...} per line.
void write_captions_jsonl(std::ostream& out, const std::vector<CaptionLine>& lines);
std::vector<CaptionLine> read_captions_jsonl(const std::filesystem::path& path);

struct EvaluateResult {
  std::vector<std::string> ids;  // manifest order
  ScoreReport report;            // per_pair filled
};

// Candidates are matched to manifest entries by clip id; a manifest clip
// without a candidate is an input error.
EvaluateResult evaluate_run(const std::filesystem::path& captions,
                            const std::filesystem::path& manifest);

std::string report_json(const EvaluateResult& r);
// Header plus one corpus row in column order
// BLEU1..4, ROUGE-L, METEOR-lite, CIDEr, SPIDEr-lite.
std::string report_csv(const ScoreReport& r);

}  // namespace aac
