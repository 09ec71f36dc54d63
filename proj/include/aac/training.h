// include/aac/training.h
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
#include <span>
#include <string>
#include <vector>

#include "aac/caption_metrics.h"
#include "aac/caption_model.h"
#include "aac/corpus.h"
#include "aac/tensor.h"

namespace aac {

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch_size = 16;
  std::size_t epochs = 300;
  double clip_norm = 2.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;  // ConfigError
};

// Mean of -log_probs[t, targets[t]] over positions whose target is not `pad`.
// log_probs is [T, V]; targets has T entries.
template <typename T>
Tensor<T> masked_cross_entropy(const Tensor<T>& log_probs, std::span<const std::int32_t> targets,
                               std::int32_t pad = Vocabulary::kPad);

// Global 2-norm over every parameter gradient.
template <typename T>
double global_grad_norm(const NamedTensors<T>& params);

// Rescales all gradients by threshold / g when the global norm g exceeds
// the threshold. Returns g.
template <typename T>
double clip_gradients(const NamedTensors<T>& params, double threshold);

template <typename T>
struct AdamState {
  std::vector<std::vector<double>> m, v;
  std::uint64_t t = 0;
};

// One bias-corrected Adam update from the gradients currently stored on
// `params`. Moments are kept in double regardless of T.
template <typename T>
void adam_step(const NamedTensors<T>& params, AdamState<T>& state, const TrainConfig& cfg);

// Teacher-forced loss of a batch: summed target NLL over all non-pad
// positions divided by their count. The encoder runs in training mode when
// `training` is set (batch statistics, running-stat updates).
template <typename T>
Tensor<T> batch_loss(CaptionModel<T>& model, const Batch<T>& batch, bool training);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // token-weighted mean over the epoch
  double grad_norm_mean = 0.0;
  double grad_norm_max = 0.0;       // pre-clip
  double clipped_norm_max = 0.0;    // post-clip
  ScoreReport validation;
  bool best = false;
  double wall_s = 0.0;

  std::string to_json() const;  // single line
};

struct TrainData {
  std::vector<CaptionedClip> clips;
  std::vector<FeatureMap> features;  // parallel to clips
};

struct TrainOptions {
  TrainConfig config;
  std::size_t val_max_len = 22;
  // When set: train_log.jsonl, last.tens every epoch, best.tens on improvement.
  std::filesystem::path out_dir;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_spider_lite = 0.0;
};

// Greedy captions of every clip in eval mode.
std::vector<Tokens> greedy_captions(CaptionModel<float>& model, const TrainData& data,
                                    const Vocabulary& vocab, std::size_t max_len);

// Scores greedy captions against each clip's references.
ScoreReport validate(CaptionModel<float>& model, const TrainData& data, const Vocabulary& vocab,
                     std::size_t max_len);

// Non-finite values abort with a NumericError naming the epoch and batch.
TrainResult train(CaptionModel<float>& model, const Vocabulary& vocab, const TrainData& train_set,
                  const TrainData& val_set, const TrainOptions& opt);

}  // namespace aac
