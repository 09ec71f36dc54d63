// src/training.cpp
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

#include "aac/training.h"

#include <chrono>
#include <cmath>
#include <fstream>

#include "aac/error.h"
#include "aac/ops.h"
#include "json.hpp"

namespace aac {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be > 0");
}

template <typename T>
Tensor<T> masked_cross_entropy(const Tensor<T>& log_probs, std::span<const std::int32_t> targets,
                               std::int32_t pad) {
  if (log_probs.rank() != 2 || log_probs.dim(0) != targets.size())
    throw ShapeError("masked_cross_entropy: log_probs " + shape_str(log_probs.shape()) + " vs " +
                     std::to_string(targets.size()) + " targets");
  const std::size_t v = log_probs.dim(1);
  std::vector<std::size_t> picks;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (targets[t] == pad) continue;
    if (targets[t] < 0 || static_cast<std::size_t>(targets[t]) >= v)
      throw InputError("target index " + std::to_string(targets[t]) + " outside vocabulary");
    picks.push_back(t * v + static_cast<std::size_t>(targets[t]));
  }
  if (picks.empty()) throw InputError("masked_cross_entropy: every target is padding");
  return ops::scale(ops::sum(ops::gather(log_probs, picks)),
                    static_cast<T>(-1.0 / static_cast<double>(picks.size())));
}

template <typename T>
double global_grad_norm(const NamedTensors<T>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (T g : p.tensor.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(sq);
}

template <typename T>
double clip_gradients(const NamedTensors<T>& params, double threshold) {
  const double g = global_grad_norm(params);
  if (g > threshold) {
    const double s = threshold / g;
    for (const auto& p : params) {
      if (!p.tensor.has_grad()) continue;
      for (T& x : p.tensor.grad()) x = static_cast<T>(static_cast<double>(x) * s);
    }
  }
  return g;
}

template <typename T>
void adam_step(const NamedTensors<T>& params, AdamState<T>& state, const TrainConfig& cfg) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.tensor.size(), 0.0);
      state.v.emplace_back(p.tensor.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("Adam state does not match parameters");
  ++state.t;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i].tensor;
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != p.size()) throw ShapeError("Adam state shape mismatch for " + params[i].name);
    auto theta = p.storage()->data.data();
    const auto grad = p.grad();
    for (std::size_t k = 0; k < m.size(); ++k) {
      const double g = grad[k];
      m[k] = b1 * m[k] + (1.0 - b1) * g;
      v[k] = b2 * v[k] + (1.0 - b2) * g * g;
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      theta[k] = static_cast<T>(static_cast<double>(theta[k]) -
                                cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps));
    }
  }
}

template <typename T>
Tensor<T> batch_loss(CaptionModel<T>& model, const Batch<T>& batch, bool training) {
  const auto annotations = model.encoder().encode_batch(batch.features, training);
  std::vector<Tensor<T>> rows;
  std::vector<std::int32_t> next;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto target = batch.target(b);
    rows.push_back(model.decoder().decode_teacher_forced(annotations[b].vectors, target));
    next.insert(next.end(), target.begin() + 1, target.end());
  }
  return masked_cross_entropy(ops::concat(rows, 0), next);
}

std::string EpochLog::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["loss"] = loss;
  j["grad_norm_mean"] = grad_norm_mean;
  j["grad_norm_max"] = grad_norm_max;
  j["clipped_norm_max"] = clipped_norm_max;
  j["val_bleu"] = validation.bleu;
  j["val_rouge_l"] = validation.rouge_l;
  j["val_meteor_lite"] = validation.meteor_lite;
  j["val_cider"] = validation.cider;
  j["val_spider_lite"] = validation.spider_lite;
  j["best"] = best;
  j["wall_s"] = wall_s;
  return j.dump();
}

std::vector<Tokens> greedy_captions(CaptionModel<float>& model, const TrainData& data,
                                    const Vocabulary& vocab, std::size_t max_len) {
  CaptionOptions opt;
  opt.greedy = true;
  opt.beam.max_len = max_len;
  std::vector<Tokens> out;
  for (const auto& f : data.features) out.push_back(caption_features(model, f, vocab, opt));
  return out;
}

ScoreReport validate(CaptionModel<float>& model, const TrainData& data, const Vocabulary& vocab,
                     std::size_t max_len) {
  const auto captions = greedy_captions(model, data, vocab, max_len);
  std::vector<EvalPair> pairs;
  for (std::size_t i = 0; i < captions.size(); ++i)
    pairs.push_back({captions[i], data.clips[i].captions});
  return evaluate_corpus(pairs);
}

namespace {

std::string batch_label(std::size_t epoch, std::size_t index, const Batch<float>& batch,
                        const TrainData& data) {
  std::string s = "epoch " + std::to_string(epoch) + " batch " + std::to_string(index) + " (";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (i) s += ", ";
    s += data.clips[batch.examples[i].clip].clip_id;
  }
  return s + ")";
}

}  // namespace

TrainResult train(CaptionModel<float>& model, const Vocabulary& vocab, const TrainData& train_set,
                  const TrainData& val_set, const TrainOptions& opt) {
  const auto& cfg = opt.config;
  cfg.validate();
  if (train_set.clips.empty()) throw InputError("empty training set");
  if (val_set.clips.empty()) throw InputError("empty validation set");

  std::ofstream log_file;
  if (!opt.out_dir.empty()) {
    std::filesystem::create_directories(opt.out_dir);
    log_file.open(opt.out_dir / "train_log.jsonl", std::ios::binary | std::ios::trunc);
    if (!log_file) throw InputError("cannot write " + (opt.out_dir / "train_log.jsonl").string());
  }

  auto params = model.parameters();
  for (auto& p : params) p.tensor.set_requires_grad();
  AdamState<float> adam;
  TrainResult result;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto batches = make_batches<float>(train_set.clips, train_set.features, vocab,
                                             cfg.batch_size, cfg.seed + epoch);
    EpochLog entry;
    entry.epoch = epoch;
    double loss_sum = 0.0, norm_sum = 0.0;
    std::size_t tokens = 0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& batch = batches[bi];
      for (auto& p : params) p.tensor.zero_grad();
      double loss_value = 0.0;
      try {
        GradTape<float> tape;
        TapeScope<float> scope(tape);
        const auto loss = batch_loss(model, batch, true);
        loss_value = loss.item();
        tape.backward(loss);
      } catch (const NumericError& e) {
        throw NumericError(batch_label(epoch, bi, batch, train_set) + ": " + e.what());
      }
      const double g = clip_gradients(params, cfg.clip_norm);
      if (!std::isfinite(g))
        throw NumericError(batch_label(epoch, bi, batch, train_set) + ": non-finite gradient norm");
      const double post = global_grad_norm(params);
      adam_step(params, adam, cfg);

      std::size_t n = 0;
      for (std::size_t b = 0; b < batch.size(); ++b) n += batch.target_lengths[b] - 1;
      loss_sum += loss_value * static_cast<double>(n);
      tokens += n;
      norm_sum += g;
      entry.grad_norm_max = std::max(entry.grad_norm_max, g);
      entry.clipped_norm_max = std::max(entry.clipped_norm_max, post);
    }
    entry.loss = loss_sum / static_cast<double>(tokens);
    entry.grad_norm_mean = norm_sum / static_cast<double>(batches.size());
    entry.validation = validate(model, val_set, vocab, opt.val_max_len);

    if (result.best_epoch == 0 || entry.validation.spider_lite > result.best_spider_lite) {
      entry.best = true;
      result.best_epoch = epoch;
      result.best_spider_lite = entry.validation.spider_lite;
    }
    if (!opt.out_dir.empty()) {
      save_model_state(opt.out_dir / "last.tens", model);
      if (entry.best) save_model_state(opt.out_dir / "best.tens", model);
    }
    entry.wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (log_file.is_open()) log_file << entry.to_json() << "\n" << std::flush;
    if (opt.on_epoch) opt.on_epoch(entry);
    result.log.push_back(std::move(entry));
  }
  return result;
}

template Tensor<float> masked_cross_entropy(const Tensor<float>&, std::span<const std::int32_t>,
                                            std::int32_t);
template Tensor<double> masked_cross_entropy(const Tensor<double>&,
                                             std::span<const std::int32_t>, std::int32_t);
template double global_grad_norm(const NamedTensors<float>&);
template double global_grad_norm(const NamedTensors<double>&);
template double clip_gradients(const NamedTensors<float>&, double);
template double clip_gradients(const NamedTensors<double>&, double);
template void adam_step(const NamedTensors<float>&, AdamState<float>&, const TrainConfig&);
template void adam_step(const NamedTensors<double>&, AdamState<double>&, const TrainConfig&);
template Tensor<float> batch_loss(CaptionModel<float>&, const Batch<float>&, bool);
template Tensor<double> batch_loss(CaptionModel<double>&, const Batch<double>&, bool);

}  // namespace aac
