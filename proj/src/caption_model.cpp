// src/caption_model.cpp
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

#include "aac/caption_model.h"

#include <fstream>
#include <sstream>

#include "aac/checkpoint.h"
#include "aac/error.h"
#include "aac/feature_io.h"
#include "json.hpp"

namespace aac {

EncoderConfig ModelConfig::encoder_config() const {
  return {encoder_preset(preset), annotation_size};
}

DecoderConfig ModelConfig::decoder_config() const {
  DecoderConfig d;
  d.hidden_size = hidden_size;
  d.embed_size = embed_size;
  d.attention_size = attention_size;
  d.vocab_size = vocab_size;
  d.annotation_size = annotation_size;
  return d;
}

std::string ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["encoder"] = {{"preset", preset}, {"annotation_size", annotation_size}};
  j["decoder"] = {{"hidden_size", hidden_size},
                  {"embed_size", embed_size},
                  {"attention_size", attention_size},
                  {"vocab_size", vocab_size}};
  j["features"] = nlohmann::ordered_json::parse(gammatone_config_json(features));
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ModelConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& e = j.at("encoder");
    c.preset = e.at("preset").get<std::string>();
    c.annotation_size = e.at("annotation_size").get<std::size_t>();
    const auto& d = j.at("decoder");
    c.hidden_size = d.at("hidden_size").get<std::size_t>();
    c.embed_size = d.at("embed_size").get<std::size_t>();
    c.attention_size = d.at("attention_size").get<std::size_t>();
    c.vocab_size = d.at("vocab_size").get<std::size_t>();
    c.features = gammatone_config_from_json(j.at("features").dump());
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& ex) {
    throw JsonError(std::string("model config: ") + ex.what());
  }
  return c;
}

void ModelConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_json();
}

ModelConfig ModelConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("missing model config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

template <typename T>
CaptionModel<T>::CaptionModel(const ModelConfig& config)
    : config_(config),
      rng_(config.seed),
      encoder_(config.encoder_config(), rng_),
      decoder_(config.decoder_config(), rng_) {}

template <typename T>
NamedTensors<T> CaptionModel<T>::parameters() {
  auto p = encoder_.parameters();
  for (auto& d : decoder_.parameters()) p.push_back(d);
  return p;
}

template <typename T>
NamedTensors<T> CaptionModel<T>::buffers() {
  return encoder_.buffers();
}

template <typename T>
NamedTensors<T> CaptionModel<T>::state() {
  auto s = parameters();
  for (auto& b : buffers()) s.push_back(b);
  return s;
}

void save_model_state(const std::filesystem::path& path, CaptionModel<float>& model) {
  save_checkpoint(path, model.state());
}

void load_model_state(const std::filesystem::path& path, CaptionModel<float>& model) {
  auto into = model.state();
  assign_by_name(load_checkpoint(path), into);
}

Tokens caption_features(CaptionModel<float>& model, const FeatureMap& features,
                        const Vocabulary& vocab, const CaptionOptions& opt) {
  if (vocab.size() != model.config().vocab_size)
    throw InputError("vocabulary has " + std::to_string(vocab.size()) + " entries, model expects " +
                     std::to_string(model.config().vocab_size));
  Tensor<float> annotations;
  {
    NoGradScope<float> no_grad;
    annotations = model.encoder().encode(features, false).vectors;
  }
  DecoderStepModel<float> step(model.decoder(), annotations);
  const DecodeTokens tokens{Vocabulary::kSos, Vocabulary::kEos, {Vocabulary::kPad, Vocabulary::kSos}};
  const auto best = opt.greedy ? greedy_decode(step, opt.beam.max_len, tokens).best
                               : beam_decode(step, opt.beam, tokens).best;
  return vocab.decode(best);
}

template class CaptionModel<float>;
template class CaptionModel<double>;

}  // namespace aac
