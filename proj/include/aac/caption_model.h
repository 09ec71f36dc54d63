// include/aac/caption_model.h
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
#include <string>
#include <vector>

#include "aac/attention_decoder.h"
#include "aac/beam_search.h"
#include "aac/corpus.h"
#include "aac/gammatone.h"
#include "aac/residual_encoder.h"

namespace aac {

// Everything needed to rebuild a model and its front end; persisted as model.json.
struct ModelConfig {
  std::string preset = "nano50";
  std::size_t annotation_size = 256;
  std::size_t hidden_size = 256;
  std::size_t embed_size = 128;
  std::size_t attention_size = 128;
  std::size_t vocab_size = 0;
  std::uint64_t seed = 0;
  GammatoneConfig features;

  EncoderConfig encoder_config() const;
  DecoderConfig decoder_config() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);  // JsonError
  void save(const std::filesystem::path& path) const;
  static ModelConfig load(const std::filesystem::path& path);
};

template <typename T>
class CaptionModel {
 public:
  explicit CaptionModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  ResidualEncoder<T>& encoder() { return encoder_; }
  const AttentionDecoder<T>& decoder() const { return decoder_; }
  AttentionDecoder<T>& decoder() { return decoder_; }

  NamedTensors<T> parameters();
  NamedTensors<T> buffers();
  NamedTensors<T> state();  // parameters then buffers

 private:
  ModelConfig config_;
  init::Rng rng_;
  ResidualEncoder<T> encoder_;
  AttentionDecoder<T> decoder_;
};

void save_model_state(const std::filesystem::path& path, CaptionModel<float>& model);
void load_model_state(const std::filesystem::path& path, CaptionModel<float>& model);

struct CaptionOptions {
  BeamConfig beam;
  bool greedy = false;
};

// Eval-mode encode of one clip followed by beam or greedy decoding.
Tokens caption_features(CaptionModel<float>& model, const FeatureMap& features,
                        const Vocabulary& vocab, const CaptionOptions& opt);

extern template class CaptionModel<float>;
extern template class CaptionModel<double>;

}  // namespace aac
