// include/aac/residual_encoder.h
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

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aac/gammatone.h"
#include "aac/init.h"
#include "aac/tensor.h"

namespace aac {

enum class BlockKind { basic, bottleneck };

struct ResidualBlockSpec {
  BlockKind kind = BlockKind::bottleneck;
  std::size_t channels_in = 0;
  std::size_t channels_mid = 0;
  std::size_t channels_out = 0;
  std::size_t stride = 1;
  bool projection_shortcut = false;

  // projection_shortcut is mandatory when the shapes of x and F(x) differ.
  void validate() const;
};

struct EncoderPreset {
  std::string name;
  std::array<std::size_t, 4> stage_block_counts{};
  double width_multiplier = 1.0;
  std::size_t base_channels = 16;

  std::size_t stage_mid_channels(std::size_t stage) const;
  std::size_t stage_out_channels(std::size_t stage) const { return 4 * stage_mid_channels(stage); }
};

// nano50 / nano101 / nano152 / nanoWide101. Throws ConfigError for other names.
EncoderPreset encoder_preset(std::string_view name);
std::vector<std::string> encoder_preset_names();

struct EncoderConfig {
  EncoderPreset preset = encoder_preset("nano50");
  std::size_t annotation_size = 256;
};

// Encoder output: one d-dimensional vector per cell of the final h x w grid,
// flattened row-major (frequency-major) into L = h*w rows.
template <typename T>
struct AnnotationSequence {
  Tensor<T> vectors;  // [L, d]
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;

  std::size_t length() const { return vectors.dim(0); }
  std::size_t dim() const { return vectors.dim(1); }
};

template <typename T>
struct ConvBn {
  Tensor<T> weight;  // [out, in, k, k]
  Tensor<T> gamma, beta;
  Tensor<T> running_mean, running_var;
  std::size_t stride = 1;
  std::size_t padding = 0;

  static ConvBn make(std::size_t in, std::size_t out, std::size_t k, std::size_t stride,
                     init::Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, bool training);
};

template <typename T>
struct ResidualBlock {
  ResidualBlockSpec spec;
  ConvBn<T> conv1, conv2;
  std::optional<ConvBn<T>> conv3;     // bottleneck only
  std::optional<ConvBn<T>> shortcut;  // 1x1 projection

  static ResidualBlock make(const ResidualBlockSpec& spec, init::Rng& rng);
};

// relu(F(x) + shortcut(x)); F is conv-bn-relu-conv-bn (basic) or the
// 1x1 / 3x3 / 1x1 conv-bn stack (bottleneck) with the stride on the 3x3.
template <typename T>
Tensor<T> residual_block_forward(const Tensor<T>& x, ResidualBlock<T>& block, bool training);

enum class LayerRole { stem, main, shortcut, projection };

struct LayerInfo {
  std::string name;
  LayerRole role;
  std::size_t parameter_count;
};

template <typename T>
class ResidualEncoder {
 public:
  static constexpr std::size_t kMinInputExtent = 16;

  ResidualEncoder(const EncoderConfig& config, init::Rng& rng);

  const EncoderConfig& config() const { return config_; }

  // [N, 1, H, W] -> final feature map [N, C, h, w]
  Tensor<T> forward_features(const Tensor<T>& input, bool training);
  // [N, 1, H, W] -> one annotation sequence per batch item
  std::vector<AnnotationSequence<T>> encode_batch(const Tensor<T>& input, bool training);
  AnnotationSequence<T> encode(const FeatureMap& features, bool training = false);

  NamedTensors<T> parameters();
  NamedTensors<T> buffers();
  std::vector<LayerInfo> layers() const;
  // stem + 3 per bottleneck (2 per basic block) + projection; shortcut
  // projections are excluded, following the usual depth naming.
  std::size_t weight_layer_count() const;
  std::size_t parameter_count() const;

  std::vector<std::vector<ResidualBlock<T>>>& stages() { return stages_; }

 private:
  EncoderConfig config_;
  ConvBn<T> stem_;
  std::vector<std::vector<ResidualBlock<T>>> stages_;
  Tensor<T> proj_weight_;  // [C_final, d]
  Tensor<T> proj_bias_;    // [d]
};

template <typename T>
Tensor<T> feature_map_tensor(const FeatureMap& fm);

extern template class ResidualEncoder<float>;
extern template class ResidualEncoder<double>;

}  // namespace aac
