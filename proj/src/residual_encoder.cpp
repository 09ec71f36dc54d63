// src/residual_encoder.cpp
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

#include "aac/residual_encoder.h"

#include <cmath>

#include "aac/error.h"
#include "aac/ops.h"

namespace aac {

void ResidualBlockSpec::validate() const {
  if (channels_in == 0 || channels_mid == 0 || channels_out == 0)
    throw ConfigError("residual block channel counts must be positive");
  if (stride == 0) throw ConfigError("residual block stride must be >= 1");
  if ((channels_in != channels_out || stride != 1) && !projection_shortcut)
    throw ConfigError("identity shortcut impossible: channels " + std::to_string(channels_in) +
                      "->" + std::to_string(channels_out) + ", stride " + std::to_string(stride));
}

std::size_t EncoderPreset::stage_mid_channels(std::size_t stage) const {
  return static_cast<std::size_t>(
      std::lround(static_cast<double>(base_channels << stage) * width_multiplier));
}

EncoderPreset encoder_preset(std::string_view name) {
  if (name == "nano50") return {"nano50", {3, 4, 6, 3}, 1.0, 16};
  if (name == "nano101") return {"nano101", {3, 4, 23, 3}, 1.0, 16};
  if (name == "nano152") return {"nano152", {3, 8, 36, 3}, 1.0, 16};
  if (name == "nanoWide101") return {"nanoWide101", {3, 4, 23, 3}, 2.0, 16};
  throw ConfigError("unknown encoder preset '" + std::string(name) +
                    "' (expected nano50, nano101, nano152 or nanoWide101)");
}

std::vector<std::string> encoder_preset_names() {
  return {"nano50", "nano101", "nano152", "nanoWide101"};
}

template <typename T>
ConvBn<T> ConvBn<T>::make(std::size_t in, std::size_t out, std::size_t k, std::size_t stride,
                          init::Rng& rng) {
  ConvBn c;
  c.weight = init::xavier_uniform<T>({out, in, k, k}, rng).set_requires_grad();
  c.gamma = Tensor<T>::full({out}, T(1)).set_requires_grad();
  c.beta = Tensor<T>::zeros({out}).set_requires_grad();
  c.running_mean = Tensor<T>::zeros({out});
  c.running_var = Tensor<T>::full({out}, T(1));
  c.stride = stride;
  c.padding = k / 2;
  return c;
}

template <typename T>
Tensor<T> ConvBn<T>::forward(const Tensor<T>& x, bool training) {
  auto y = ops::conv2d(x, weight, stride, padding);
  return ops::batchnorm2d(y, gamma, beta, running_mean, running_var, training);
}

template <typename T>
ResidualBlock<T> ResidualBlock<T>::make(const ResidualBlockSpec& spec, init::Rng& rng) {
  spec.validate();
  ResidualBlock b;
  b.spec = spec;
  if (spec.kind == BlockKind::bottleneck) {
    b.conv1 = ConvBn<T>::make(spec.channels_in, spec.channels_mid, 1, 1, rng);
    b.conv2 = ConvBn<T>::make(spec.channels_mid, spec.channels_mid, 3, spec.stride, rng);
    b.conv3 = ConvBn<T>::make(spec.channels_mid, spec.channels_out, 1, 1, rng);
  } else {
    b.conv1 = ConvBn<T>::make(spec.channels_in, spec.channels_out, 3, spec.stride, rng);
    b.conv2 = ConvBn<T>::make(spec.channels_out, spec.channels_out, 3, 1, rng);
  }
  if (spec.projection_shortcut)
    b.shortcut = ConvBn<T>::make(spec.channels_in, spec.channels_out, 1, spec.stride, rng);
  return b;
}

template <typename T>
Tensor<T> residual_block_forward(const Tensor<T>& x, ResidualBlock<T>& block, bool training) {
  const std::size_t channel_axis = x.rank() == 4 ? 1 : 0;
  if (x.rank() < 3 || x.dim(channel_axis) != block.spec.channels_in)
    throw ShapeError("residual block expects " + std::to_string(block.spec.channels_in) +
                     " input channels, got " + shape_str(x.shape()));
  auto f = ops::relu(block.conv1.forward(x, training));
  f = block.conv2.forward(f, training);
  if (block.conv3) f = block.conv3->forward(ops::relu(f), training);
  auto skip = block.shortcut ? block.shortcut->forward(x, training) : x;
  return ops::relu(ops::add(f, skip));
}

template <typename T>
ResidualEncoder<T>::ResidualEncoder(const EncoderConfig& config, init::Rng& rng)
    : config_(config) {
  const EncoderPreset& p = config_.preset;
  if (p.base_channels == 0 || !(p.width_multiplier > 0.0) || config_.annotation_size == 0)
    throw ConfigError("encoder sizes must be positive");
  stem_ = ConvBn<T>::make(1, p.base_channels, 3, 1, rng);
  std::size_t channels = p.base_channels;
  for (std::size_t s = 0; s < 4; ++s) {
    if (p.stage_block_counts[s] == 0) throw ConfigError("every stage needs at least one block");
    std::vector<ResidualBlock<T>> stage;
    for (std::size_t b = 0; b < p.stage_block_counts[s]; ++b) {
      ResidualBlockSpec spec;
      spec.kind = BlockKind::bottleneck;
      spec.channels_in = channels;
      spec.channels_mid = p.stage_mid_channels(s);
      spec.channels_out = p.stage_out_channels(s);
      spec.stride = (b == 0 && s > 0) ? 2 : 1;
      spec.projection_shortcut = spec.channels_in != spec.channels_out || spec.stride != 1;
      stage.push_back(ResidualBlock<T>::make(spec, rng));
      channels = spec.channels_out;
    }
    stages_.push_back(std::move(stage));
  }
  proj_weight_ =
      init::xavier_uniform<T>({channels, config_.annotation_size}, rng).set_requires_grad();
  proj_bias_ = Tensor<T>::zeros({config_.annotation_size}).set_requires_grad();
}

template <typename T>
Tensor<T> ResidualEncoder<T>::forward_features(const Tensor<T>& input, bool training) {
  if (input.rank() != 4 || input.dim(1) != 1)
    throw ShapeError("encoder input must be [N,1,bands,frames], got " + shape_str(input.shape()));
  if (input.dim(2) < kMinInputExtent || input.dim(3) < kMinInputExtent)
    throw InputError("encoder input " + shape_str(input.shape()) +
                     " is smaller than the 16x16 downsampling footprint");
  auto x = ops::relu(stem_.forward(input, training));
  for (auto& stage : stages_)
    for (auto& block : stage) x = residual_block_forward(x, block, training);
  return x;
}

template <typename T>
std::vector<AnnotationSequence<T>> ResidualEncoder<T>::encode_batch(const Tensor<T>& input,
                                                                    bool training) {
  auto fmap = forward_features(input, training);
  const std::size_t n = fmap.dim(0), c = fmap.dim(1), h = fmap.dim(2), w = fmap.dim(3);
  std::vector<AnnotationSequence<T>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto item = ops::reshape(ops::slice(fmap, 0, i, i + 1), {c, h * w});
    auto vectors = ops::add_bias(ops::matmul(ops::transpose(item), proj_weight_), proj_bias_);
    out.push_back({vectors, h, w});
  }
  return out;
}

template <typename T>
AnnotationSequence<T> ResidualEncoder<T>::encode(const FeatureMap& features, bool training) {
  return encode_batch(feature_map_tensor<T>(features), training).front();
}

namespace {

template <typename T>
void collect_convbn(NamedTensors<T>& out, const std::string& prefix, ConvBn<T>& c,
                    bool buffers) {
  if (buffers) {
    out.push_back({prefix + "/running_mean", c.running_mean});
    out.push_back({prefix + "/running_var", c.running_var});
  } else {
    out.push_back({prefix + "/weight", c.weight});
    out.push_back({prefix + "/gamma", c.gamma});
    out.push_back({prefix + "/beta", c.beta});
  }
}

template <typename T>
NamedTensors<T> collect(ConvBn<T>& stem, std::vector<std::vector<ResidualBlock<T>>>& stages,
                        Tensor<T>* proj_w, Tensor<T>* proj_b, bool buffers) {
  NamedTensors<T> out;
  collect_convbn(out, "encoder/stem", stem, buffers);
  for (std::size_t s = 0; s < stages.size(); ++s)
    for (std::size_t b = 0; b < stages[s].size(); ++b) {
      auto& blk = stages[s][b];
      const std::string prefix =
          "encoder/stage" + std::to_string(s + 1) + "/block" + std::to_string(b);
      collect_convbn(out, prefix + "/conv1", blk.conv1, buffers);
      collect_convbn(out, prefix + "/conv2", blk.conv2, buffers);
      if (blk.conv3) collect_convbn(out, prefix + "/conv3", *blk.conv3, buffers);
      if (blk.shortcut) collect_convbn(out, prefix + "/shortcut", *blk.shortcut, buffers);
    }
  if (!buffers) {
    out.push_back({"encoder/projection/weight", *proj_w});
    out.push_back({"encoder/projection/bias", *proj_b});
  }
  return out;
}

template <typename T>
std::size_t convbn_params(const ConvBn<T>& c) {
  return c.weight.size() + c.gamma.size() + c.beta.size();
}

}  // namespace

template <typename T>
NamedTensors<T> ResidualEncoder<T>::parameters() {
  return collect(stem_, stages_, &proj_weight_, &proj_bias_, false);
}

template <typename T>
NamedTensors<T> ResidualEncoder<T>::buffers() {
  return collect(stem_, stages_, &proj_weight_, &proj_bias_, true);
}

template <typename T>
std::vector<LayerInfo> ResidualEncoder<T>::layers() const {
  std::vector<LayerInfo> out;
  out.push_back({"encoder/stem", LayerRole::stem, convbn_params(stem_)});
  for (std::size_t s = 0; s < stages_.size(); ++s)
    for (std::size_t b = 0; b < stages_[s].size(); ++b) {
      const auto& blk = stages_[s][b];
      const std::string prefix =
          "encoder/stage" + std::to_string(s + 1) + "/block" + std::to_string(b);
      out.push_back({prefix + "/conv1", LayerRole::main, convbn_params(blk.conv1)});
      out.push_back({prefix + "/conv2", LayerRole::main, convbn_params(blk.conv2)});
      if (blk.conv3) out.push_back({prefix + "/conv3", LayerRole::main, convbn_params(*blk.conv3)});
      if (blk.shortcut)
        out.push_back({prefix + "/shortcut", LayerRole::shortcut, convbn_params(*blk.shortcut)});
    }
  out.push_back({"encoder/projection", LayerRole::projection,
                 proj_weight_.size() + proj_bias_.size()});
  return out;
}

template <typename T>
std::size_t ResidualEncoder<T>::weight_layer_count() const {
  std::size_t n = 0;
  for (const auto& l : layers())
    if (l.role != LayerRole::shortcut) ++n;
  return n;
}

template <typename T>
std::size_t ResidualEncoder<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers()) n += l.parameter_count;
  return n;
}

template <typename T>
Tensor<T> feature_map_tensor(const FeatureMap& fm) {
  if (fm.num_bands == 0 || fm.num_frames == 0) throw InputError("empty feature map");
  std::vector<T> v(fm.values.begin(), fm.values.end());
  return Tensor<T>::from({1, 1, fm.num_bands, fm.num_frames}, std::move(v));
}

template struct ConvBn<float>;
template struct ConvBn<double>;
template struct ResidualBlock<float>;
template struct ResidualBlock<double>;
template Tensor<float> residual_block_forward(const Tensor<float>&, ResidualBlock<float>&, bool);
template Tensor<double> residual_block_forward(const Tensor<double>&, ResidualBlock<double>&, bool);
template class ResidualEncoder<float>;
template class ResidualEncoder<double>;
template Tensor<float> feature_map_tensor(const FeatureMap&);
template Tensor<double> feature_map_tensor(const FeatureMap&);

}  // namespace aac
