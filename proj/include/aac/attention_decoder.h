// include/aac/attention_decoder.h
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
#include <span>
#include <vector>

#include "aac/init.h"
#include "aac/tensor.h"

namespace aac {

struct DecoderConfig {
  std::size_t hidden_size = 256;
  std::size_t embed_size = 128;
  std::size_t attention_size = 128;
  std::size_t vocab_size = 0;
  std::size_t annotation_size = 256;

  void validate() const;  // ConfigError
};

template <typename T>
struct DecoderState {
  Tensor<T> h;  // [1, hidden]
  Tensor<T> c;  // [1, hidden]
};

// Annotations with their attention projection computed once per sequence.
template <typename T>
struct PreparedAnnotations {
  Tensor<T> vectors;    // [L, d]
  Tensor<T> projected;  // [L, attention]
  std::size_t length() const { return vectors.dim(0); }
};

template <typename T>
struct Attention {
  Tensor<T> context;  // [1, d]
  Tensor<T> alpha;    // [1, L]
};

template <typename T>
struct StepOutput {
  Tensor<T> logits;  // [1, vocab]
  DecoderState<T> state;
  Tensor<T> alpha;  // [1, L]
};

// LSTM decoder with additive attention over encoder annotations.
// Gate layout in the fused weights is i, f, g, o.
template <typename T>
class AttentionDecoder {
 public:
  AttentionDecoder(const DecoderConfig& config, init::Rng& rng);

  const DecoderConfig& config() const { return config_; }

  PreparedAnnotations<T> prepare(const Tensor<T>& annotations) const;
  // h0, c0 are affine maps of the mean annotation vector.
  DecoderState<T> initial_state(const PreparedAnnotations<T>& a) const;
  Attention<T> attend(const PreparedAnnotations<T>& a, const DecoderState<T>& state) const;
  StepOutput<T> decode_step(std::int32_t prev_token, const DecoderState<T>& state,
                            const PreparedAnnotations<T>& a) const;
  // Rows t = 0..T-2 hold log p(. | targets[0..t]); targets[0] must be <sos>.
  Tensor<T> decode_teacher_forced(const Tensor<T>& annotations,
                                  std::span<const std::int32_t> targets,
                                  std::int32_t sos_index = 1) const;

  NamedTensors<T> parameters();

 private:
  DecoderConfig config_;
  Tensor<T> embedding_;           // [V, E]
  Tensor<T> att_wa_, att_wh_;     // [d, A], [H, A]
  Tensor<T> att_b_, att_v_;       // [A], [A, 1]
  Tensor<T> lstm_wih_, lstm_whh_; // [E+d, 4H], [H, 4H]
  Tensor<T> lstm_b_;              // [4H]
  Tensor<T> init_h_w_, init_h_b_; // [d, H], [H]
  Tensor<T> init_c_w_, init_c_b_;
  Tensor<T> out_w_, out_b_;       // [H+d, V], [V]
};

extern template class AttentionDecoder<float>;
extern template class AttentionDecoder<double>;

}  // namespace aac
