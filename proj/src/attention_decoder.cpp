// src/attention_decoder.cpp
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

#include "aac/attention_decoder.h"

#include <string>

#include "aac/error.h"
#include "aac/ops.h"

namespace aac {

void DecoderConfig::validate() const {
  if (hidden_size == 0 || embed_size == 0 || attention_size == 0 || annotation_size == 0)
    throw ConfigError("decoder sizes must be >= 1");
  if (vocab_size < 4)
    throw ConfigError("vocab_size must cover the 4 reserved tokens, got " +
                      std::to_string(vocab_size));
}

template <typename T>
AttentionDecoder<T>::AttentionDecoder(const DecoderConfig& config, init::Rng& rng)
    : config_(config) {
  config_.validate();
  const std::size_t H = config_.hidden_size, E = config_.embed_size, A = config_.attention_size,
                    V = config_.vocab_size, d = config_.annotation_size;
  embedding_ = init::uniform<T>({V, E}, T(-0.1), T(0.1), rng);
  att_wa_ = init::xavier_uniform<T>({d, A}, rng);
  att_wh_ = init::xavier_uniform<T>({H, A}, rng);
  att_b_ = Tensor<T>::zeros({A});
  att_v_ = init::xavier_uniform<T>({A, 1}, rng);
  lstm_wih_ = init::xavier_uniform<T>({E + d, 4 * H}, rng);
  {
    // one orthogonal block per gate
    std::vector<T> w(H * 4 * H);
    for (std::size_t g = 0; g < 4; ++g) {
      auto q = init::orthogonal<T>(H, H, rng);
      for (std::size_t r = 0; r < H; ++r)
        for (std::size_t c = 0; c < H; ++c) w[r * 4 * H + g * H + c] = q.at(r * H + c);
    }
    lstm_whh_ = Tensor<T>::from({H, 4 * H}, std::move(w));
  }
  lstm_b_ = Tensor<T>::zeros({4 * H});
  for (std::size_t j = H; j < 2 * H; ++j) lstm_b_.data()[j] = T(1);  // forget gate
  init_h_w_ = init::xavier_uniform<T>({d, H}, rng);
  init_h_b_ = Tensor<T>::zeros({H});
  init_c_w_ = init::xavier_uniform<T>({d, H}, rng);
  init_c_b_ = Tensor<T>::zeros({H});
  out_w_ = init::xavier_uniform<T>({H + d, V}, rng);
  out_b_ = Tensor<T>::zeros({V});
  for (auto& p : parameters()) p.tensor.set_requires_grad();
}

template <typename T>
PreparedAnnotations<T> AttentionDecoder<T>::prepare(const Tensor<T>& annotations) const {
  if (annotations.rank() != 2 || annotations.dim(0) == 0 ||
      annotations.dim(1) != config_.annotation_size)
    throw ShapeError("annotations must be [L>0, " + std::to_string(config_.annotation_size) +
                     "], got " + shape_str(annotations.shape()));
  return {annotations, ops::matmul(annotations, att_wa_)};
}

template <typename T>
DecoderState<T> AttentionDecoder<T>::initial_state(const PreparedAnnotations<T>& a) const {
  auto mean = ops::reshape(ops::mean_axis(a.vectors, 0), {1, config_.annotation_size});
  return {ops::add_bias(ops::matmul(mean, init_h_w_), init_h_b_),
          ops::add_bias(ops::matmul(mean, init_c_w_), init_c_b_)};
}

template <typename T>
Attention<T> AttentionDecoder<T>::attend(const PreparedAnnotations<T>& a,
                                         const DecoderState<T>& state) const {
  if (state.h.rank() != 2 || state.h.dim(1) != config_.hidden_size)
    throw ShapeError("decoder state must be [1, " + std::to_string(config_.hidden_size) + "]");
  const std::size_t L = a.length(), A = config_.attention_size;
  auto query = ops::reshape(ops::add_bias(ops::matmul(state.h, att_wh_), att_b_), {A});
  auto energy = ops::matmul(ops::tanh(ops::add_bias(a.projected, query)), att_v_);
  auto alpha = ops::softmax(ops::reshape(energy, {1, L}), 1);
  return {ops::matmul(alpha, a.vectors), alpha};
}

template <typename T>
StepOutput<T> AttentionDecoder<T>::decode_step(std::int32_t prev_token,
                                               const DecoderState<T>& state,
                                               const PreparedAnnotations<T>& a) const {
  if (prev_token < 0 || static_cast<std::size_t>(prev_token) >= config_.vocab_size)
    throw InputError("token " + std::to_string(prev_token) + " outside vocabulary of size " +
                     std::to_string(config_.vocab_size));
  const std::size_t H = config_.hidden_size;
  auto att = attend(a, state);
  auto emb = ops::embedding_lookup(embedding_, std::span<const std::int32_t>(&prev_token, 1));
  auto x = ops::concat<T>({emb, att.context}, 1);
  auto gates = ops::add_bias(
      ops::add(ops::matmul(x, lstm_wih_), ops::matmul(state.h, lstm_whh_)), lstm_b_);
  auto i = ops::sigmoid(ops::slice(gates, 1, 0, H));
  auto f = ops::sigmoid(ops::slice(gates, 1, H, 2 * H));
  auto g = ops::tanh(ops::slice(gates, 1, 2 * H, 3 * H));
  auto o = ops::sigmoid(ops::slice(gates, 1, 3 * H, 4 * H));
  auto c = ops::add(ops::mul(f, state.c), ops::mul(i, g));
  auto h = ops::mul(o, ops::tanh(c));
  auto logits = ops::add_bias(ops::matmul(ops::concat<T>({h, att.context}, 1), out_w_), out_b_);
  return {logits, {h, c}, att.alpha};
}

template <typename T>
Tensor<T> AttentionDecoder<T>::decode_teacher_forced(const Tensor<T>& annotations,
                                                     std::span<const std::int32_t> targets,
                                                     std::int32_t sos_index) const {
  if (targets.size() < 2) throw InputError("teacher-forced target needs <sos> and one more token");
  if (targets[0] != sos_index) throw InputError("teacher-forced target must begin with <sos>");
  auto prepared = prepare(annotations);
  auto state = initial_state(prepared);
  std::vector<Tensor<T>> rows;
  rows.reserve(targets.size() - 1);
  for (std::size_t t = 0; t + 1 < targets.size(); ++t) {
    auto step = decode_step(targets[t], state, prepared);
    rows.push_back(ops::log_softmax(step.logits, 1));
    state = step.state;
  }
  return rows.size() == 1 ? rows.front() : ops::concat(rows, 0);
}

template <typename T>
NamedTensors<T> AttentionDecoder<T>::parameters() {
  return {{"decoder/embedding", embedding_},
          {"decoder/attention/w_annotation", att_wa_},
          {"decoder/attention/w_hidden", att_wh_},
          {"decoder/attention/bias", att_b_},
          {"decoder/attention/v", att_v_},
          {"decoder/lstm/w_input", lstm_wih_},
          {"decoder/lstm/w_hidden", lstm_whh_},
          {"decoder/lstm/bias", lstm_b_},
          {"decoder/init_h/weight", init_h_w_},
          {"decoder/init_h/bias", init_h_b_},
          {"decoder/init_c/weight", init_c_w_},
          {"decoder/init_c/bias", init_c_b_},
          {"decoder/output/weight", out_w_},
          {"decoder/output/bias", out_b_}};
}

template class AttentionDecoder<float>;
template class AttentionDecoder<double>;

}  // namespace aac
