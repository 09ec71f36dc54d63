// include/aac/ops.h
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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aac/tensor.h"

// Differentiable tensor operations. Every op records its backward function
// onto the active tape when a tape is active and any input requires grad.
// Shapes are explicit: the only broadcast is add_bias over the last axis.
namespace aac::ops {

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
// x[..., n] + bias[n]
template <typename T> Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias);

template <typename T> Tensor<T> relu(const Tensor<T>& x);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T> Tensor<T> tanh(const Tensor<T>& x);

template <typename T> Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);
template <typename T> Tensor<T> log_softmax(const Tensor<T>& x, std::size_t axis);

template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);
// Mean over one axis; that axis is removed from the result shape.
template <typename T> Tensor<T> mean_axis(const Tensor<T>& x, std::size_t axis);

// Cross-correlation. input is [C,H,W] or [N,C,H,W]; kernels [Cout,C,kh,kw].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernels, std::size_t stride,
                 std::size_t padding);
template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& input, std::size_t kernel, std::size_t stride);
// [C,H,W] -> [C], [N,C,H,W] -> [N,C]
template <typename T> Tensor<T> global_avg_pool(const Tensor<T>& input);

// Per-channel normalization over N,H,W of a [N,C,H,W] (or [C,H,W]) input.
// Training mode normalizes with batch statistics and folds them into the
// running buffers; evaluation mode reads the running buffers only.
template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                      Tensor<T>& running_mean, Tensor<T>& running_var, bool training,
                      T momentum = T(0.1), T eps = T(1e-5));

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);
template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
// 2-D transpose.
template <typename T> Tensor<T> transpose(const Tensor<T>& x);
template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end);
// Rows of table[V,E] picked by index -> [n,E].
template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, std::span<const std::int32_t> indices);
// Flat element pick -> [n].
template <typename T>
Tensor<T> gather(const Tensor<T>& x, std::span<const std::size_t> flat_indices);

}  // namespace aac::ops
