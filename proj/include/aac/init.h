// include/aac/init.h
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
#include <random>

#include "aac/tensor.h"

namespace aac::init {

using Rng = std::mt19937_64;

// Glorot/Xavier uniform with fan_in/fan_out taken from the tensor layout:
// [in,out] for dense weights, [out,in,kh,kw] for convolution kernels.
template <typename T>
Tensor<T> xavier_uniform(const Shape& shape, Rng& rng);

// Matrix with orthonormal rows (rows <= cols) or columns (rows > cols).
template <typename T>
Tensor<T> orthogonal(std::size_t rows, std::size_t cols, Rng& rng);

template <typename T>
Tensor<T> uniform(const Shape& shape, T lo, T hi, Rng& rng);

}  // namespace aac::init
