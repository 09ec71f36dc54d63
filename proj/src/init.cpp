// src/init.cpp
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

#include "aac/init.h"

#include <Eigen/Dense>
#include <cmath>

namespace aac::init {

template <typename T>
Tensor<T> uniform(const Shape& shape, T lo, T hi, Rng& rng) {
  std::uniform_real_distribution<double> dist(static_cast<double>(lo), static_cast<double>(hi));
  std::vector<T> v(shape_numel(shape));
  for (T& x : v) x = static_cast<T>(dist(rng));
  return Tensor<T>::from(shape, std::move(v));
}

template <typename T>
Tensor<T> xavier_uniform(const Shape& shape, Rng& rng) {
  double fan_in = 1, fan_out = 1;
  if (shape.size() == 2) {
    fan_in = static_cast<double>(shape[0]);
    fan_out = static_cast<double>(shape[1]);
  } else if (shape.size() == 4) {
    const double field = static_cast<double>(shape[2] * shape[3]);
    fan_in = static_cast<double>(shape[1]) * field;
    fan_out = static_cast<double>(shape[0]) * field;
  } else {
    throw ShapeError("xavier_uniform expects a 2-D or 4-D shape, got " + shape_str(shape));
  }
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  return uniform<T>(shape, static_cast<T>(-bound), static_cast<T>(bound), rng);
}

template <typename T>
Tensor<T> orthogonal(std::size_t rows, std::size_t cols, Rng& rng) {
  const std::size_t big = std::max(rows, cols), small = std::min(rows, cols);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd a(big, small);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = dist(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  // Sign fix so the factorization is unique.
  const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(small, small);
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  std::vector<T> v(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      v[i * cols + j] = static_cast<T>(rows >= cols ? q(i, j) : q(j, i));
  return Tensor<T>::from({rows, cols}, std::move(v));
}

template Tensor<float> uniform(const Shape&, float, float, Rng&);
template Tensor<double> uniform(const Shape&, double, double, Rng&);
template Tensor<float> xavier_uniform(const Shape&, Rng&);
template Tensor<double> xavier_uniform(const Shape&, Rng&);
template Tensor<float> orthogonal(std::size_t, std::size_t, Rng&);
template Tensor<double> orthogonal(std::size_t, std::size_t, Rng&);

}  // namespace aac::init
