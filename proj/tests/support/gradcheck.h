// tests/support/gradcheck.h
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

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "aac/ops.h"
#include "aac/tensor.h"

// Central finite-difference gradient checker (test-only oracle).
namespace aac::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;  // over elements whose absolute error exceeds abs_tol
  double max_abs_error = 0.0;
  std::size_t checked = 0;
  bool ok(double rel_tol = 1e-4) const { return max_rel_error < rel_tol; }
};

inline Tensor<double> random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0,
                                    double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor<double>::from(shape, std::move(v));
}

// Reduces an arbitrary output to a scalar with fixed random weights so every
// output element carries a distinct sensitivity.
inline Tensor<double> weighted_sum(const Tensor<double>& out, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  auto w = random_tensor(out.shape(), rng);
  return ops::sum(ops::mul(out, w));
}

// `loss_fn` must rebuild the computation from `leaves` on every call.
inline GradCheckResult grad_check(std::vector<Tensor<double>> leaves,
                                  const std::function<Tensor<double>()>& loss_fn,
                                  double h = 1e-5, double abs_tol = 1e-7) {
  for (auto& leaf : leaves) {
    leaf.set_requires_grad(true);
    leaf.zero_grad();
  }
  {
    GradTape<double> tape;
    TapeScope<double> scope(tape);
    auto loss = loss_fn();
    tape.backward(loss);
  }
  GradCheckResult result;
  NoGradScope<double> no_grad;
  for (auto& leaf : leaves) {
    std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());
    auto data = leaf.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double fp = loss_fn().item();
      data[i] = saved - h;
      const double fm = loss_fn().item();
      data[i] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double abs_err = std::abs(numeric - analytic[i]);
      result.max_abs_error = std::max(result.max_abs_error, abs_err);
      if (abs_err > abs_tol) {
        const double denom = std::max(std::abs(numeric), std::abs(analytic[i]));
        result.max_rel_error = std::max(result.max_rel_error, abs_err / denom);
      }
      ++result.checked;
    }
  }
  return result;
}

}  // namespace aac::testing
