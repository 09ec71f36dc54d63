// tests/support/op_catalogue.h
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
#include <string>
#include <vector>

#include "gradcheck.h"

// One finite-difference case per differentiable tensor op, shared by the
// unit tests and the acceptance suite.
namespace aac::testing {

struct OpCase {
  std::string name;
  std::function<GradCheckResult()> run;
};

inline std::vector<OpCase> op_gradient_cases() {
  using ops::sum;
  std::vector<OpCase> cases;
  auto add_case = [&](std::string name, std::vector<Shape> shapes,
                      std::function<Tensor<double>(std::vector<Tensor<double>>&)> f,
                      double lo = -1.0, double hi = 1.0) {
    cases.push_back({name, [shapes, f, lo, hi, name]() {
                       std::mt19937_64 rng(std::hash<std::string>{}(name) & 0xffff);
                       std::vector<Tensor<double>> leaves;
                       for (const auto& s : shapes) leaves.push_back(random_tensor(s, rng, lo, hi));
                       return grad_check(leaves, [&]() { return weighted_sum(f(leaves)); });
                     }});
  };

  add_case("matmul", {{3, 4}, {4, 2}}, [](auto& l) { return ops::matmul(l[0], l[1]); });
  add_case("add", {{2, 3}, {2, 3}}, [](auto& l) { return ops::add(l[0], l[1]); });
  add_case("sub", {{2, 3}, {2, 3}}, [](auto& l) { return ops::sub(l[0], l[1]); });
  add_case("mul", {{2, 3}, {2, 3}}, [](auto& l) { return ops::mul(l[0], l[1]); });
  add_case("scale", {{5}}, [](auto& l) { return ops::scale(l[0], 2.5); });
  add_case("add_bias", {{3, 4}, {4}}, [](auto& l) { return ops::add_bias(l[0], l[1]); });
  add_case("relu", {{4, 5}}, [](auto& l) { return ops::relu(l[0]); });
  add_case("sigmoid", {{4, 5}}, [](auto& l) { return ops::sigmoid(l[0]); }, -4.0, 4.0);
  add_case("tanh", {{4, 5}}, [](auto& l) { return ops::tanh(l[0]); }, -3.0, 3.0);
  add_case("softmax_axis0", {{3, 4}}, [](auto& l) { return ops::softmax(l[0], 0); }, -3.0, 3.0);
  add_case("softmax_axis1", {{3, 4}}, [](auto& l) { return ops::softmax(l[0], 1); }, -3.0, 3.0);
  add_case("log_softmax", {{2, 3, 4}}, [](auto& l) { return ops::log_softmax(l[0], 1); }, -3.0,
           3.0);
  add_case("sum", {{3, 3}}, [](auto& l) { return sum(l[0]); });
  add_case("mean", {{3, 3}}, [](auto& l) { return ops::mean(l[0]); });
  add_case("mean_axis", {{3, 4, 2}}, [](auto& l) { return ops::mean_axis(l[0], 1); });
  add_case("conv2d_pad1", {{2, 5, 4}, {3, 2, 3, 3}},
           [](auto& l) { return ops::conv2d(l[0], l[1], 1, 1); });
  add_case("conv2d_stride2_batched", {{2, 2, 6, 5}, {3, 2, 3, 3}},
           [](auto& l) { return ops::conv2d(l[0], l[1], 2, 1); });
  add_case("conv2d_1x1", {{2, 3, 4, 4}, {5, 3, 1, 1}},
           [](auto& l) { return ops::conv2d(l[0], l[1], 1, 0); });
  add_case("conv2d_1x1_stride2", {{1, 3, 5, 4}, {2, 3, 1, 1}},
           [](auto& l) { return ops::conv2d(l[0], l[1], 2, 0); });
  add_case("max_pool2d", {{2, 6, 6}}, [](auto& l) { return ops::max_pool2d(l[0], 2, 2); });
  add_case("global_avg_pool", {{2, 3, 4, 5}}, [](auto& l) { return ops::global_avg_pool(l[0]); });
  add_case("batchnorm2d_train", {{3, 2, 3, 3}, {2}, {2}}, [](auto& l) {
    auto rm = Tensor<double>::zeros({2});
    auto rv = Tensor<double>::full({2}, 1.0);
    return ops::batchnorm2d(l[0], l[1], l[2], rm, rv, true);
  });
  add_case("batchnorm2d_eval", {{2, 2, 3, 3}, {2}, {2}}, [](auto& l) {
    auto rm = Tensor<double>::from({2}, {0.3, -0.2});
    auto rv = Tensor<double>::from({2}, {0.7, 1.9});
    return ops::batchnorm2d(l[0], l[1], l[2], rm, rv, false);
  });
  add_case("concat", {{2, 3}, {2, 2}}, [](auto& l) { return ops::concat<double>({l[0], l[1]}, 1); });
  add_case("reshape", {{2, 6}}, [](auto& l) { return ops::reshape(l[0], {3, 4}); });
  add_case("transpose", {{2, 5}}, [](auto& l) { return ops::transpose(l[0]); });
  add_case("slice", {{3, 8}}, [](auto& l) { return ops::slice(l[0], 1, 2, 6); });
  add_case("embedding_lookup", {{5, 3}}, [](auto& l) {
    static const std::int32_t idx[] = {4, 0, 4, 2};
    return ops::embedding_lookup(l[0], std::span<const std::int32_t>(idx));
  });
  add_case("gather", {{3, 4}}, [](auto& l) {
    static const std::size_t idx[] = {0, 5, 11, 5};
    return ops::gather(l[0], std::span<const std::size_t>(idx));
  });
  return cases;
}

}  // namespace aac::testing
