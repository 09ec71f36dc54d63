// include/aac/tensor.h
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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "aac/error.h"

namespace aac {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
class GradTape;

// Dense row-major array with optional participation in reverse-mode
// differentiation. Copies share storage; use clone() for a deep copy.
template <typename T>
class Tensor {
 public:
  struct Storage {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;  // empty until first touched
    bool requires_grad = false;
    const GradTape<T>* tape = nullptr;  // set when produced by a recorded op
  };

  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, T value);
  static Tensor from(Shape shape, std::vector<T> values);
  static Tensor scalar(T value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t size() const { return impl_->data.size(); }

  std::span<T> data() { return impl_->data; }
  std::span<const T> data() const { return impl_->data; }
  std::vector<T>& values() { return impl_->data; }
  const std::vector<T>& values() const { return impl_->data; }
  T item() const;
  T at(std::size_t flat) const { return impl_->data.at(flat); }

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool on = true);
  bool is_leaf() const { return impl_->tape == nullptr; }

  // Gradient buffer, allocated (zero-filled) on first access. Tensors are
  // handles, so the buffer stays writable through const handles.
  std::span<T> grad() const;
  bool has_grad() const { return !impl_->grad.empty(); }
  void zero_grad();

  Tensor clone() const;
  Tensor detach() const;

  Storage* storage() const { return impl_.get(); }
  const std::shared_ptr<Storage>& handle() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<Storage> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<Storage> impl_;
};

// Ordered record of differentiable operations executed while the tape is
// active on the current thread. Entries are appended in execution order,
// so reverse iteration is a valid topological order for the backward pass.
template <typename T>
class GradTape {
 public:
  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;
  ~GradTape();

  void record(const Tensor<T>& output, std::function<void()> backward_fn);
  std::size_t size() const { return entries_.size(); }
  void clear();

  // Seeds d(loss)/d(loss) = 1 and runs every recorded backward function in
  // reverse. Intermediate gradients are reset first; leaf gradients
  // accumulate across calls.
  void backward(const Tensor<T>& loss);

 private:
  struct Entry {
    std::shared_ptr<typename Tensor<T>::Storage> output;
    std::function<void()> backward_fn;
  };
  std::vector<Entry> entries_;
};

template <typename T>
GradTape<T>* active_tape();

// Makes `tape` the active tape of the calling thread for the guard's lifetime.
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(GradTape<T>& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  GradTape<T>* previous_;
};

// Disables recording on the calling thread (e.g. for evaluation).
template <typename T>
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  GradTape<T>* previous_;
};

template <typename T>
void backward(const Tensor<T>& loss, GradTape<T>& tape) {
  tape.backward(loss);
}

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
using NamedTensors = std::vector<NamedTensor<T>>;

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class GradTape<float>;
extern template class GradTape<double>;
extern template class TapeScope<float>;
extern template class TapeScope<double>;
extern template class NoGradScope<float>;
extern template class NoGradScope<double>;

}  // namespace aac
