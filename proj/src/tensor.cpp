// src/tensor.cpp
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

#include "aac/tensor.h"

#include <algorithm>
#include <sstream>

namespace aac {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

template <typename T>
GradTape<T>*& tape_slot() {
  thread_local GradTape<T>* slot = nullptr;
  return slot;
}

}  // namespace

template <typename T>
GradTape<T>* active_tape() {
  return tape_slot<T>();
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape) {
  return full(std::move(shape), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
  for (std::size_t d : shape)
    if (d == 0) throw ShapeError("tensor dimensions must be positive: " + shape_str(shape));
  auto impl = std::make_shared<Storage>();
  impl->data.assign(shape_numel(shape), value);
  impl->shape = std::move(shape);
  return Tensor(std::move(impl));
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values) {
  for (std::size_t d : shape)
    if (d == 0) throw ShapeError("tensor dimensions must be positive: " + shape_str(shape));
  if (shape_numel(shape) != values.size())
    throw ShapeError("shape " + shape_str(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  auto impl = std::make_shared<Storage>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  return Tensor(std::move(impl));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value) {
  return from({1}, {value});
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  if (axis >= rank())
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(shape()));
  return impl_->shape[axis];
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
  return impl_->data[0];
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  return *this;
}

template <typename T>
std::span<T> Tensor<T>::grad() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), T(0));
  return impl_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  auto impl = std::make_shared<Storage>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->requires_grad = impl_->requires_grad && is_leaf();
  return Tensor(std::move(impl));
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  auto impl = std::make_shared<Storage>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  return Tensor(std::move(impl));
}

template <typename T>
GradTape<T>::~GradTape() {
  clear();
}

template <typename T>
void GradTape<T>::record(const Tensor<T>& output, std::function<void()> backward_fn) {
  output.storage()->requires_grad = true;
  output.storage()->tape = this;
  entries_.push_back({output.handle(), std::move(backward_fn)});
}

template <typename T>
void GradTape<T>::clear() {
  for (auto& e : entries_)
    if (e.output->tape == this) e.output->tape = nullptr;
  entries_.clear();
}

template <typename T>
void GradTape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw ShapeError("backward() needs a scalar loss");
  if (loss.storage()->tape != this)
    throw InputError("backward(): loss was not produced on this tape");
  for (auto& e : entries_) {
    e.output->grad.assign(e.output->data.size(), T(0));
  }
  loss.storage()->grad[0] = T(1);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) it->backward_fn();
}

template <typename T>
TapeScope<T>::TapeScope(GradTape<T>& tape) : previous_(tape_slot<T>()) {
  tape_slot<T>() = &tape;
}

template <typename T>
TapeScope<T>::~TapeScope() {
  tape_slot<T>() = previous_;
}

template <typename T>
NoGradScope<T>::NoGradScope() : previous_(tape_slot<T>()) {
  tape_slot<T>() = nullptr;
}

template <typename T>
NoGradScope<T>::~NoGradScope() {
  tape_slot<T>() = previous_;
}

template class Tensor<float>;
template class Tensor<double>;
template class GradTape<float>;
template class GradTape<double>;
template class TapeScope<float>;
template class TapeScope<double>;
template class NoGradScope<float>;
template class NoGradScope<double>;
template GradTape<float>* active_tape<float>();
template GradTape<double>* active_tape<double>();

}  // namespace aac
