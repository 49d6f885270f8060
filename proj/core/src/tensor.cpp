/*
 * Copyright (c) 2026 The VSA Authors
 *
 * Licensed under the Apache License, Version 2.0;
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an 'AS IS' BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "vsa/tensor.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace vsa {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ')';
  return out.str();
}

namespace {

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor rank must be at least 1");
  for (auto e : shape) {
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
  }
}

struct FaultSetting {
  std::string op;
  double factor = 1.0;
};

FaultSetting& fault_setting() {
  static FaultSetting setting;
  return setting;
}

}  // namespace

void set_backward_fault(std::string op, double factor) {
  fault_setting().op = std::move(op);
  fault_setting().factor = factor;
}

std::string_view backward_fault_op() noexcept { return fault_setting().op; }
double backward_fault_factor() noexcept { return fault_setting().factor; }

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : node_(std::make_shared<detail::Node<T>>()) {
  validate_shape(shape);
  node_->data.assign(shape_numel(shape), fill);
  node_->shape = std::move(shape);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : node_(std::make_shared<detail::Node<T>>()) {
  validate_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("shape " + shape_str(shape) + " needs " + std::to_string(shape_numel(shape)) +
                     " values, got " + std::to_string(values.size()));
  }
  node_->shape = std::move(shape);
  node_->data = std::move(values);
}

template <typename T>
detail::Node<T>& Tensor<T>::node() const {
  if (!node_) throw std::logic_error("use of an undefined tensor");
  return *node_;
}

template <typename T>
std::size_t Tensor<T>::dim(std::ptrdiff_t axis) const {
  const auto r = static_cast<std::ptrdiff_t>(rank());
  const auto a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(shape()));
  }
  return shape()[static_cast<std::size_t>(a)];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node().data[0];
}

template <typename T>
std::vector<T> Tensor<T>::grad() const {
  const auto& n = node();
  if (n.grad.empty()) return std::vector<T>(n.data.size(), T(0));
  return n.grad;
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() {
  node().ensure_grad();
  return node().grad;
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor<T>(shape(), node().data);
}

namespace {
template <typename T>
thread_local Tape<T>* g_active_tape = nullptr;
}

template <typename T>
Tape<T>::Tape() : previous_(g_active_tape<T>) {
  g_active_tape<T> = this;
}

template <typename T>
Tape<T>::~Tape() {
  g_active_tape<T> = previous_;
}

template <typename T>
Tape<T>* Tape<T>::active() noexcept {
  return g_active_tape<T>;
}

template <typename T>
Tape<T>* Tape<T>::exchange_active(Tape* tape) noexcept {
  return std::exchange(g_active_tape<T>, tape);
}

template <typename T>
NoGradGuard<T>::NoGradGuard() : saved_(Tape<T>::exchange_active(nullptr)) {}

template <typename T>
NoGradGuard<T>::~NoGradGuard() {
  Tape<T>::exchange_active(saved_);
}

template <typename T>
void Tape<T>::record(std::string_view op, std::vector<NodePtr> inputs, NodePtr output,
                     std::function<void()> rule) {
  output->producer = this;
  output->requires_grad = true;
  entries_.push_back(Entry{op, std::move(inputs), std::move(output), std::move(rule)});
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined()) throw std::invalid_argument("backward on an undefined tensor");
  if (loss.numel() != 1) {
    throw ShapeError("backward needs a scalar loss, got shape " + shape_str(loss.shape()));
  }
  auto& root = loss.node();
  if (root.producer != this) {
    throw std::invalid_argument("backward: loss was not produced on this tape");
  }
  for (auto& e : entries_) e.output->grad.clear();
  root.grad.assign(1, T(1));

  const auto fault_op = backward_fault_op();
  const auto fault = static_cast<T>(backward_fault_factor());
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output->grad.empty()) continue;
    if (!fault_op.empty() && it->op == fault_op) {
      for (auto& g : it->output->grad) g *= fault;
    }
    it->rule();
  }
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;
template class NoGradGuard<float>;
template class NoGradGuard<double>;

}  // namespace vsa
