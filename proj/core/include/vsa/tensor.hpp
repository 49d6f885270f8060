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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vsa {

using Shape = std::vector<std::size_t>;

/// Thrown for any extent/rank disagreement between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
class Tape;

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  // Empty until a gradient reaches this node; treated as all zeros.
  std::vector<T> grad;
  bool requires_grad = false;
  // Set when the node is the output of an operation recorded on a tape.
  const void* producer = nullptr;

  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), T(0));
  }
};

}  // namespace detail

/// Dense row-major array with an optional gradient slot.
///
/// Tensors are cheap handles: copies share the underlying storage. Operations
/// in ops.hpp always allocate fresh outputs, so a tensor's values never change
/// after construction unless a caller explicitly writes through
/// mutable_data() (the optimizer does this for parameters).
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);

  static Tensor scalar(T value) { return Tensor(Shape{1}, std::vector<T>{value}); }

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node().shape; }
  std::size_t rank() const { return node().shape.size(); }
  /// Extent along `axis`; negative axes count from the back.
  std::size_t dim(std::ptrdiff_t axis) const;
  std::size_t numel() const { return node().data.size(); }

  std::span<const T> data() const { return node().data; }
  std::span<T> mutable_data() { return node().data; }
  T at(std::size_t flat_index) const { return node().data.at(flat_index); }
  /// Value of a single-element tensor.
  T item() const;

  bool requires_grad() const { return node().requires_grad; }
  Tensor& set_requires_grad(bool on = true) {
    node().requires_grad = on;
    return *this;
  }

  bool has_grad() const { return !node().grad.empty(); }
  /// Accumulated gradient; all zeros when nothing has flowed in yet.
  std::vector<T> grad() const;
  std::span<T> mutable_grad();
  void zero_grad() { node().grad.clear(); }

  /// Deep copy of the values, detached from any tape and without requires_grad.
  Tensor detach() const;
  bool same_storage(const Tensor& other) const noexcept { return node_ == other.node_; }

  // Internal plumbing for op implementations.
  detail::Node<T>& node() const;
  const std::shared_ptr<detail::Node<T>>& node_ptr() const noexcept { return node_; }

 private:
  std::shared_ptr<detail::Node<T>> node_;
};

/// Ordered record of differentiable operations.
///
/// Constructing a Tape makes it the active tape for the calling thread (tapes
/// nest; destruction restores the previous one). Operations whose inputs
/// require gradients append an entry while a tape is active. backward() walks
/// the entries in exact reverse order of recording.
template <typename T>
class Tape {
 public:
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active() noexcept;
  /// Installs `tape` as the active tape and returns the previous one.
  static Tape* exchange_active(Tape* tape) noexcept;

  void record(std::string_view op, std::vector<NodePtr> inputs, NodePtr output,
              std::function<void()> rule);

  /// Seeds d(loss)/d(loss) = 1 and propagates to every requires_grad leaf.
  /// Leaf gradients accumulate across calls until zeroed; intermediate
  /// gradients are reset at the start of each call.
  void backward(const Tensor<T>& loss);

  std::size_t size() const noexcept { return entries_.size(); }
  void clear() noexcept { entries_.clear(); }

 private:
  struct Entry {
    std::string_view op;
    std::vector<NodePtr> inputs;
    NodePtr output;
    std::function<void()> rule;
  };
  std::vector<Entry> entries_;
  Tape* previous_ = nullptr;
};

/// Suspends recording on the calling thread for its lifetime.
template <typename T>
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Tape<T>* saved_;
};

/// Multiplies the incoming gradient of every recorded op named `op` by
/// `factor` during backward. Used only to prove the gradient checker catches
/// a wrong rule; pass an empty name to disable.
void set_backward_fault(std::string op, double factor = 1.5);
std::string_view backward_fault_op() noexcept;
double backward_fault_factor() noexcept;

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;
extern template class NoGradGuard<float>;
extern template class NoGradGuard<double>;

}  // namespace vsa
