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
#include <span>
#include <vector>

#include "vsa/tensor.hpp"

// Differentiable tensor operations. Each op records a backward rule on the
// active Tape<T> when at least one input requires gradients.
namespace vsa {

/// Elementwise a + b. `b` may also be a trailing suffix of a's shape (e.g. a
/// bias of shape (d) against (.., d)); it is then broadcast over the leading
/// axes.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
/// Elementwise product with the same suffix broadcasting as add().
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);

/// Batched matrix product over the last two axes. Leading (batch) axes follow
/// numpy broadcasting, so a (b, m, k) activation times a (k, n) weight works.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);
/// Reorders axes: output axis i is input axis perm[i].
template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& perm);
template <typename T>
Tensor<T> transpose(const Tensor<T>& x, std::size_t axis0, std::size_t axis1);

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x);

inline constexpr double kLayerNormEps = 1e-6;
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     double eps = kLayerNormEps);

/// GELU, tanh approximation.
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);
/// Elements [begin, end) along `axis`.
template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end);
/// Picks entries along `axis` in the given order (repeats allowed).
template <typename T>
Tensor<T> index_select(const Tensor<T>& x, std::size_t axis, std::span<const std::size_t> indices);
/// Per-batch row gather on a (b, n, d) tensor: out[i] = x[i][rows[i]]. Every
/// row list must have the same length.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, const std::vector<std::vector<std::size_t>>& rows);

/// Mean over one axis; the axis is removed from the shape (rank-1 inputs
/// give shape (1)).
template <typename T>
Tensor<T> mean_axis(const Tensor<T>& x, std::size_t axis);
template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);

/// Mean squared error over all elements. The target never receives a
/// gradient.
template <typename T>
Tensor<T> mse(const Tensor<T>& pred, const Tensor<T>& target);

/// Mean softmax cross-entropy of (batch, classes) logits.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

}  // namespace vsa
