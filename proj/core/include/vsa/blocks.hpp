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
#include <functional>
#include <string>

#include "vsa/ops.hpp"
#include "vsa/rng.hpp"
#include "vsa/tensor.hpp"

namespace vsa {

struct AttentionConfig {
  std::size_t dim = 0;
  std::size_t heads = 1;

  std::size_t head_dim() const { return dim / heads; }
  /// Throws std::invalid_argument unless dim > 0 and heads divides dim.
  void validate() const;
};

inline constexpr std::size_t kMlpRatio = 4;
inline constexpr double kInitStd = 0.02;

/// Visitor over (qualified name, parameter) pairs.
template <typename T>
using ParamVisitor = std::function<void(const std::string&, Tensor<T>&)>;

/// Affine map y = x W + b with W stored (in, out).
template <typename T>
struct Linear {
  Tensor<T> weight;
  Tensor<T> bias;

  static Linear init(std::size_t in, std::size_t out, Rng& rng, bool zero = false);
  Tensor<T> operator()(const Tensor<T>& x) const { return add(matmul(x, weight), bias); }
  void visit(const std::string& prefix, const ParamVisitor<T>& fn);
};

template <typename T>
struct Norm {
  Tensor<T> gamma;
  Tensor<T> beta;

  static Norm init(std::size_t dim);
  Tensor<T> operator()(const Tensor<T>& x) const { return layer_norm(x, gamma, beta); }
  void visit(const std::string& prefix, const ParamVisitor<T>& fn);
};

/// Pre-norm transformer block parameters: attention projections, two-layer
/// MLP (hidden = 4 * dim) and two layer-norm affine pairs. Cross-attention
/// blocks additionally normalize their key and value streams.
template <typename T>
struct BlockWeights {
  Norm<T> norm1;
  Linear<T> q, k, v, proj;
  Norm<T> norm2;
  Linear<T> fc1, fc2;
  Norm<T> key_norm;    // cross-attention only
  Norm<T> value_norm;  // cross-attention only

  /// Projections ~ truncated normal(0.02); biases, `proj` and `fc2` start at
  /// zero so a fresh block is an identity on its residual stream.
  static BlockWeights init(std::size_t dim, Rng& rng, bool cross = false);
  bool is_cross() const { return key_norm.gamma.defined(); }
  void visit(const std::string& prefix, const ParamVisitor<T>& fn);
};

/// Multi-head scaled dot-product attention on already-projected streams.
/// q: (b, Lq, dim), k and v: (b, Lk, dim) -> (b, Lq, dim).
template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, const AttentionConfig& cfg);

/// Attention probabilities (b, heads, Lq, Lk) for inspection.
template <typename T>
Tensor<T> attention_weights(const Tensor<T>& q, const Tensor<T>& k, const AttentionConfig& cfg);

/// x + proj(attn(norm1 x)), then + fc2(gelu(fc1(norm2 .))).
template <typename T>
Tensor<T> self_attention_block(const Tensor<T>& x, const BlockWeights<T>& w, const AttentionConfig& cfg);

/// The residual stream is the query: the output has the query's length. Key
/// and value must share a length.
template <typename T>
Tensor<T> cross_attention_block(const Tensor<T>& value, const Tensor<T>& key, const Tensor<T>& query,
                                const BlockWeights<T>& w, const AttentionConfig& cfg);

/// (c, H, W) -> (H/p * W/p, c*p*p), or batched (b, c, H, W) -> (b, N, c*p*p).
/// Patches are in row-major grid order; each patch is flattened channel,
/// row, column.
template <typename T>
Tensor<T> patchify(const Tensor<T>& image, std::size_t patch);

/// Exact inverse of patchify for an (N, c*p*p) or (b, N, c*p*p) input.
template <typename T>
Tensor<T> unpatchify(const Tensor<T>& patches, std::size_t height, std::size_t width, std::size_t patch);

/// Fixed 2-D sine/cosine embedding for a square grid of num_patches cells.
template <typename T>
Tensor<T> sincos_pos_embed(std::size_t num_patches, std::size_t dim);

}  // namespace vsa
