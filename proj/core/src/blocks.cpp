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

#include "vsa/blocks.hpp"

#include <cmath>
#include <stdexcept>

namespace vsa {

void AttentionConfig::validate() const {
  if (dim == 0 || heads == 0 || dim % heads != 0) {
    throw std::invalid_argument("attention: dim " + std::to_string(dim) + " is not divisible by " +
                                std::to_string(heads) + " heads");
  }
}

template <typename T>
Linear<T> Linear<T>::init(std::size_t in, std::size_t out, Rng& rng, bool zero) {
  Linear l;
  std::vector<T> w(in * out, T(0));
  if (!zero) {
    for (auto& x : w) x = static_cast<T>(truncated_normal(rng, kInitStd));
  }
  l.weight = Tensor<T>(Shape{in, out}, std::move(w));
  l.bias = Tensor<T>(Shape{out}, T(0));
  l.weight.set_requires_grad();
  l.bias.set_requires_grad();
  return l;
}

template <typename T>
void Linear<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  fn(prefix + ".weight", weight);
  fn(prefix + ".bias", bias);
}

template <typename T>
Norm<T> Norm<T>::init(std::size_t dim) {
  Norm n;
  n.gamma = Tensor<T>(Shape{dim}, T(1));
  n.beta = Tensor<T>(Shape{dim}, T(0));
  n.gamma.set_requires_grad();
  n.beta.set_requires_grad();
  return n;
}

template <typename T>
void Norm<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  fn(prefix + ".gamma", gamma);
  fn(prefix + ".beta", beta);
}

template <typename T>
BlockWeights<T> BlockWeights<T>::init(std::size_t dim, Rng& rng, bool cross) {
  BlockWeights b;
  b.norm1 = Norm<T>::init(dim);
  b.q = Linear<T>::init(dim, dim, rng);
  b.k = Linear<T>::init(dim, dim, rng);
  b.v = Linear<T>::init(dim, dim, rng);
  b.proj = Linear<T>::init(dim, dim, rng, /*zero=*/true);
  b.norm2 = Norm<T>::init(dim);
  b.fc1 = Linear<T>::init(dim, kMlpRatio * dim, rng);
  b.fc2 = Linear<T>::init(kMlpRatio * dim, dim, rng, /*zero=*/true);
  if (cross) {
    b.key_norm = Norm<T>::init(dim);
    b.value_norm = Norm<T>::init(dim);
  }
  return b;
}

template <typename T>
void BlockWeights<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  norm1.visit(prefix + ".norm1", fn);
  if (is_cross()) {
    key_norm.visit(prefix + ".key_norm", fn);
    value_norm.visit(prefix + ".value_norm", fn);
  }
  q.visit(prefix + ".q", fn);
  k.visit(prefix + ".k", fn);
  v.visit(prefix + ".v", fn);
  proj.visit(prefix + ".proj", fn);
  norm2.visit(prefix + ".norm2", fn);
  fc1.visit(prefix + ".fc1", fn);
  fc2.visit(prefix + ".fc2", fn);
}

namespace {

template <typename T>
void check_stream(const Tensor<T>& x, const AttentionConfig& cfg, const char* what) {
  if (x.rank() != 3) throw ShapeError(std::string("attention: ") + what + " must be (b, L, dim), got " + shape_str(x.shape()));
  if (x.dim(2) != cfg.dim) {
    throw ShapeError(std::string("attention: ") + what + " width " + std::to_string(x.dim(2)) +
                     " does not match dim " + std::to_string(cfg.dim));
  }
}

// (b, L, dim) -> (b, heads, L, head_dim)
template <typename T>
Tensor<T> split_heads(const Tensor<T>& x, const AttentionConfig& cfg) {
  const auto b = x.dim(0), len = x.dim(1);
  if (cfg.heads == 1) return reshape(x, Shape{b, 1, len, cfg.dim});
  return permute(reshape(x, Shape{b, len, cfg.heads, cfg.head_dim()}), {0, 2, 1, 3});
}

template <typename T>
Tensor<T> merge_heads(const Tensor<T>& x, const AttentionConfig& cfg) {
  const auto b = x.dim(0), len = x.dim(2);
  if (cfg.heads == 1) return reshape(x, Shape{b, len, cfg.dim});
  return reshape(permute(x, {0, 2, 1, 3}), Shape{b, len, cfg.dim});
}

template <typename T>
void check_qk(const Tensor<T>& q, const Tensor<T>& k, const AttentionConfig& cfg) {
  cfg.validate();
  check_stream(q, cfg, "query");
  check_stream(k, cfg, "key");
  if (q.dim(0) != k.dim(0)) throw ShapeError("attention: query and key batch sizes differ");
}

}  // namespace

template <typename T>
Tensor<T> attention_weights(const Tensor<T>& q, const Tensor<T>& k, const AttentionConfig& cfg) {
  check_qk(q, k, cfg);
  const auto qh = split_heads(q, cfg);
  const auto kh = split_heads(k, cfg);
  const T scale_factor = static_cast<T>(1.0 / std::sqrt(static_cast<double>(cfg.head_dim())));
  return softmax_lastdim(scale(matmul(qh, transpose(kh, 2, 3)), scale_factor));
}

template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, const AttentionConfig& cfg) {
  check_qk(q, k, cfg);
  check_stream(v, cfg, "value");
  if (k.dim(1) != v.dim(1) || k.dim(0) != v.dim(0)) {
    throw ShapeError("attention: key " + shape_str(k.shape()) + " and value " + shape_str(v.shape()) +
                     " must share batch and length");
  }
  const auto probs = attention_weights(q, k, cfg);
  return merge_heads(matmul(probs, split_heads(v, cfg)), cfg);
}

template <typename T>
Tensor<T> self_attention_block(const Tensor<T>& x, const BlockWeights<T>& w, const AttentionConfig& cfg) {
  const auto h = w.norm1(x);
  const auto attended = add(x, w.proj(attention(w.q(h), w.k(h), w.v(h), cfg)));
  return add(attended, w.fc2(gelu(w.fc1(w.norm2(attended)))));
}

template <typename T>
Tensor<T> cross_attention_block(const Tensor<T>& value, const Tensor<T>& key, const Tensor<T>& query,
                                const BlockWeights<T>& w, const AttentionConfig& cfg) {
  if (!w.is_cross()) throw std::invalid_argument("cross_attention_block: weights lack key/value norms");
  if (key.rank() != 3 || value.rank() != 3 || key.dim(1) != value.dim(1)) {
    throw ShapeError("cross_attention_block: key " + shape_str(key.shape()) + " and value " +
                     shape_str(value.shape()) + " lengths differ");
  }
  const auto qn = w.norm1(query);
  const auto kn = w.key_norm(key);
  const auto vn = w.value_norm(value);
  const auto attended = add(query, w.proj(attention(w.q(qn), w.k(kn), w.v(vn), cfg)));
  return add(attended, w.fc2(gelu(w.fc1(w.norm2(attended)))));
}

template <typename T>
Tensor<T> patchify(const Tensor<T>& image, std::size_t patch) {
  const bool batched = image.rank() == 4;
  if (!batched && image.rank() != 3) throw ShapeError("patchify: expected (c, H, W) or (b, c, H, W)");
  const auto b = batched ? image.dim(0) : 1;
  const auto c = image.dim(-3), height = image.dim(-2), width = image.dim(-1);
  if (patch == 0 || height % patch != 0 || width % patch != 0) {
    throw ShapeError("patchify: image " + shape_str(image.shape()) + " is not divisible into " +
                     std::to_string(patch) + "-pixel patches");
  }
  const auto gh = height / patch, gw = width / patch;
  auto grid = reshape(image, Shape{b, c, gh, patch, gw, patch});
  auto out = reshape(permute(grid, {0, 2, 4, 1, 3, 5}), Shape{b, gh * gw, c * patch * patch});
  return batched ? out : reshape(out, Shape{gh * gw, c * patch * patch});
}

template <typename T>
Tensor<T> unpatchify(const Tensor<T>& patches, std::size_t height, std::size_t width, std::size_t patch) {
  const bool batched = patches.rank() == 3;
  if (!batched && patches.rank() != 2) throw ShapeError("unpatchify: expected (N, c*p*p) or (b, N, c*p*p)");
  if (patch == 0 || height % patch != 0 || width % patch != 0) throw ShapeError("unpatchify: bad patch size");
  const auto b = batched ? patches.dim(0) : 1;
  const auto gh = height / patch, gw = width / patch;
  if (patches.dim(-2) != gh * gw) {
    throw ShapeError("unpatchify: " + std::to_string(patches.dim(-2)) + " patches cannot tile a " +
                     std::to_string(height) + "x" + std::to_string(width) + " image");
  }
  const auto per = patches.dim(-1);
  if (per % (patch * patch) != 0) throw ShapeError("unpatchify: patch length is not c*p*p");
  const auto c = per / (patch * patch);
  auto grid = reshape(patches, Shape{b, gh, gw, c, patch, patch});
  auto out = reshape(permute(grid, {0, 3, 1, 4, 2, 5}), Shape{b, c, height, width});
  return batched ? out : reshape(out, Shape{c, height, width});
}

template <typename T>
Tensor<T> sincos_pos_embed(std::size_t num_patches, std::size_t dim) {
  if (dim == 0 || dim % 2 != 0) throw std::invalid_argument("sincos_pos_embed: dim must be even, got " + std::to_string(dim));
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(num_patches))));
  if (side * side != num_patches) throw std::invalid_argument("sincos_pos_embed: patch count must be a square");
  // Rows take the first half (rounded up to an even count), columns the rest.
  const std::size_t row_dims = 2 * ((dim + 3) / 4);
  const std::size_t col_dims = dim - row_dims;
  auto encode = [](double pos, std::size_t dims, T* out) {
    const auto half = dims / 2;
    for (std::size_t i = 0; i < half; ++i) {
      const double omega = 1.0 / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(half));
      out[i] = static_cast<T>(std::sin(pos * omega));
      out[half + i] = static_cast<T>(std::cos(pos * omega));
    }
  };
  std::vector<T> values(num_patches * dim);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      T* row = values.data() + (r * side + c) * dim;
      encode(static_cast<double>(r), row_dims, row);
      if (col_dims > 0) encode(static_cast<double>(c), col_dims, row + row_dims);
    }
  }
  return Tensor<T>(Shape{num_patches, dim}, std::move(values));
}

#define VSA_INSTANTIATE_BLOCKS(T)                                                                              \
  template struct Linear<T>;                                                                                   \
  template struct Norm<T>;                                                                                     \
  template struct BlockWeights<T>;                                                                             \
  template Tensor<T> attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const AttentionConfig&);  \
  template Tensor<T> attention_weights(const Tensor<T>&, const Tensor<T>&, const AttentionConfig&);            \
  template Tensor<T> self_attention_block(const Tensor<T>&, const BlockWeights<T>&, const AttentionConfig&);   \
  template Tensor<T> cross_attention_block(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,               \
                                           const BlockWeights<T>&, const AttentionConfig&);                    \
  template Tensor<T> patchify(const Tensor<T>&, std::size_t);                                                  \
  template Tensor<T> unpatchify(const Tensor<T>&, std::size_t, std::size_t, std::size_t);                      \
  template Tensor<T> sincos_pos_embed<T>(std::size_t, std::size_t);

VSA_INSTANTIATE_BLOCKS(float)
VSA_INSTANTIATE_BLOCKS(double)

#undef VSA_INSTANTIATE_BLOCKS

}  // namespace vsa
