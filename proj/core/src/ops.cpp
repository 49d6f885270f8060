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

#include "vsa/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kernels.hpp"

namespace vsa {
namespace {

template <typename T>
using NodePtr = std::shared_ptr<detail::Node<T>>;

template <typename T>
bool recording(std::initializer_list<const Tensor<T>*> inputs) {
  if (Tape<T>::active() == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor<T>* t) { return t->requires_grad(); });
}

template <typename T, typename Rule>
void attach(std::string_view op, const Tensor<T>& out, std::vector<NodePtr<T>> inputs, Rule&& rule) {
  Tape<T>::active()->record(op, std::move(inputs), out.node_ptr(), std::function<void()>(std::forward<Rule>(rule)));
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.begin(), small.end(), big.end() - static_cast<std::ptrdiff_t>(small.size()));
}

// Output shape for suffix-broadcast binary ops.
Shape broadcast_suffix(const Shape& a, const Shape& b, const char* op) {
  if (a == b || is_suffix(b, a)) return a;
  if (is_suffix(a, b)) return b;
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

std::size_t normalize_axis(std::size_t axis, std::size_t rank, const char* op) {
  if (axis >= rank) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for rank " +
                     std::to_string(rank));
  }
  return axis;
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

template <typename T, typename Fwd, typename GradA, typename GradB>
Tensor<T> binary_op(const char* name, const Tensor<T>& a, const Tensor<T>& b, Fwd fwd, GradA ga, GradB gb) {
  const Shape out_shape = broadcast_suffix(a.shape(), b.shape(), name);
  const auto n = shape_numel(out_shape);
  const auto na = a.numel();
  const auto nb = b.numel();
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<T> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = fwd(ad[i % na], bd[i % nb]);
  Tensor<T> out(out_shape, std::move(values));
  if (recording({&a, &b})) {
    auto* an = &a.node();
    auto* bn = &b.node();
    auto* on = &out.node();
    attach(name, out, {a.node_ptr(), b.node_ptr()}, [an, bn, on, ga, gb] {
      const auto& g = on->grad;
      const auto na = an->data.size();
      const auto nb = bn->data.size();
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) an->grad[i % na] += ga(g[i], an->data[i % na], bn->data[i % nb]);
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) bn->grad[i % nb] += gb(g[i], an->data[i % na], bn->data[i % nb]);
      }
    });
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op<T>(
      "add", a, b, [](T x, T y) { return x + y; }, [](T g, T, T) { return g; }, [](T g, T, T) { return g; });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op<T>(
      "sub", a, b, [](T x, T y) { return x - y; }, [](T g, T, T) { return g; }, [](T g, T, T) { return -g; });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op<T>(
      "mul", a, b, [](T x, T y) { return x * y; }, [](T g, T, T y) { return g * y; },
      [](T g, T x, T) { return g * x; });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  std::vector<T> values(x.data().begin(), x.data().end());
  for (auto& v : values) v *= factor;
  Tensor<T> out(x.shape(), std::move(values));
  if (recording({&x})) {
    auto* xn = &x.node();
    auto* on = &out.node();
    attach("scale", out, {x.node_ptr()}, [xn, on, factor] {
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      for (std::size_t i = 0; i < on->grad.size(); ++i) xn->grad[i] += factor * on->grad[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() < 2 || b.rank() < 2) {
    throw ShapeError("matmul: operands need rank >= 2, got " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  auto m = a.dim(-2);
  const auto k = a.dim(-1);
  const auto n = b.dim(-1);
  if (b.dim(-2) != k) {
    throw ShapeError("matmul: inner extents differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  // Broadcast the batch axes, right-aligned.
  const Shape abatch(a.shape().begin(), a.shape().end() - 2);
  const Shape bbatch(b.shape().begin(), b.shape().end() - 2);
  const auto rank = std::max(abatch.size(), bbatch.size());
  Shape batch(rank, 1);
  std::vector<std::size_t> astride(rank, 0), bstride(rank, 0);
  {
    std::size_t as = 1, bs = 1;
    for (std::size_t r = 0; r < rank; ++r) {
      const auto i = rank - 1 - r;
      const std::size_t ae = r < abatch.size() ? abatch[abatch.size() - 1 - r] : 1;
      const std::size_t be = r < bbatch.size() ? bbatch[bbatch.size() - 1 - r] : 1;
      if (ae != be && ae != 1 && be != 1) {
        throw ShapeError("matmul: batch extents not broadcastable, " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
      }
      batch[i] = std::max(ae, be);
      astride[i] = ae == 1 ? 0 : as;
      bstride[i] = be == 1 ? 0 : bs;
      as *= ae;
      bs *= be;
    }
  }
  auto nbatch = shape_numel(batch);
  std::vector<std::size_t> aoff(nbatch), boff(nbatch);
  for (std::size_t flat = 0; flat < nbatch; ++flat) {
    std::size_t rem = flat, ao = 0, bo = 0;
    for (std::size_t r = rank; r-- > 0;) {
      const auto idx = rem % batch[r];
      rem /= batch[r];
      ao += idx * astride[r];
      bo += idx * bstride[r];
    }
    aoff[flat] = ao;
    boff[flat] = bo;
  }

  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  if (bbatch.empty() && nbatch > 1) {
    // Shared right operand: fold the batch into the row axis, one large GEMM.
    m *= nbatch;
    nbatch = 1;
    aoff.assign(1, 0);
    boff.assign(1, 0);
  }
  std::vector<T> values(nbatch * m * n, T(0));
  const T* ad = a.data().data();
  const T* bd = b.data().data();
  for (std::size_t i = 0; i < nbatch; ++i) {
    kernels::gemm_nn(m, n, k, ad + aoff[i] * m * k, bd + boff[i] * k * n, values.data() + i * m * n);
  }
  Tensor<T> out(out_shape, std::move(values));
  if (recording({&a, &b})) {
    auto* an = &a.node();
    auto* bn = &b.node();
    auto* on = &out.node();
    attach("matmul", out, {a.node_ptr(), b.node_ptr()}, [an, bn, on, m, n, k, aoff, boff] {
      const T* g = on->grad.data();
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < aoff.size(); ++i) {
          kernels::gemm_nt(m, n, k, g + i * m * n, bn->data.data() + boff[i] * k * n, an->grad.data() + aoff[i] * m * k);
        }
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < boff.size(); ++i) {
          kernels::gemm_tn(m, n, k, an->data.data() + aoff[i] * m * k, g + i * m * n, bn->grad.data() + boff[i] * k * n);
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  Tensor<T> out(std::move(shape), std::vector<T>(x.data().begin(), x.data().end()));
  if (recording({&x})) {
    auto* xn = &x.node();
    auto* on = &out.node();
    attach("reshape", out, {x.node_ptr()}, [xn, on] {
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      for (std::size_t i = 0; i < on->grad.size(); ++i) xn->grad[i] += on->grad[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& perm) {
  const auto rank = x.rank();
  if (perm.size() != rank) throw ShapeError("permute: permutation rank mismatch for " + shape_str(x.shape()));
  std::vector<bool> seen(rank, false);
  for (auto p : perm) {
    if (p >= rank || seen[p]) throw ShapeError("permute: invalid permutation");
    seen[p] = true;
  }
  const auto& in_shape = x.shape();
  std::vector<std::size_t> in_stride(rank, 1);
  for (std::size_t i = rank - 1; i-- > 0;) in_stride[i] = in_stride[i + 1] * in_shape[i + 1];
  Shape out_shape(rank);
  std::vector<std::size_t> src_stride(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = in_shape[perm[i]];
    src_stride[i] = in_stride[perm[i]];
  }
  // map[o] = input flat index feeding output flat index o.
  const auto n = x.numel();
  std::vector<std::size_t> map(n);
  {
    std::vector<std::size_t> counter(rank, 0);
    std::size_t src = 0;
    for (std::size_t o = 0; o < n; ++o) {
      map[o] = src;
      for (std::size_t r = rank; r-- > 0;) {
        ++counter[r];
        src += src_stride[r];
        if (counter[r] < out_shape[r]) break;
        src -= src_stride[r] * out_shape[r];
        counter[r] = 0;
      }
    }
  }
  const auto xd = x.data();
  std::vector<T> values(n);
  for (std::size_t o = 0; o < n; ++o) values[o] = xd[map[o]];
  Tensor<T> out(out_shape, std::move(values));
  if (recording({&x})) {
    auto* xn = &x.node();
    auto* on = &out.node();
    attach("permute", out, {x.node_ptr()}, [xn, on, map = std::move(map)] {
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      for (std::size_t o = 0; o < map.size(); ++o) xn->grad[map[o]] += on->grad[o];
    });
  }
  return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x, std::size_t axis0, std::size_t axis1) {
  normalize_axis(axis0, x.rank(), "transpose");
  normalize_axis(axis1, x.rank(), "transpose");
  std::vector<std::size_t> perm(x.rank());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::swap(perm[axis0], perm[axis1]);
  return permute(x, perm);
}

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x) {
  const auto d = x.dim(-1);
  const auto rows = x.numel() / d;
  const auto xd = x.data();
  std::vector<T> values(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xd.data() + r * d;
    T* o = values.data() + r * d;
    const T mx = *std::max_element(in, in + d);
    double total = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    }
    const T inv = static_cast<T>(1.0 / total);
    for (std::size_t j = 0; j < d; ++j) o[j] *= inv;
  }
  Tensor<T> out(x.shape(), std::move(values));
  if (recording({&x})) {
    auto* xn = &x.node();
    auto* on = &out.node();
    attach("softmax", out, {x.node_ptr()}, [xn, on, d, rows] {
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* y = on->data.data() + r * d;
        const T* g = on->grad.data() + r * d;
        T* dx = xn->grad.data() + r * d;
        T dot = T(0);
        for (std::size_t j = 0; j < d; ++j) dot += g[j] * y[j];
        for (std::size_t j = 0; j < d; ++j) dx[j] += y[j] * (g[j] - dot);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, double eps) {
  const auto d = x.dim(-1);
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    throw ShapeError("layer_norm: affine parameters must have shape (" + std::to_string(d) + "), got " +
                     shape_str(gamma.shape()) + " and " + shape_str(beta.shape()));
  }
  if (!(eps > 0.0)) throw std::invalid_argument("layer_norm: eps must be positive");
  const auto rows = x.numel() / d;
  const auto xd = x.data();
  const auto gd = gamma.data();
  const auto bd = beta.data();
  std::vector<T> values(x.numel());
  std::vector<T> xhat(x.numel());
  std::vector<T> rstd(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xd.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += in[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = in[j] - mu;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    rstd[r] = static_cast<T>(inv);
    for (std::size_t j = 0; j < d; ++j) {
      const T h = static_cast<T>((in[j] - mu) * inv);
      xhat[r * d + j] = h;
      values[r * d + j] = gd[j] * h + bd[j];
    }
  }
  Tensor<T> out(x.shape(), std::move(values));
  if (recording({&x, &gamma, &beta})) {
    auto* xn = &x.node();
    auto* gn = &gamma.node();
    auto* bn = &beta.node();
    auto* on = &out.node();
    attach("layer_norm", out, {x.node_ptr(), gamma.node_ptr(), beta.node_ptr()},
           [xn, gn, bn, on, d, rows, xhat = std::move(xhat), rstd = std::move(rstd)] {
             const auto& g = on->grad;
             if (gn->requires_grad || bn->requires_grad) {
               std::vector<T> dg(d, T(0)), db(d, T(0));
               for (std::size_t r = 0; r < rows; ++r) {
                 for (std::size_t j = 0; j < d; ++j) {
                   dg[j] += g[r * d + j] * xhat[r * d + j];
                   db[j] += g[r * d + j];
                 }
               }
               if (gn->requires_grad) {
                 gn->ensure_grad();
                 for (std::size_t j = 0; j < d; ++j) gn->grad[j] += dg[j];
               }
               if (bn->requires_grad) {
                 bn->ensure_grad();
                 for (std::size_t j = 0; j < d; ++j) bn->grad[j] += db[j];
               }
             }
             if (!xn->requires_grad) return;
             xn->ensure_grad();
             const double inv_d = 1.0 / static_cast<double>(d);
             for (std::size_t r = 0; r < rows; ++r) {
               double mean_g = 0.0;
               double mean_gx = 0.0;
               for (std::size_t j = 0; j < d; ++j) {
                 const double gh = static_cast<double>(g[r * d + j]) * gn->data[j];
                 mean_g += gh;
                 mean_gx += gh * xhat[r * d + j];
               }
               mean_g *= inv_d;
               mean_gx *= inv_d;
               for (std::size_t j = 0; j < d; ++j) {
                 const double gh = static_cast<double>(g[r * d + j]) * gn->data[j];
                 xn->grad[r * d + j] += static_cast<T>(rstd[r] * (gh - mean_g - xhat[r * d + j] * mean_gx));
               }
             }
           });
  }
  return out;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  const auto xd = x.data();
  std::vector<T> values(x.numel());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = xd[i];
    values[i] = static_cast<T>(0.5 * v * (1.0 + std::tanh(kC * (v + kA * v * v * v))));
  }
  Tensor<T> out(x.shape(), std::move(values));
  if (recording({&x})) {
    auto* xn = &x.node();
    auto* on = &out.node();
    attach("gelu", out, {x.node_ptr()}, [xn, on] {
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      for (std::size_t i = 0; i < on->grad.size(); ++i) {
        const double v = xn->data[i];
        const double t = std::tanh(kC * (v + kA * v * v * v));
        const double dt = (1.0 - t * t) * kC * (1.0 + 3.0 * kA * v * v);
        xn->grad[i] += static_cast<T>(on->grad[i] * (0.5 * (1.0 + t) + 0.5 * v * dt));
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const auto& first = parts.front().shape();
  normalize_axis(axis, first.size(), "concat");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) throw ShapeError("concat: mismatched extents " + shape_str(first) + " vs " + shape_str(s));
    out_shape[axis] += s[axis];
  }
  const auto split = split_at(out_shape, axis);
  std::vector<T> values(shape_numel(out_shape));
  std::vector<std::size_t> offsets;  // axis offset of each part
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const auto ext = p.shape()[axis];
    const auto pd = p.data();
    for (std::size_t o = 0; o < split.outer; ++o) {
      std::copy_n(pd.data() + o * ext * split.inner, ext * split.inner,
                  values.data() + (o * split.extent + offset) * split.inner);
    }
    offset += ext;
  }
  Tensor<T> out(out_shape, std::move(values));
  bool any = false;
  for (const auto& p : parts) any = any || p.requires_grad();
  if (Tape<T>::active() != nullptr && any) {
    std::vector<NodePtr<T>> inputs;
    std::vector<detail::Node<T>*> raw;
    for (const auto& p : parts) {
      inputs.push_back(p.node_ptr());
      raw.push_back(&p.node());
    }
    auto* on = &out.node();
    attach("concat", out, std::move(inputs), [raw, on, offsets, split, axis] {
      for (std::size_t pi = 0; pi < raw.size(); ++pi) {
        auto* pn = raw[pi];
        if (!pn->requires_grad) continue;
        pn->ensure_grad();
        const auto ext = pn->shape[axis];
        for (std::size_t o = 0; o < split.outer; ++o) {
          const T* src = on->grad.data() + (o * split.extent + offsets[pi]) * split.inner;
          T* dst = pn->grad.data() + o * ext * split.inner;
          for (std::size_t i = 0; i < ext * split.inner; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end) {
  normalize_axis(axis, x.rank(), "slice");
  if (begin >= end || end > x.shape()[axis]) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) + ") invalid for " +
                     shape_str(x.shape()));
  }
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return index_select(x, axis, idx);
}

template <typename T>
Tensor<T> index_select(const Tensor<T>& x, std::size_t axis, std::span<const std::size_t> indices) {
  normalize_axis(axis, x.rank(), "index_select");
  if (indices.empty()) throw ShapeError("index_select: empty index list");
  const auto split = split_at(x.shape(), axis);
  for (auto i : indices) {
    if (i >= split.extent) {
      throw ShapeError("index_select: index " + std::to_string(i) + " out of range for extent " +
                       std::to_string(split.extent));
    }
  }
  Shape out_shape = x.shape();
  out_shape[axis] = indices.size();
  const auto xd = x.data();
  std::vector<T> values(shape_numel(out_shape));
  const auto count = indices.size();
  for (std::size_t o = 0; o < split.outer; ++o) {
    for (std::size_t j = 0; j < count; ++j) {
      std::copy_n(xd.data() + (o * split.extent + indices[j]) * split.inner, split.inner,
                  values.data() + (o * count + j) * split.inner);
    }
  }
  Tensor<T> out(out_shape, std::move(values));
  if (recording({&x})) {
    auto* xn = &x.node();
    auto* on = &out.node();
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    attach("index_select", out, {x.node_ptr()}, [xn, on, idx = std::move(idx), split] {
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      const auto count = idx.size();
      for (std::size_t o = 0; o < split.outer; ++o) {
        for (std::size_t j = 0; j < count; ++j) {
          const T* src = on->grad.data() + (o * count + j) * split.inner;
          T* dst = xn->grad.data() + (o * split.extent + idx[j]) * split.inner;
          for (std::size_t i = 0; i < split.inner; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, const std::vector<std::vector<std::size_t>>& rows) {
  if (x.rank() != 3) throw ShapeError("gather_rows: expected (b, n, d), got " + shape_str(x.shape()));
  const auto b = x.dim(0), n = x.dim(1), d = x.dim(2);
  if (rows.size() != b) throw ShapeError("gather_rows: need one row list per batch entry");
  const auto m = rows.front().size();
  if (m == 0) throw ShapeError("gather_rows: empty row list");
  std::vector<std::size_t> flat;  // source row (in units of d) per output row
  flat.reserve(b * m);
  for (std::size_t i = 0; i < b; ++i) {
    if (rows[i].size() != m) throw ShapeError("gather_rows: row lists differ in length");
    for (auto r : rows[i]) {
      if (r >= n) throw ShapeError("gather_rows: row " + std::to_string(r) + " out of range");
      flat.push_back(i * n + r);
    }
  }
  const auto xd = x.data();
  std::vector<T> values(b * m * d);
  for (std::size_t o = 0; o < flat.size(); ++o) std::copy_n(xd.data() + flat[o] * d, d, values.data() + o * d);
  Tensor<T> out(Shape{b, m, d}, std::move(values));
  if (recording({&x})) {
    auto* xn = &x.node();
    auto* on = &out.node();
    attach("gather_rows", out, {x.node_ptr()}, [xn, on, flat = std::move(flat), d] {
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      for (std::size_t o = 0; o < flat.size(); ++o) {
        const T* src = on->grad.data() + o * d;
        T* dst = xn->grad.data() + flat[o] * d;
        for (std::size_t i = 0; i < d; ++i) dst[i] += src[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mean_axis(const Tensor<T>& x, std::size_t axis) {
  normalize_axis(axis, x.rank(), "mean_axis");
  const auto split = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (out_shape.empty()) out_shape = {1};
  const auto xd = x.data();
  std::vector<T> values(split.outer * split.inner, T(0));
  const T inv = T(1) / static_cast<T>(split.extent);
  for (std::size_t o = 0; o < split.outer; ++o) {
    T* dst = values.data() + o * split.inner;
    for (std::size_t e = 0; e < split.extent; ++e) {
      const T* src = xd.data() + (o * split.extent + e) * split.inner;
      for (std::size_t i = 0; i < split.inner; ++i) dst[i] += src[i];
    }
    for (std::size_t i = 0; i < split.inner; ++i) dst[i] *= inv;
  }
  Tensor<T> out(out_shape, std::move(values));
  if (recording({&x})) {
    auto* xn = &x.node();
    auto* on = &out.node();
    attach("mean_axis", out, {x.node_ptr()}, [xn, on, split, inv] {
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      for (std::size_t o = 0; o < split.outer; ++o) {
        const T* src = on->grad.data() + o * split.inner;
        for (std::size_t e = 0; e < split.extent; ++e) {
          T* dst = xn->grad.data() + (o * split.extent + e) * split.inner;
          for (std::size_t i = 0; i < split.inner; ++i) dst[i] += src[i] * inv;
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  double total = 0.0;
  for (auto v : x.data()) total += v;
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(total));
  if (recording({&x})) {
    auto* xn = &x.node();
    auto* on = &out.node();
    attach("sum", out, {x.node_ptr()}, [xn, on] {
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      const T g = on->grad[0];
      for (auto& v : xn->grad) v += g;
    });
  }
  return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.numel()));
}

template <typename T>
Tensor<T> mse(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("mse: shape mismatch " + shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
  }
  const auto pd = pred.data();
  const auto td = target.data();
  const auto n = pred.numel();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = static_cast<double>(pd[i]) - td[i];
    total += diff * diff;
  }
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(total / static_cast<double>(n)));
  if (recording({&pred})) {
    auto* pn = &pred.node();
    auto* on = &out.node();
    auto tn = target.node_ptr();
    attach("mse", out, {pred.node_ptr()}, [pn, on, tn, n] {
      if (!pn->requires_grad) return;
      pn->ensure_grad();
      const T g = on->grad[0] * static_cast<T>(2.0 / static_cast<double>(n));
      for (std::size_t i = 0; i < n; ++i) pn->grad[i] += g * (pn->data[i] - tn->data[i]);
    });
  }
  return out;
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  if (logits.rank() != 2) throw ShapeError("cross_entropy: logits must be (batch, classes)");
  const auto b = logits.dim(0);
  const auto c = logits.dim(1);
  if (labels.size() != b) throw ShapeError("cross_entropy: label count does not match batch");
  for (auto l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= c) throw std::out_of_range("cross_entropy: label out of range");
  }
  const auto ld = logits.data();
  std::vector<T> probs(b * c);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const T* row = ld.data() + i * c;
    const T mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(static_cast<double>(row[j] - mx));
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = static_cast<T>(std::exp(static_cast<double>(row[j] - mx)) / z);
    total += std::log(z) - static_cast<double>(row[labels[i]] - mx);
  }
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(total / static_cast<double>(b)));
  if (recording({&logits})) {
    auto* xn = &logits.node();
    auto* on = &out.node();
    std::vector<int> lab(labels.begin(), labels.end());
    attach("cross_entropy", out, {logits.node_ptr()}, [xn, on, probs = std::move(probs), lab = std::move(lab), b, c] {
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      const T g = on->grad[0] / static_cast<T>(b);
      for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          const T target = static_cast<int>(j) == lab[i] ? T(1) : T(0);
          xn->grad[i * c + j] += g * (probs[i * c + j] - target);
        }
      }
    });
  }
  return out;
}

#define VSA_INSTANTIATE_OPS(T)                                                                  \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> scale(const Tensor<T>&, T);                                                \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                          \
  template Tensor<T> permute(const Tensor<T>&, const std::vector<std::size_t>&);                \
  template Tensor<T> transpose(const Tensor<T>&, std::size_t, std::size_t);                     \
  template Tensor<T> softmax_lastdim(const Tensor<T>&);                                         \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double);  \
  template Tensor<T> gelu(const Tensor<T>&);                                                    \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);                        \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t, std::size_t);            \
  template Tensor<T> index_select(const Tensor<T>&, std::size_t, std::span<const std::size_t>); \
  template Tensor<T> gather_rows(const Tensor<T>&, const std::vector<std::vector<std::size_t>>&); \
  template Tensor<T> mean_axis(const Tensor<T>&, std::size_t);                                  \
  template Tensor<T> sum(const Tensor<T>&);                                                     \
  template Tensor<T> mean(const Tensor<T>&);                                                    \
  template Tensor<T> mse(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> cross_entropy(const Tensor<T>&, std::span<const int>);

VSA_INSTANTIATE_OPS(float)
VSA_INSTANTIATE_OPS(double)

#undef VSA_INSTANTIATE_OPS

}  // namespace vsa
