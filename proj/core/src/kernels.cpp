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

#include "kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace vsa::kernels {

std::size_t thread_count() {
  static const std::size_t count = [] {
    if (const char* env = std::getenv("VSA_NUM_THREADS")) {
      try {
        const auto v = std::stoul(env);
        if (v > 0) return static_cast<std::size_t>(v);
      } catch (...) {
      }
    }
    return std::size_t{1};
  }();
  return count;
}

namespace {

constexpr std::size_t kParallelFlops = std::size_t{1} << 21;

// Splits [0, rows) into contiguous ranges. Each output element is produced by
// exactly one worker with the same arithmetic order, so results do not depend
// on the worker count.
template <typename Fn>
void for_rows(std::size_t rows, std::size_t flops, Fn&& fn) {
  const auto workers = std::min(thread_count(), rows);
  if (workers <= 1 || flops < kParallelFlops) {
    fn(std::size_t{0}, rows);
    return;
  }
  std::vector<std::jthread> pool;
  // Multiple of 4 so the blocked/tail split of gemm_nn matches the serial path.
  const auto chunk = ((rows + workers - 1) / workers + 3) / 4 * 4;
  for (std::size_t w = 1; w < workers; ++w) {
    const auto lo = w * chunk;
    const auto hi = std::min(rows, lo + chunk);
    if (lo < hi) pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  fn(std::size_t{0}, std::min(rows, chunk));
}

template <typename T>
void nn_rows(std::size_t lo, std::size_t hi, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  std::size_t i = lo;
  for (; i + 4 <= hi; i += 4) {
    T* c0 = c + i * n;
    T* c1 = c0 + n;
    T* c2 = c1 + n;
    T* c3 = c2 + n;
    const T* a0 = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T v0 = a0[p];
      const T v1 = a0[k + p];
      const T v2 = a0[2 * k + p];
      const T v3 = a0[3 * k + p];
      const T* br = b + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) {
        const T bj = br[j];
        c0[j] += v0 * bj;
        c1[j] += v1 * bj;
        c2[j] += v2 * bj;
        c3[j] += v3 * bj;
      }
    }
  }
  for (; i < hi; ++i) {
    T* ci = c + i * n;
    const T* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T v = ai[p];
      const T* br = b + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) ci[j] += v * br[j];
    }
  }
}

}  // namespace

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for_rows(m, m * n * k, [&](std::size_t lo, std::size_t hi) { nn_rows(lo, hi, n, k, a, b, c); });
}

template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for_rows(k, m * n * k, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = 0; i < m; ++i) {
      const T* ai = a + i * k;
      const T* bi = b + i * n;
      for (std::size_t p = lo; p < hi; ++p) {
        const T v = ai[p];
        T* cp = c + p * n;
#pragma omp simd
        for (std::size_t j = 0; j < n; ++j) cp[j] += v * bi[j];
      }
    }
  });
}

template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for_rows(m, m * n * k, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const T* ai = a + i * n;
      T* ci = c + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        const T* bp = b + p * n;
        T acc = T(0);
#pragma omp simd reduction(+ : acc)
        for (std::size_t j = 0; j < n; ++j) acc += ai[j] * bp[j];
        ci[p] += acc;
      }
    }
  });
}

template void gemm_nn<float>(std::size_t, std::size_t, std::size_t, const float*, const float*, float*);
template void gemm_nn<double>(std::size_t, std::size_t, std::size_t, const double*, const double*, double*);
template void gemm_tn<float>(std::size_t, std::size_t, std::size_t, const float*, const float*, float*);
template void gemm_tn<double>(std::size_t, std::size_t, std::size_t, const double*, const double*, double*);
template void gemm_nt<float>(std::size_t, std::size_t, std::size_t, const float*, const float*, float*);
template void gemm_nt<double>(std::size_t, std::size_t, std::size_t, const double*, const double*, double*);

}  // namespace vsa::kernels
