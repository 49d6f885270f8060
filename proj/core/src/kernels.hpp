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

namespace vsa::kernels {

// Row-major GEMM variants. All accumulate into C (C += ...).
// nn: C[m,n] += A[m,k] * B[k,n]
// tn: C[k,n] += A[m,k]^T * B[m,n]
// nt: C[m,k] += A[m,n] * B[k,n]^T
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c);
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c);
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c);

/// Worker count from VSA_NUM_THREADS (default 1).
std::size_t thread_count();

}  // namespace vsa::kernels
