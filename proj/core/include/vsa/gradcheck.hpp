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

#include <functional>
#include <string>
#include <vector>

#include "vsa/tensor.hpp"

namespace vsa {

inline constexpr double kFiniteDiffEps = 1e-5;

struct GradCheckResult {
  /// max over leaf entries of |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
  double max_rel_error = 0.0;
  std::size_t worst_leaf = 0;
  std::size_t worst_index = 0;
  std::size_t entries_checked = 0;
};

/// Compares reverse-mode gradients of a scalar function against central
/// finite differences. `f` is evaluated once on a fresh tape for the analytic
/// gradient, then twice per leaf entry with recording suspended. Leaves are
/// marked requires_grad and their gradients are reset; values are restored.
GradCheckResult finite_diff_check(const std::function<Tensor<double>()>& f, std::vector<Tensor<double>> leaves,
                                  double eps = kFiniteDiffEps);

}  // namespace vsa
