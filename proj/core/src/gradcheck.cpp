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

#include "vsa/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace vsa {

GradCheckResult finite_diff_check(const std::function<Tensor<double>()>& f, std::vector<Tensor<double>> leaves,
                                  double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_check: eps must be positive");
  for (auto& leaf : leaves) {
    leaf.set_requires_grad(true);
    leaf.zero_grad();
  }

  std::vector<std::vector<double>> analytic;
  {
    Tape<double> tape;
    const auto loss = f();
    if (loss.numel() != 1) throw ShapeError("finite_diff_check: function must return a scalar");
    // A function that never touches the leaves has an all-zero gradient and
    // nothing recorded to differentiate.
    if (loss.requires_grad()) tape.backward(loss);
    for (const auto& leaf : leaves) analytic.push_back(leaf.grad());
  }

  GradCheckResult result;
  NoGradGuard<double> no_grad;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto values = leaves[li].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = f().item();
      values[i] = saved - eps;
      const double down = f().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[li][i];
      const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_leaf = li;
        result.worst_index = i;
      }
      ++result.entries_checked;
    }
  }
  for (auto& leaf : leaves) leaf.zero_grad();
  return result;
}

}  // namespace vsa
