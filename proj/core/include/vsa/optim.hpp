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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vsa/checkpoint.hpp"
#include "vsa/tensor.hpp"

namespace vsa {

struct OptimConfig {
  double base_lr = 1.5e-4;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  std::size_t batch_size = 160;
  std::size_t warmup_epochs = 40;
  std::size_t total_epochs = 200;

  /// base_lr scaled linearly with the batch size relative to 256.
  double peak_lr() const { return base_lr * static_cast<double>(batch_size) / 256.0; }
  void validate() const;
  bool operator==(const OptimConfig&) const = default;

  static OptimConfig pretraining();
  static OptimConfig finetuning();
  static OptimConfig linear_probing();
};

/// Linear warmup from 0 to peak, then half-cosine decay to 0 at total_steps;
/// 0 beyond the end.
double lr_at(std::size_t step, double peak, std::size_t warmup_steps, std::size_t total_steps);

/// Schedule of `cfg` with epochs converted to steps.
struct LrSchedule {
  double peak = 0.0;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 0;

  static LrSchedule from(const OptimConfig& cfg, std::size_t steps_per_epoch);
  double at(std::size_t step) const { return lr_at(step, peak, warmup_steps, total_steps); }
};

/// One bias-corrected AdamW update of `w` in place, with weight decay
/// decoupled from the gradient. `step` counts from 1.
template <typename T>
void adamw_update(std::span<T> w, std::span<const T> g, std::span<T> m, std::span<T> v, std::size_t step, double lr,
                  const OptimConfig& cfg, bool decay);

/// AdamW over a fixed list of named parameters. Decay applies to matrices and
/// embeddings (rank >= 2) unless `decay_all` is set; norms and biases are
/// exempt.
template <typename T>
class AdamW {
 public:
  AdamW(std::vector<std::pair<std::string, Tensor<T>>> params, OptimConfig cfg, bool decay_all = false);

  /// Applies the accumulated gradients, then clears them. Parameters that
  /// received no gradient are still decayed and their moments still decay.
  void step(double lr);
  void zero_grad();

  std::size_t steps() const { return steps_; }
  const OptimConfig& config() const { return cfg_; }

  /// Moments as "adam.m/<name>" and "adam.v/<name>" arrays.
  std::vector<NamedArray> export_state() const;
  /// Restores moments and the step counter. Throws FormatError on a missing or
  /// mis-shaped moment.
  void import_state(const std::vector<NamedArray>& arrays, std::size_t steps);

 private:
  struct Slot {
    std::string name;
    Tensor<T> param;
    std::vector<T> m;
    std::vector<T> v;
    bool decay = false;
  };
  std::vector<Slot> slots_;
  OptimConfig cfg_;
  std::size_t steps_ = 0;
};

}  // namespace vsa
