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
#include <vector>

#include "vsa/augment.hpp"
#include "vsa/data.hpp"
#include "vsa/model.hpp"
#include "vsa/optim.hpp"
#include "vsa/train.hpp"

namespace vsa {

struct ClassifyOptions {
  OptimConfig optim = OptimConfig::linear_probing();
  std::size_t num_classes = kNumShapeClasses;
  /// Views averaged per prediction, evenly spaced around the rig (0 = all).
  std::size_t views = 0;
  std::uint64_t seed = 0;
  /// Replace training labels by a seeded permutation (chance-level control).
  bool shuffle_labels = false;
  /// Fine-tuning only: augmentation applied to training views.
  AugmentPolicy augment;
  std::size_t workers = 1;
  std::function<void(const StepRecord&)> on_step;
};

struct ClassifyResult {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::vector<StepRecord> curve;
  std::uint64_t encoder_checksum_before = 0;
  std::uint64_t encoder_checksum_after = 0;
};

/// `k` view indices evenly spaced over [0, n).
std::vector<std::size_t> spread_views(std::size_t n, std::size_t k);

/// Combined checksum of every encoder parameter.
template <typename T>
std::uint64_t encoder_checksum(VsaWeights<T>& weights);

/// Per-object features: the mean over the selected views of the mean over
/// unmasked encoder tokens. Shape (objects, enc_dim). Never records a tape.
template <typename T>
Tensor<T> view_pooled_features(const Dataset& data, const VsaConfig& config, const VsaWeights<T>& weights,
                               const std::vector<std::size_t>& views);

/// Trains a linear classifier on frozen, standardized encoder features.
/// Standardization uses training-set statistics only.
template <typename T>
ClassifyResult linear_probe(const VsaConfig& config, VsaWeights<T>& weights, const Dataset& train,
                            const Dataset& test, const ClassifyOptions& options);

/// End-to-end training of the encoder and a layer-normed linear head on
/// view-pooled features. `weights` is updated in place.
template <typename T>
ClassifyResult finetune(const VsaConfig& config, VsaWeights<T>& weights, const Dataset& train, const Dataset& test,
                        const ClassifyOptions& options);

}  // namespace vsa
