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
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsa/augment.hpp"
#include "vsa/checkpoint.hpp"
#include "vsa/data.hpp"
#include "vsa/model.hpp"
#include "vsa/optim.hpp"

namespace vsa {

/// Raised when training diverges (non-finite loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepRecord {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;

  bool operator==(const StepRecord&) const = default;
};

/// One metrics-log line, `step,lr,loss`, printed with round-trip precision.
std::string format_metric(const StepRecord& record);

/// FNV-1a over the bit patterns of the values.
std::uint64_t checksum(std::span<const float> values);
template <typename T>
std::uint64_t checksum(const Tensor<T>& tensor);

/// A training minibatch. `sources[i]` is (b, c, H, W) for source slot i.
template <typename T>
struct Batch {
  std::vector<Tensor<T>> sources;
  std::vector<std::vector<PoseInput>> source_poses;
  Tensor<T> target;
  std::vector<PoseInput> target_poses;
};

/// Draws a view pair per sample (keyed by `step_seed` and the sample's slot
/// in the batch), augments the sources and copies the targets verbatim. The
/// target path is checked against an independent checksum of the stored
/// views; a mismatch throws std::logic_error.
template <typename T>
Batch<T> assemble_batch(const Dataset& data, std::span<const std::size_t> samples, std::size_t num_sources,
                        SamplerKind sampler, const AugmentPolicy& augment, std::uint64_t step_seed,
                        std::size_t workers = 1);

struct PretrainOptions {
  VsaConfig model;
  OptimConfig optim = OptimConfig::pretraining();
  SamplerKind sampler = SamplerKind::random;
  AugmentPolicy augment;
  std::uint64_t seed = 0;
  /// Stop once this many steps have run in total (0 = full schedule). The
  /// schedule itself is unchanged, so a stopped run can be resumed.
  std::size_t stop_after = 0;
  /// Write a checkpoint every this many steps (0 = only at the end).
  std::size_t checkpoint_every = 0;
  /// Receives metrics.csv and checkpoints; empty disables all file output.
  std::filesystem::path out_dir;
  std::string run_config;
  std::size_t workers = 1;
  std::function<void(const StepRecord&)> on_step;
};

template <typename T>
struct PretrainResult {
  VsaWeights<T> weights;
  std::vector<StepRecord> curve;  // steps run by this call
  std::size_t step = 0;           // global step reached
  std::size_t total_steps = 0;
  std::vector<NamedArray> optimizer_state;
};

inline const char* kMetricsFile = "metrics.csv";
inline const char* kCheckpointFile = "checkpoint.vsackpt";

std::size_t steps_per_epoch(std::size_t samples, std::size_t batch_size);

/// Throws std::invalid_argument when the dataset cannot feed the model.
void check_compatible(const VsaConfig& model, const Dataset& data);

/// Masked view-synthesis pretraining with AdamW and warmup + cosine decay.
/// Pass `resume` to continue from a checkpoint written by an earlier call
/// with the same options; the continued run matches an uninterrupted one
/// bit for bit.
template <typename T>
PretrainResult<T> pretrain(const Dataset& data, const PretrainOptions& options,
                           const CheckpointFile* resume = nullptr);

template <typename T>
CheckpointFile make_checkpoint(const VsaConfig& config, VsaWeights<T>& weights,
                               const std::vector<NamedArray>& optimizer_state, std::size_t step, std::uint64_t seed,
                               const std::string& run_config);

/// Mean loss over the trailing `window` entries.
double smoothed_loss(const std::vector<StepRecord>& curve, std::size_t window);

}  // namespace vsa
