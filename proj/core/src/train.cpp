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

#include "vsa/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <thread>

namespace vsa {

namespace {

constexpr std::uint64_t kShuffleStream = 0x53485546464C45ULL;
constexpr std::uint64_t kStepStream = 0x5354455053ULL;
constexpr std::uint64_t kMaskStream = 0x4D41534BULL;

std::uint64_t fnv_step(std::uint64_t h, std::uint32_t bits) {
  for (int i = 0; i < 4; ++i) {
    h ^= (bits >> (8 * i)) & 0xFF;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, kShuffleStream, epoch));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[std::uniform_int_distribution<std::size_t>(0, i - 1)(rng)]);
  }
  return order;
}

template <typename F>
void parallel_for(std::size_t n, std::size_t workers, F&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
}

}  // namespace

std::string format_metric(const StepRecord& r) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g", r.step, r.lr, r.loss);
  return buf;
}

std::uint64_t checksum(std::span<const float> values) {
  std::uint64_t h = kFnvOffset;
  for (float v : values) h = fnv_step(h, std::bit_cast<std::uint32_t>(v));
  return h;
}

template <typename T>
std::uint64_t checksum(const Tensor<T>& tensor) {
  std::uint64_t h = kFnvOffset;
  for (T v : tensor.data()) {
    if constexpr (sizeof(T) == 4) {
      h = fnv_step(h, std::bit_cast<std::uint32_t>(v));
    } else {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      h = fnv_step(fnv_step(h, static_cast<std::uint32_t>(bits)), static_cast<std::uint32_t>(bits >> 32));
    }
  }
  return h;
}

template <typename T>
Batch<T> assemble_batch(const Dataset& data, std::span<const std::size_t> samples, std::size_t num_sources,
                        SamplerKind sampler, const AugmentPolicy& augment, std::uint64_t step_seed,
                        std::size_t workers) {
  const std::size_t b = samples.size();
  const auto& shape = data.image;
  const std::size_t pixels = shape.numel();
  if (b == 0) throw std::invalid_argument("assemble_batch: empty batch");

  std::vector<ViewPair> pairs(b);
  for (std::size_t j = 0; j < b; ++j) {
    if (samples[j] >= data.size()) throw std::out_of_range("assemble_batch: sample index out of range");
  }
  std::vector<std::vector<T>> source_pixels(num_sources, std::vector<T>(b * pixels));
  std::vector<T> target_pixels(b * pixels);
  parallel_for(b, workers, [&](std::size_t j) {
    Rng rng(derive_seed(step_seed, j));
    const auto& sample = data.samples[samples[j]];
    pairs[j] = sample_views(sampler, data.views, num_sources, rng);
    for (std::size_t i = 0; i < num_sources; ++i) {
      const auto view = sample.view(pairs[j].sources[i], shape);
      const auto augmented = augment.empty() ? std::vector<float>(view.begin(), view.end())
                                             : augment_source(view, shape, augment, rng);
      std::copy(augmented.begin(), augmented.end(), source_pixels[i].begin() + static_cast<std::ptrdiff_t>(j * pixels));
    }
    const auto target = sample.view(pairs[j].target, shape);
    std::copy(target.begin(), target.end(), target_pixels.begin() + static_cast<std::ptrdiff_t>(j * pixels));
  });

  Batch<T> batch;
  const Shape image_shape{b, shape.channels, shape.height, shape.width};
  batch.source_poses.assign(num_sources, {});
  for (std::size_t i = 0; i < num_sources; ++i) {
    batch.sources.emplace_back(image_shape, std::move(source_pixels[i]));
    for (std::size_t j = 0; j < b; ++j) {
      const auto v = pairs[j].sources[i];
      batch.source_poses[i].push_back(PoseInput{v, data.samples[samples[j]].poses[v]});
    }
  }
  batch.target = Tensor<T>(image_shape, std::move(target_pixels));
  for (std::size_t j = 0; j < b; ++j) {
    const auto v = pairs[j].target;
    batch.target_poses.push_back(PoseInput{v, data.samples[samples[j]].poses[v]});
  }

  // Sentinel: the assembled targets must be the stored views, untouched.
  std::uint64_t expected = kFnvOffset, actual = kFnvOffset;
  for (std::size_t j = 0; j < b; ++j) {
    for (float v : data.samples[samples[j]].view(pairs[j].target, shape)) {
      expected = fnv_step(expected, std::bit_cast<std::uint32_t>(v));
    }
  }
  for (T v : batch.target.data()) actual = fnv_step(actual, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (expected != actual) throw std::logic_error("assemble_batch: target images were modified during assembly");
  return batch;
}

std::size_t steps_per_epoch(std::size_t samples, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  return (samples + batch_size - 1) / batch_size;
}

void check_compatible(const VsaConfig& model, const Dataset& data) {
  model.validate();
  if (data.size() == 0) throw std::invalid_argument("dataset is empty");
  if (data.image.height != model.image_size || data.image.width != model.image_size ||
      data.image.channels != model.channels) {
    throw std::invalid_argument("dataset images are " + std::to_string(data.image.channels) + "x" +
                                std::to_string(data.image.height) + "x" + std::to_string(data.image.width) +
                                " but the model expects " + std::to_string(model.channels) + "x" +
                                std::to_string(model.image_size) + "x" + std::to_string(model.image_size));
  }
  if (data.views != model.n_views) {
    throw std::invalid_argument("dataset has " + std::to_string(data.views) + " views per object but the model has " +
                                std::to_string(model.n_views));
  }
}

template <typename T>
CheckpointFile make_checkpoint(const VsaConfig& config, VsaWeights<T>& weights,
                               const std::vector<NamedArray>& optimizer_state, std::size_t step, std::uint64_t seed,
                               const std::string& run_config) {
  CheckpointFile ck;
  ck.config = config;
  ck.run_config = run_config;
  ck.step = step;
  ck.seed = seed;
  ck.tensors = export_weights(weights);
  ck.tensors.insert(ck.tensors.end(), optimizer_state.begin(), optimizer_state.end());
  return ck;
}

template <typename T>
PretrainResult<T> pretrain(const Dataset& data, const PretrainOptions& options, const CheckpointFile* resume) {
  check_compatible(options.model, data);
  options.optim.validate();
  const auto& model = options.model;
  const std::size_t n = data.size();
  const std::size_t batch_size = std::min(options.optim.batch_size, n);
  const std::size_t spe = steps_per_epoch(n, batch_size);
  const auto schedule = LrSchedule::from(options.optim, spe);

  PretrainResult<T> result;
  result.total_steps = schedule.total_steps;
  std::size_t step = 0;
  if (resume != nullptr) {
    if (!(resume->config == model)) throw std::invalid_argument("checkpoint config does not match the run config");
    if (resume->seed != options.seed) throw std::invalid_argument("checkpoint seed does not match the run seed");
    result.weights = import_weights<T>(model, resume->tensors);
    step = resume->step;
  } else {
    result.weights = VsaWeights<T>::init(model, options.seed);
  }
  AdamW<T> optimizer(result.weights.named_parameters(), options.optim);
  if (resume != nullptr) optimizer.import_state(resume->tensors, step);

  const std::size_t end =
      options.stop_after > 0 ? std::min(options.stop_after, schedule.total_steps) : schedule.total_steps;

  std::ofstream metrics;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    metrics.open(options.out_dir / kMetricsFile, resume != nullptr ? std::ios::app : std::ios::trunc);
    if (!metrics) throw IoError("cannot open " + (options.out_dir / kMetricsFile).string());
  }
  auto save = [&](std::size_t at_step) {
    write_checkpoint(options.out_dir / kCheckpointFile,
                     make_checkpoint(model, result.weights, optimizer.export_state(), at_step, options.seed,
                                     options.run_config));
  };

  std::vector<std::size_t> order;
  std::size_t order_epoch = static_cast<std::size_t>(-1);
  for (; step < end; ++step) {
    const std::size_t epoch = step / spe;
    if (epoch != order_epoch) {
      order = epoch_order(n, options.seed, epoch);
      order_epoch = epoch;
    }
    const std::size_t first = (step % spe) * batch_size;
    const std::span<const std::size_t> members(order.data() + first, std::min(batch_size, n - first));
    const auto batch = assemble_batch<T>(data, members, model.num_source_views, options.sampler, options.augment,
                                         derive_seed(options.seed, kStepStream, step), options.workers);

    const double lr = schedule.at(step);
    double loss_value = 0.0;
    {
      Tape<T> tape;
      Rng mask_rng(derive_seed(options.seed, kMaskStream, step));
      const auto pred = synthesize(batch.sources, batch.source_poses, batch.target_poses, model, result.weights,
                                   model.mask_ratio, mask_rng);
      const auto loss = vsa_loss(pred, batch.target);
      loss_value = static_cast<double>(loss.item());
      if (!std::isfinite(loss_value)) {
        throw TrainingError("non-finite loss " + std::to_string(loss_value) + " at step " + std::to_string(step) +
                            " (epoch " + std::to_string(epoch) + ", lr " + std::to_string(lr) + ")");
      }
      tape.backward(loss);
    }
    optimizer.step(lr);

    const StepRecord record{step, lr, loss_value};
    result.curve.push_back(record);
    if (metrics.is_open()) metrics << format_metric(record) << '\n';
    if (options.on_step) options.on_step(record);
    if (!options.out_dir.empty() && options.checkpoint_every > 0 && (step + 1) % options.checkpoint_every == 0 &&
        step + 1 < end) {
      metrics.flush();
      save(step + 1);
    }
  }
  result.step = step;
  result.optimizer_state = optimizer.export_state();
  if (!options.out_dir.empty()) {
    metrics.flush();
    save(step);
  }
  return result;
}

double smoothed_loss(const std::vector<StepRecord>& curve, std::size_t window) {
  if (curve.empty()) return std::numeric_limits<double>::quiet_NaN();
  window = std::clamp<std::size_t>(window, 1, curve.size());
  double total = 0.0;
  for (std::size_t i = curve.size() - window; i < curve.size(); ++i) total += curve[i].loss;
  return total / static_cast<double>(window);
}

#define VSA_INSTANTIATE_TRAIN(T)                                                                                    \
  template std::uint64_t checksum(const Tensor<T>&);                                                               \
  template Batch<T> assemble_batch(const Dataset&, std::span<const std::size_t>, std::size_t, SamplerKind,         \
                                   const AugmentPolicy&, std::uint64_t, std::size_t);                              \
  template CheckpointFile make_checkpoint(const VsaConfig&, VsaWeights<T>&, const std::vector<NamedArray>&,        \
                                          std::size_t, std::uint64_t, const std::string&);                         \
  template PretrainResult<T> pretrain(const Dataset&, const PretrainOptions&, const CheckpointFile*);

VSA_INSTANTIATE_TRAIN(float)
VSA_INSTANTIATE_TRAIN(double)

#undef VSA_INSTANTIATE_TRAIN

}  // namespace vsa
