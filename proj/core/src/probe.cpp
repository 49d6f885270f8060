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

#include "vsa/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vsa {

namespace {

constexpr std::uint64_t kHeadStream = 0x48454144ULL;
constexpr std::uint64_t kLabelStream = 0x4C4142454CULL;
constexpr std::uint64_t kOrderStream = 0x4F52444552ULL;
constexpr std::uint64_t kAugmentStream = 0x4155474DULL;
constexpr std::size_t kFeatureChunk = 64;

std::vector<int> labels_of(const Dataset& data, std::size_t num_classes) {
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const auto& s : data.samples) {
    if (s.label >= num_classes) {
      throw std::invalid_argument("label " + std::to_string(s.label) + " of object " + std::to_string(s.object_id) +
                                  " exceeds the classifier's " + std::to_string(num_classes) + " classes");
    }
    labels.push_back(static_cast<int>(s.label));
  }
  return labels;
}

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[std::uniform_int_distribution<std::size_t>(0, i - 1)(rng)]);
  }
  return order;
}

std::vector<int> permuted_labels(const std::vector<int>& labels, std::uint64_t seed) {
  Rng rng(derive_seed(seed, kLabelStream));
  const auto perm = shuffled(labels.size(), rng);
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out[i] = labels[perm[i]];
  return out;
}

template <typename T>
double accuracy(const Tensor<T>& logits, std::span<const int> labels) {
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  const auto v = logits.data();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = v.subspan(i * c, c);
    const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    correct += best == labels[i] ? 1 : 0;
  }
  return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
}

void check_classify_inputs(const VsaConfig& config, const Dataset& train, const Dataset& test,
                           const ClassifyOptions& options) {
  check_compatible(config, train);
  check_compatible(config, test);
  options.optim.validate();
  if (options.num_classes < 2) throw std::invalid_argument("a classifier needs at least two classes");
  if (options.views > train.views) {
    throw std::invalid_argument("cannot average " + std::to_string(options.views) + " views out of " +
                                std::to_string(train.views));
  }
}

// Images of `views` for the given objects, object-major: (objects * views, c, H, W).
template <typename T>
Tensor<T> gather_images(const Dataset& data, std::span<const std::size_t> objects,
                        const std::vector<std::size_t>& views, const AugmentPolicy* augment, std::uint64_t seed) {
  const auto& shape = data.image;
  std::vector<T> values;
  values.reserve(objects.size() * views.size() * shape.numel());
  for (std::size_t j = 0; j < objects.size(); ++j) {
    for (std::size_t v : views) {
      const auto view = data.samples[objects[j]].view(v, shape);
      if (augment != nullptr && !augment->empty()) {
        Rng rng(derive_seed(seed, j, v));
        const auto out = augment_source(view, shape, *augment, rng);
        values.insert(values.end(), out.begin(), out.end());
      } else {
        values.insert(values.end(), view.begin(), view.end());
      }
    }
  }
  return Tensor<T>(Shape{objects.size() * views.size(), shape.channels, shape.height, shape.width},
                   std::move(values));
}

template <typename T>
Tensor<T> pooled_over_views(const Tensor<T>& images, std::size_t objects, std::size_t views, const VsaConfig& config,
                            const VsaWeights<T>& weights) {
  const auto features = pooled_features(images, config, weights);
  return mean_axis(reshape(features, Shape{objects, views, config.enc_dim}), 1);
}

}  // namespace

std::vector<std::size_t> spread_views(std::size_t n, std::size_t k) {
  if (k == 0 || k > n) throw std::invalid_argument("view count must lie in [1, " + std::to_string(n) + "]");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(i * n / k);
  return out;
}

template <typename T>
std::uint64_t encoder_checksum(VsaWeights<T>& weights) {
  std::uint64_t h = 0;
  for (auto& [name, t] : weights.encoder_parameters()) h = splitmix64(h ^ checksum(t));
  return h;
}

template <typename T>
Tensor<T> view_pooled_features(const Dataset& data, const VsaConfig& config, const VsaWeights<T>& weights,
                               const std::vector<std::size_t>& views) {
  NoGradGuard<T> no_grad;
  const std::size_t n = data.size();
  std::vector<T> out;
  out.reserve(n * config.enc_dim);
  std::vector<std::size_t> objects(n);
  std::iota(objects.begin(), objects.end(), 0);
  for (std::size_t first = 0; first < n; first += kFeatureChunk) {
    const std::span<const std::size_t> chunk(objects.data() + first, std::min(kFeatureChunk, n - first));
    const auto images = gather_images<T>(data, chunk, views, nullptr, 0);
    const auto pooled = pooled_over_views(images, chunk.size(), views.size(), config, weights);
    out.insert(out.end(), pooled.data().begin(), pooled.data().end());
  }
  return Tensor<T>(Shape{n, config.enc_dim}, std::move(out));
}

template <typename T>
ClassifyResult linear_probe(const VsaConfig& config, VsaWeights<T>& weights, const Dataset& train,
                            const Dataset& test, const ClassifyOptions& options) {
  check_classify_inputs(config, train, test, options);
  ClassifyResult result;
  result.encoder_checksum_before = encoder_checksum(weights);

  const auto views = spread_views(train.views, options.views == 0 ? train.views : options.views);
  auto train_x = view_pooled_features(train, config, weights, views);
  auto test_x = view_pooled_features(test, config, weights, views);
  auto train_y = labels_of(train, options.num_classes);
  const auto test_y = labels_of(test, options.num_classes);
  if (options.shuffle_labels) train_y = permuted_labels(train_y, options.seed);

  // Standardize with training statistics.
  const std::size_t d = config.enc_dim, n = train.size();
  std::vector<double> mu(d, 0.0), sd(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) mu[k] += train_x.data()[i * d + k];
  }
  for (auto& m : mu) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const double c = train_x.data()[i * d + k] - mu[k];
      sd[k] += c * c;
    }
  }
  for (auto& s : sd) s = std::sqrt(s / static_cast<double>(n) + 1e-6);
  for (auto* x : {&train_x, &test_x}) {
    auto v = x->mutable_data();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>((v[i] - mu[i % d]) / sd[i % d]);
  }

  Rng init_rng(derive_seed(options.seed, kHeadStream));
  auto head = Linear<T>::init(d, options.num_classes, init_rng);
  std::vector<std::pair<std::string, Tensor<T>>> params{{"head.weight", head.weight}, {"head.bias", head.bias}};
  AdamW<T> optimizer(params, options.optim);

  const std::size_t batch = std::min(options.optim.batch_size, n);
  const std::size_t spe = steps_per_epoch(n, batch);
  const auto schedule = LrSchedule::from(options.optim, spe);
  std::vector<std::size_t> order;
  for (std::size_t step = 0; step < schedule.total_steps; ++step) {
    if (step % spe == 0) {
      Rng rng(derive_seed(options.seed, kOrderStream, step / spe));
      order = shuffled(n, rng);
    }
    const std::size_t first = (step % spe) * batch;
    const std::span<const std::size_t> members(order.data() + first, std::min(batch, n - first));
    std::vector<int> y;
    for (auto i : members) y.push_back(train_y[i]);
    const double lr = schedule.at(step);
    double loss_value = 0.0;
    {
      Tape<T> tape;
      const auto loss = cross_entropy(head(index_select(train_x, 0, members)), y);
      loss_value = static_cast<double>(loss.item());
      tape.backward(loss);
    }
    optimizer.step(lr);
    const StepRecord record{step, lr, loss_value};
    result.curve.push_back(record);
    if (options.on_step) options.on_step(record);
  }

  {
    NoGradGuard<T> no_grad;
    result.train_accuracy = accuracy(head(train_x), train_y);
    result.test_accuracy = accuracy(head(test_x), test_y);
  }
  result.encoder_checksum_after = encoder_checksum(weights);
  if (result.encoder_checksum_after != result.encoder_checksum_before) {
    throw std::logic_error("linear_probe modified the frozen encoder");
  }
  return result;
}

template <typename T>
ClassifyResult finetune(const VsaConfig& config, VsaWeights<T>& weights, const Dataset& train, const Dataset& test,
                        const ClassifyOptions& options) {
  check_classify_inputs(config, train, test, options);
  ClassifyResult result;
  result.encoder_checksum_before = encoder_checksum(weights);

  const auto views = spread_views(train.views, options.views == 0 ? train.views : options.views);
  auto train_y = labels_of(train, options.num_classes);
  const auto test_y = labels_of(test, options.num_classes);
  if (options.shuffle_labels) train_y = permuted_labels(train_y, options.seed);

  Rng init_rng(derive_seed(options.seed, kHeadStream));
  auto head = Linear<T>::init(config.enc_dim, options.num_classes, init_rng);
  // Patch-averaged tokens have a much smaller spread than single tokens, so
  // the head reads them through its own layer norm.
  auto head_norm = Norm<T>::init(config.enc_dim);
  auto params = weights.encoder_parameters();
  params.emplace_back("head.norm.gamma", head_norm.gamma);
  params.emplace_back("head.norm.beta", head_norm.beta);
  params.emplace_back("head.weight", head.weight);
  params.emplace_back("head.bias", head.bias);
  AdamW<T> optimizer(params, options.optim);

  const std::size_t n = train.size();
  const std::size_t batch = std::min(options.optim.batch_size, n);
  const std::size_t spe = steps_per_epoch(n, batch);
  const auto schedule = LrSchedule::from(options.optim, spe);
  std::vector<std::size_t> order;
  for (std::size_t step = 0; step < schedule.total_steps; ++step) {
    if (step % spe == 0) {
      Rng rng(derive_seed(options.seed, kOrderStream, step / spe));
      order = shuffled(n, rng);
    }
    const std::size_t first = (step % spe) * batch;
    const std::span<const std::size_t> members(order.data() + first, std::min(batch, n - first));
    std::vector<int> y;
    for (auto i : members) y.push_back(train_y[i]);
    const auto images =
        gather_images<T>(train, members, views, &options.augment, derive_seed(options.seed, kAugmentStream, step));
    const double lr = schedule.at(step);
    double loss_value = 0.0;
    {
      Tape<T> tape;
      const auto features = pooled_over_views(images, members.size(), views.size(), config, weights);
      const auto loss = cross_entropy(head(head_norm(features)), y);
      loss_value = static_cast<double>(loss.item());
      if (!std::isfinite(loss_value)) {
        throw TrainingError("non-finite fine-tuning loss at step " + std::to_string(step));
      }
      tape.backward(loss);
    }
    optimizer.step(lr);
    const StepRecord record{step, lr, loss_value};
    result.curve.push_back(record);
    if (options.on_step) options.on_step(record);
  }

  auto evaluate = [&](const Dataset& data, const std::vector<int>& labels) {
    const auto features = view_pooled_features(data, config, weights, views);
    NoGradGuard<T> no_grad;
    return accuracy(head(head_norm(features)), labels);
  };
  result.train_accuracy = evaluate(train, train_y);
  result.test_accuracy = evaluate(test, test_y);
  result.encoder_checksum_after = encoder_checksum(weights);
  return result;
}

#define VSA_INSTANTIATE_PROBE(T)                                                                                   \
  template std::uint64_t encoder_checksum(VsaWeights<T>&);                                                        \
  template Tensor<T> view_pooled_features(const Dataset&, const VsaConfig&, const VsaWeights<T>&,                 \
                                          const std::vector<std::size_t>&);                                        \
  template ClassifyResult linear_probe(const VsaConfig&, VsaWeights<T>&, const Dataset&, const Dataset&,          \
                                       const ClassifyOptions&);                                                    \
  template ClassifyResult finetune(const VsaConfig&, VsaWeights<T>&, const Dataset&, const Dataset&,              \
                                   const ClassifyOptions&);

VSA_INSTANTIATE_PROBE(float)
VSA_INSTANTIATE_PROBE(double)

#undef VSA_INSTANTIATE_PROBE

}  // namespace vsa
