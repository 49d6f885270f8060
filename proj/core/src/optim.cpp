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

#include "vsa/optim.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace vsa {

void OptimConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid optimizer config: " + what); };
  if (!(base_lr >= 0.0) || !std::isfinite(base_lr)) fail("base_lr must be finite and non-negative");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("betas must lie in [0, 1)");
  if (!(eps > 0.0)) fail("eps must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (warmup_epochs > total_epochs) fail("warmup_epochs exceeds total_epochs");
}

OptimConfig OptimConfig::pretraining() { return OptimConfig{}; }

OptimConfig OptimConfig::finetuning() {
  OptimConfig c;
  c.base_lr = 1e-3;
  c.beta2 = 0.999;
  c.warmup_epochs = 5;
  c.total_epochs = 100;
  return c;
}

OptimConfig OptimConfig::linear_probing() {
  OptimConfig c = finetuning();
  c.batch_size = 320;
  return c;
}

double lr_at(std::size_t step, double peak, std::size_t warmup_steps, std::size_t total_steps) {
  if (step >= total_steps) return 0.0;
  if (step < warmup_steps) return peak * static_cast<double>(step) / static_cast<double>(warmup_steps);
  const double progress =
      static_cast<double>(step - warmup_steps) / static_cast<double>(total_steps - warmup_steps);
  return 0.5 * peak * (1.0 + std::cos(std::numbers::pi * progress));
}

LrSchedule LrSchedule::from(const OptimConfig& cfg, std::size_t steps_per_epoch) {
  return LrSchedule{cfg.peak_lr(), cfg.warmup_epochs * steps_per_epoch, cfg.total_epochs * steps_per_epoch};
}

template <typename T>
void adamw_update(std::span<T> w, std::span<const T> g, std::span<T> m, std::span<T> v, std::size_t step, double lr,
                  const OptimConfig& cfg, bool decay) {
  if (g.size() != w.size() || m.size() != w.size() || v.size() != w.size()) {
    throw ShapeError("adamw_update: parameter, gradient and moment sizes differ");
  }
  if (step == 0) throw std::invalid_argument("adamw_update: step counts from 1");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const double wd = decay ? cfg.weight_decay : 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double gi = g[i];
    const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
    const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double wi = w[i];
    const double update = (mi / bc1) / (std::sqrt(vi / bc2) + cfg.eps) + wd * wi;
    w[i] = static_cast<T>(wi - lr * update);
  }
}

template <typename T>
AdamW<T>::AdamW(std::vector<std::pair<std::string, Tensor<T>>> params, OptimConfig cfg, bool decay_all)
    : cfg_(cfg) {
  cfg_.validate();
  for (auto& [name, p] : params) {
    slots_.push_back(Slot{name, p, std::vector<T>(p.numel(), T(0)), std::vector<T>(p.numel(), T(0)),
                          decay_all || p.rank() >= 2});
  }
}

template <typename T>
void AdamW<T>::step(double lr) {
  ++steps_;
  std::vector<T> zeros;
  for (auto& s : slots_) {
    std::span<const T> g;
    if (s.param.has_grad()) {
      g = s.param.mutable_grad();
    } else {
      zeros.assign(s.param.numel(), T(0));
      g = zeros;
    }
    adamw_update<T>(s.param.mutable_data(), g, s.m, s.v, steps_, lr, cfg_, s.decay);
    s.param.zero_grad();
  }
}

template <typename T>
void AdamW<T>::zero_grad() {
  for (auto& s : slots_) s.param.zero_grad();
}

template <typename T>
std::vector<NamedArray> AdamW<T>::export_state() const {
  std::vector<NamedArray> out;
  for (const auto& s : slots_) {
    const auto& shape = s.param.shape();
    out.push_back(NamedArray{"adam.m/" + s.name, shape, std::vector<float>(s.m.begin(), s.m.end())});
    out.push_back(NamedArray{"adam.v/" + s.name, shape, std::vector<float>(s.v.begin(), s.v.end())});
  }
  return out;
}

template <typename T>
void AdamW<T>::import_state(const std::vector<NamedArray>& arrays, std::size_t steps) {
  std::map<std::string, const NamedArray*> by_name;
  for (const auto& a : arrays) by_name[a.name] = &a;
  auto restore = [&](const std::string& key, const Shape& shape, std::vector<T>& dst) {
    const auto it = by_name.find(key);
    if (it == by_name.end()) throw FormatError("optimizer state is missing '" + key + "'");
    if (it->second->shape != shape) throw FormatError("optimizer state '" + key + "' has the wrong shape");
    dst.assign(it->second->values.begin(), it->second->values.end());
  };
  for (auto& s : slots_) {
    restore("adam.m/" + s.name, s.param.shape(), s.m);
    restore("adam.v/" + s.name, s.param.shape(), s.v);
  }
  steps_ = steps;
}

template void adamw_update<float>(std::span<float>, std::span<const float>, std::span<float>, std::span<float>,
                                  std::size_t, double, const OptimConfig&, bool);
template void adamw_update<double>(std::span<double>, std::span<const double>, std::span<double>, std::span<double>,
                                   std::size_t, double, const OptimConfig&, bool);
template class AdamW<float>;
template class AdamW<double>;

}  // namespace vsa
