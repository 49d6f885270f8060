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
#include <string>
#include <string_view>
#include <vector>

#include "vsa/augment.hpp"
#include "vsa/data.hpp"
#include "vsa/model.hpp"
#include "vsa/optim.hpp"

namespace vsa {

enum class Precision { fp32, fp64 };
std::string_view to_string(Precision p);
Precision parse_precision(std::string_view text);

/// Everything a run depends on. Serialized as an INI file whose sections are
/// model, pretrain, finetune, probe, data and run; keys are the field names.
struct RunConfig {
  VsaConfig model;
  OptimConfig pretrain = OptimConfig::pretraining();
  OptimConfig finetune = OptimConfig::finetuning();
  OptimConfig probe = OptimConfig::linear_probing();
  std::string train_data;
  std::string test_data;
  SamplerKind sampler = SamplerKind::random;
  AugmentPolicy augment;
  std::uint64_t seed = 0;
  Precision precision = Precision::fp32;
  std::string out_dir;
  std::size_t checkpoint_every = 0;
  std::size_t probe_views = 0;
  std::size_t workers = 1;

  bool operator==(const RunConfig&) const = default;
};

/// Every "section.key" accepted by the config file, in file order.
std::vector<std::string> run_config_keys();

std::string serialize_run_config(const RunConfig& config);
/// Keys absent from `text` keep their defaults. Throws std::invalid_argument
/// on unknown keys or malformed values.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& config);

/// Sets one field from "section.key=value".
void apply_override(RunConfig& config, std::string_view assignment);

}  // namespace vsa
