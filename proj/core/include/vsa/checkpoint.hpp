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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vsa/errors.hpp"
#include "vsa/model.hpp"
#include "vsa/tensor.hpp"

namespace vsa {

// Checkpoint layout (all integers and floats little-endian):
//
//   char[8]  magic "VSACKPT\0"
//   u32      format version (kCheckpointVersion)
//   config   u32 x 13: image_size patch_size channels enc_dim enc_depth
//                      enc_heads dec_dim dec_depth dec_cross dec_heads
//                      n_views num_source_views pose_mode
//            f64      mask_ratio
//   u64      config fingerprint (FNV-1a of the config record above)
//   u64      training step
//   u64      base seed
//   u32 + bytes  run configuration text
//   u32      tensor count, then per tensor:
//            u32 name length, name bytes, u32 rank, u64 extents[rank],
//            f32 payload[product(extents)]

inline constexpr char kCheckpointMagic[8] = {'V', 'S', 'A', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<float> values;

  bool operator==(const NamedArray&) const = default;
};

struct CheckpointFile {
  VsaConfig config;
  std::string run_config;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  std::vector<NamedArray> tensors;

  const NamedArray* find(const std::string& name) const;
};

std::vector<char> encode_config(const VsaConfig& config);
std::uint64_t config_fingerprint(const VsaConfig& config);

void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& checkpoint);
/// Throws FormatError on bad magic, version mismatch, fingerprint mismatch
/// or truncation.
CheckpointFile read_checkpoint(const std::filesystem::path& path);

template <typename T>
NamedArray to_named_array(const std::string& name, const Tensor<T>& tensor);
template <typename T>
Tensor<T> from_named_array(const NamedArray& array);

template <typename T>
std::vector<NamedArray> export_weights(VsaWeights<T>& weights);
/// Rebuilds weights for `config`; every parameter must be present with the
/// expected shape.
template <typename T>
VsaWeights<T> import_weights(const VsaConfig& config, const std::vector<NamedArray>& arrays);

}  // namespace vsa
