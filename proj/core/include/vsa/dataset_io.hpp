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

#include "vsa/data.hpp"
#include "vsa/errors.hpp"

namespace vsa {

// Dataset layout (little-endian):
//
//   char[8]  magic "VSADATA\0"
//   u32      format version (kDatasetVersion)
//   u32 x 5  objects, views, height, width, channels
//   per sample:
//     u32    object id
//     u32    class label
//     views x 11 f64: position xyz, rotation quaternion wxyz, fx fy cx cy
//     f32    pixels[views * channels * height * width]

inline constexpr char kDatasetMagic[8] = {'V', 'S', 'A', 'D', 'A', 'T', 'A', '\0'};
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 8 + 4 + 5 * 4;

/// Exact encoded size of one sample.
std::size_t dataset_sample_bytes(std::size_t views, const ImageShape& image);

void write_dataset(const std::filesystem::path& path, const Dataset& data);
/// Throws FormatError on bad magic, version mismatch, truncation or trailing
/// bytes; nothing is returned on failure.
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace vsa
