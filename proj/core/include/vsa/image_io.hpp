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
#include <filesystem>
#include <span>
#include <vector>

#include "vsa/data.hpp"

namespace vsa {

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<unsigned char> rgb;  // row-major, interleaved

  bool operator==(const RgbImage&) const = default;
};

/// (3, H, W) floats in [0, 1] to 8-bit interleaved RGB, rounding and clamping.
RgbImage to_rgb(std::span<const float> chw, const ImageShape& shape);
/// Places images of equal height next to each other.
RgbImage hstack(const std::vector<RgbImage>& images);

/// Binary PPM (P6, maxval 255).
void write_ppm(const std::filesystem::path& path, const RgbImage& image);
/// Throws FormatError on malformed headers or truncated data.
RgbImage read_ppm(const std::filesystem::path& path);

}  // namespace vsa
