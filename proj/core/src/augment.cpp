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

#include "vsa/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vsa {

AugmentPolicy parse_augment_policy(std::string_view text) {
  AugmentPolicy policy;
  if (text == "none" || text.empty()) return policy;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find('+', start), text.size());
    const auto token = text.substr(start, end - start);
    if (token == "rc") {
      policy.random_crop = true;
    } else if (token == "jt") {
      policy.color_jitter = true;
    } else {
      throw std::invalid_argument("unknown augmentation '" + std::string(token) + "' (expected none, rc, jt, rc+jt)");
    }
    start = end + 1;
  }
  return policy;
}

std::string to_string(const AugmentPolicy& policy) {
  if (policy.empty()) return "none";
  if (policy.random_crop && policy.color_jitter) return "rc+jt";
  return policy.random_crop ? "rc" : "jt";
}

std::vector<float> crop_resize(std::span<const float> image, const ImageShape& shape, double scale, double x_frac,
                               double y_frac) {
  if (image.size() != shape.numel()) throw std::invalid_argument("crop_resize: image size does not match its shape");
  if (!(scale > 0.0 && scale <= 1.0)) throw std::invalid_argument("crop_resize: scale must lie in (0, 1]");
  const auto h = static_cast<double>(shape.height);
  const auto w = static_cast<double>(shape.width);
  const double ch = scale * h, cw = scale * w;
  const double y0 = std::clamp(y_frac, 0.0, 1.0) * (h - ch);
  const double x0 = std::clamp(x_frac, 0.0, 1.0) * (w - cw);
  std::vector<float> out(image.size());
  const std::size_t plane = shape.height * shape.width;
  for (std::size_t row = 0; row < shape.height; ++row) {
    const double sy = std::clamp(y0 + (static_cast<double>(row) + 0.5) * ch / h - 0.5, 0.0, h - 1.0);
    const auto r0 = static_cast<std::size_t>(sy);
    const auto r1 = std::min(r0 + 1, shape.height - 1);
    const double fy = sy - static_cast<double>(r0);
    for (std::size_t col = 0; col < shape.width; ++col) {
      const double sx = std::clamp(x0 + (static_cast<double>(col) + 0.5) * cw / w - 0.5, 0.0, w - 1.0);
      const auto c0 = static_cast<std::size_t>(sx);
      const auto c1 = std::min(c0 + 1, shape.width - 1);
      const double fx = sx - static_cast<double>(c0);
      for (std::size_t c = 0; c < shape.channels; ++c) {
        const float* p = image.data() + c * plane;
        const double top = p[r0 * shape.width + c0] * (1.0 - fx) + p[r0 * shape.width + c1] * fx;
        const double bottom = p[r1 * shape.width + c0] * (1.0 - fx) + p[r1 * shape.width + c1] * fx;
        out[c * plane + row * shape.width + col] = static_cast<float>(top * (1.0 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

std::vector<float> color_jitter(std::span<const float> image, const ImageShape& shape,
                                std::span<const double> factors) {
  if (image.size() != shape.numel()) throw std::invalid_argument("color_jitter: image size does not match its shape");
  if (factors.size() != shape.channels) throw std::invalid_argument("color_jitter: need one factor per channel");
  std::vector<float> out(image.begin(), image.end());
  const std::size_t plane = shape.height * shape.width;
  for (std::size_t c = 0; c < shape.channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      auto& v = out[c * plane + i];
      v = static_cast<float>(std::clamp(v * factors[c], 0.0, 1.0));
    }
  }
  return out;
}

std::vector<float> augment_source(std::span<const float> image, const ImageShape& shape, const AugmentPolicy& policy,
                                  Rng& rng) {
  std::vector<float> out(image.begin(), image.end());
  if (policy.random_crop) {
    const double scale = kCropScaleMin + (kCropScaleMax - kCropScaleMin) * uniform01(rng);
    const double x = uniform01(rng);
    const double y = uniform01(rng);
    out = crop_resize(out, shape, scale, x, y);
  }
  if (policy.color_jitter) {
    std::vector<double> factors(shape.channels);
    for (auto& f : factors) f = kJitterMin + (kJitterMax - kJitterMin) * uniform01(rng);
    out = color_jitter(out, shape, factors);
  }
  return out;
}

}  // namespace vsa
