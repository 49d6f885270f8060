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

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vsa/data.hpp"
#include "vsa/rng.hpp"

namespace vsa {

inline constexpr double kCropScaleMin = 0.6;
inline constexpr double kCropScaleMax = 1.0;
inline constexpr double kJitterMin = 0.8;
inline constexpr double kJitterMax = 1.2;

/// Source-view augmentations. Targets are never augmented.
struct AugmentPolicy {
  bool random_crop = false;
  bool color_jitter = false;

  bool empty() const { return !random_crop && !color_jitter; }
  bool operator==(const AugmentPolicy&) const = default;
};

/// "none", "rc", "jt" or "rc+jt" (either order).
AugmentPolicy parse_augment_policy(std::string_view text);
std::string to_string(const AugmentPolicy& policy);

/// Crops the square window whose side is `scale` times the image side, with
/// its top-left corner at fractions (`x_frac`, `y_frac`) of the free range,
/// and resizes it back to the full image with bilinear sampling.
std::vector<float> crop_resize(std::span<const float> image, const ImageShape& shape, double scale, double x_frac,
                               double y_frac);

/// Multiplies channel c by factors[c] and clamps to [0, 1].
std::vector<float> color_jitter(std::span<const float> image, const ImageShape& shape,
                                std::span<const double> factors);

/// Applies the policy with parameters drawn from `rng`: crop scale uniform in
/// [0.6, 1], jitter factors uniform in [0.8, 1.2]. Output shape equals input
/// shape.
std::vector<float> augment_source(std::span<const float> image, const ImageShape& shape, const AugmentPolicy& policy,
                                  Rng& rng);

}  // namespace vsa
