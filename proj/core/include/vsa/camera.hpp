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
#include <cstddef>

#include "vsa/tensor.hpp"

namespace vsa {

using Vec3 = std::array<double, 3>;
/// Row-major 3x3.
using Mat3 = std::array<Vec3, 3>;
/// Unit quaternion (w, x, y, z).
using Quat = std::array<double, 4>;

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  bool operator==(const Intrinsics&) const = default;
};

/// Square-pixel pinhole intrinsics with the principal point at the image
/// center and the given horizontal field of view.
Intrinsics intrinsics_from_fov(std::size_t width, std::size_t height, double fov_degrees);

/// Pinhole camera. Camera space looks down -z with +y up and +x right; image
/// rows grow downward. `rotation` maps camera axes to world axes.
struct CameraPose {
  Vec3 position{0.0, 0.0, 0.0};
  Quat rotation{1.0, 0.0, 0.0, 0.0};
  Intrinsics intrinsics;

  bool operator==(const CameraPose&) const = default;

  /// Camera-to-world rotation. Throws std::invalid_argument for a degenerate
  /// (zero) quaternion.
  Mat3 rotation_matrix() const;
  /// World-space viewing direction (the camera's -z axis).
  Vec3 forward() const;

  /// Throws std::invalid_argument when the matrix is singular.
  static CameraPose from_matrix(const Vec3& position, const Mat3& camera_to_world, const Intrinsics& intrinsics);
  static CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up, const Intrinsics& intrinsics);
};

struct Projection {
  double u = 0.0;  // continuous pixel column
  double v = 0.0;  // continuous pixel row
  double depth = 0.0;  // distance along the viewing axis
  bool in_front = false;
};

Projection project(const CameraPose& pose, const Vec3& world_point);

/// Per-pixel rays r(t) = o + t d through pixel centers, stored as
/// concat(o, d): shape (H, W, 6). Directions are unit length.
template <typename T>
Tensor<T> camera_ray_field(const CameraPose& pose, std::size_t height, std::size_t width);

Vec3 normalize(const Vec3& v);
Vec3 cross(const Vec3& a, const Vec3& b);
double dot(const Vec3& a, const Vec3& b);
double determinant(const Mat3& m);
Quat quat_from_matrix(const Mat3& m);
Mat3 matrix_from_quat(const Quat& q);

}  // namespace vsa
