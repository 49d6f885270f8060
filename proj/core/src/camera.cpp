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

#include "vsa/camera.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vsa {

Vec3 normalize(const Vec3& v) {
  const double n = std::sqrt(dot(v, v));
  if (n == 0.0) throw std::invalid_argument("normalize: zero vector");
  return {v[0] / n, v[1] / n, v[2] / n};
}

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double determinant(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

Quat quat_from_matrix(const Mat3& m) {
  Quat q{};
  const double trace = m[0][0] + m[1][1] + m[2][2];
  if (trace > 0.0) {
    const double s = 2.0 * std::sqrt(1.0 + trace);
    q = {0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s};
  } else if (m[0][0] > m[1][1] && m[0][0] > m[2][2]) {
    const double s = 2.0 * std::sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]);
    q = {(m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s};
  } else if (m[1][1] > m[2][2]) {
    const double s = 2.0 * std::sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]);
    q = {(m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]);
    q = {(m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s};
  }
  const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  for (auto& c : q) c /= n;
  return q;
}

Mat3 matrix_from_quat(const Quat& quat) {
  const double n = std::sqrt(quat[0] * quat[0] + quat[1] * quat[1] + quat[2] * quat[2] + quat[3] * quat[3]);
  if (!(n > 1e-12) || !std::isfinite(n)) throw std::invalid_argument("camera rotation is not invertible");
  const double w = quat[0] / n, x = quat[1] / n, y = quat[2] / n, z = quat[3] / n;
  return Mat3{Vec3{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
              Vec3{2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
              Vec3{2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}};
}

Intrinsics intrinsics_from_fov(std::size_t width, std::size_t height, double fov_degrees) {
  if (!(fov_degrees > 0.0 && fov_degrees < 180.0)) throw std::invalid_argument("field of view must be in (0, 180)");
  const double f = 0.5 * static_cast<double>(width) / std::tan(0.5 * fov_degrees * std::numbers::pi / 180.0);
  return Intrinsics{f, f, 0.5 * static_cast<double>(width), 0.5 * static_cast<double>(height)};
}

Mat3 CameraPose::rotation_matrix() const { return matrix_from_quat(rotation); }

Vec3 CameraPose::forward() const {
  const auto r = rotation_matrix();
  return {-r[0][2], -r[1][2], -r[2][2]};
}

CameraPose CameraPose::from_matrix(const Vec3& position, const Mat3& camera_to_world, const Intrinsics& intrinsics) {
  const double det = determinant(camera_to_world);
  if (!(std::abs(det) > 1e-9) || !std::isfinite(det)) {
    throw std::invalid_argument("camera-to-world matrix is not invertible");
  }
  return CameraPose{position, quat_from_matrix(camera_to_world), intrinsics};
}

CameraPose CameraPose::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, const Intrinsics& intrinsics) {
  const Vec3 fwd = normalize({target[0] - eye[0], target[1] - eye[1], target[2] - eye[2]});
  const Vec3 z_axis{-fwd[0], -fwd[1], -fwd[2]};
  const Vec3 x_axis = normalize(cross(up, z_axis));
  const Vec3 y_axis = cross(z_axis, x_axis);
  // Columns are the camera axes expressed in world coordinates.
  const Mat3 m{Vec3{x_axis[0], y_axis[0], z_axis[0]}, Vec3{x_axis[1], y_axis[1], z_axis[1]},
               Vec3{x_axis[2], y_axis[2], z_axis[2]}};
  return from_matrix(eye, m, intrinsics);
}

Projection project(const CameraPose& pose, const Vec3& world_point) {
  const auto r = pose.rotation_matrix();
  const Vec3 d{world_point[0] - pose.position[0], world_point[1] - pose.position[1], world_point[2] - pose.position[2]};
  // Camera coordinates = R^T d.
  const double xc = r[0][0] * d[0] + r[1][0] * d[1] + r[2][0] * d[2];
  const double yc = r[0][1] * d[0] + r[1][1] * d[1] + r[2][1] * d[2];
  const double zc = r[0][2] * d[0] + r[1][2] * d[1] + r[2][2] * d[2];
  Projection p;
  p.depth = -zc;
  p.in_front = p.depth > 1e-9;
  if (p.in_front) {
    const auto& k = pose.intrinsics;
    p.u = k.cx + k.fx * xc / p.depth;
    p.v = k.cy - k.fy * yc / p.depth;
  }
  return p;
}

template <typename T>
Tensor<T> camera_ray_field(const CameraPose& pose, std::size_t height, std::size_t width) {
  const auto& k = pose.intrinsics;
  if (!(std::abs(k.fx) > 0.0) || !(std::abs(k.fy) > 0.0) || !std::isfinite(k.fx) || !std::isfinite(k.fy)) {
    throw std::invalid_argument("camera intrinsics are not invertible");
  }
  const auto r = pose.rotation_matrix();
  std::vector<T> values(height * width * 6);
  for (std::size_t row = 0; row < height; ++row) {
    for (std::size_t col = 0; col < width; ++col) {
      const double xc = (static_cast<double>(col) + 0.5 - k.cx) / k.fx;
      const double yc = -(static_cast<double>(row) + 0.5 - k.cy) / k.fy;
      const Vec3 cam{xc, yc, -1.0};
      const Vec3 world = normalize({r[0][0] * cam[0] + r[0][1] * cam[1] + r[0][2] * cam[2],
                                    r[1][0] * cam[0] + r[1][1] * cam[1] + r[1][2] * cam[2],
                                    r[2][0] * cam[0] + r[2][1] * cam[1] + r[2][2] * cam[2]});
      T* out = values.data() + (row * width + col) * 6;
      for (int i = 0; i < 3; ++i) {
        out[i] = static_cast<T>(pose.position[i]);
        out[3 + i] = static_cast<T>(world[i]);
      }
    }
  }
  return Tensor<T>(Shape{height, width, 6}, std::move(values));
}

template Tensor<float> camera_ray_field<float>(const CameraPose&, std::size_t, std::size_t);
template Tensor<double> camera_ray_field<double>(const CameraPose&, std::size_t, std::size_t);

}  // namespace vsa
