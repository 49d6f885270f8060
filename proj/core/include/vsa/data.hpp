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
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "vsa/camera.hpp"
#include "vsa/rng.hpp"

namespace vsa {

inline constexpr std::size_t kNumShapeClasses = 8;
inline constexpr std::size_t kPointsPerObject = 2048;
inline constexpr double kRigRadius = 2.5;
inline constexpr double kRigElevationDegrees = 30.0;
inline constexpr double kRigFovDegrees = 55.0;

struct ImageShape {
  std::size_t channels = 3;
  std::size_t height = 32;
  std::size_t width = 32;

  std::size_t numel() const { return channels * height * width; }
  bool operator==(const ImageShape&) const = default;
};

/// n cameras on a circle of fixed radius and elevation around the origin,
/// equally spaced in azimuth, each looking at the origin with +y up.
struct CameraRig {
  std::vector<CameraPose> poses;
  std::vector<double> azimuths;  // radians

  std::size_t size() const { return poses.size(); }

  /// `azimuth_offset` and `elevation_offset` are in degrees.
  static CameraRig circular(std::size_t n, std::size_t height, std::size_t width, double azimuth_offset = 0.0,
                            double elevation_offset = 0.0);
};

/// Point-sampled surface of a parametric shape, bounded by the unit ball.
struct ProceduralObject {
  std::size_t class_id = 0;
  std::uint64_t seed = 0;
  double size = 1.0;  // radius of the bounding sphere the shape is scaled to
  std::vector<Vec3> positions;
  std::vector<std::array<float, 3>> colors;
};

std::string_view shape_class_name(std::size_t class_id);

/// Deterministic in (class_id, seed). Throws std::out_of_range for an
/// unknown class.
ProceduralObject generate_object(std::size_t class_id, std::uint64_t seed);

/// Perspective point splatting into a (3, H, W) image in [0, 1]: one pixel
/// per point, nearest depth wins, brightness falls off with depth, white
/// background. Points behind the camera are dropped.
std::vector<float> render_view(const ProceduralObject& object, const CameraPose& pose, std::size_t height,
                               std::size_t width);

struct MultiViewSample {
  std::uint32_t object_id = 0;
  std::uint32_t label = 0;
  std::vector<CameraPose> poses;  // one per view
  std::vector<float> pixels;      // (views, c, H, W)

  std::span<const float> view(std::size_t index, const ImageShape& shape) const {
    return std::span<const float>(pixels).subspan(index * shape.numel(), shape.numel());
  }
  bool operator==(const MultiViewSample&) const = default;
};

struct Dataset {
  std::size_t views = 0;
  ImageShape image;
  std::vector<MultiViewSample> samples;

  std::size_t size() const { return samples.size(); }
  bool operator==(const Dataset&) const = default;
};

struct GenerateOptions {
  std::size_t num_objects = 256;
  std::size_t num_classes = kNumShapeClasses;
  std::size_t views = 12;
  std::size_t image_size = 32;
  std::uint64_t seed = 0;
  /// Objects are numbered from here; train and test splits use disjoint
  /// ranges of the same master seed.
  std::size_t first_object = 0;
  /// Per-object random perturbation of the rig in degrees (0 = exact rig).
  double pose_jitter = 0.0;
  std::size_t workers = 1;
};

/// Class of object k: uniform over [0, num_classes) from a per-object stream.
std::size_t object_class(std::uint64_t seed, std::size_t object_index, std::size_t num_classes);

/// Shape seed of object k, passed to generate_object.
std::uint64_t object_seed(std::uint64_t seed, std::size_t object_index);

/// Renders every object from every rig view. Output is identical for any
/// worker count.
Dataset generate_dataset(const GenerateOptions& options);

struct ViewPair {
  std::vector<std::size_t> sources;
  std::size_t target = 0;
};

/// `same` draws one view and uses it as every source and the target, which
/// turns view synthesis into plain reconstruction.
enum class SamplerKind { random, fixed, same };
std::string_view to_string(SamplerKind kind);
SamplerKind parse_sampler(std::string_view text);

/// `s` source views and one target, all i.i.d. uniform over [0, n); any of
/// them may coincide.
ViewPair sample_pair_random(std::size_t n, std::size_t s, Rng& rng);
/// Uniform source, target = the next view (wrapping). Throws
/// std::invalid_argument for n < 2.
ViewPair sample_pair_fixed(std::size_t n, Rng& rng);
/// Dispatches on `kind`. The fixed sampler supports a single source only.
/// Uniform view used for every source and the target.
ViewPair sample_pair_same(std::size_t n, std::size_t s, Rng& rng);
ViewPair sample_views(SamplerKind kind, std::size_t n, std::size_t s, Rng& rng);

}  // namespace vsa
