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

#include "vsa/data.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>

namespace vsa {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kClassStream = 0x434C415353ULL;
constexpr std::uint64_t kObjectStream = 0x4F424A454354ULL;
constexpr std::uint64_t kJitterStream = 0x4A4954544552ULL;

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 mul(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    const Vec3 v{normal(rng), normal(rng), normal(rng)};
    if (norm(v) > 1e-9) return normalize(v);
  }
}

// A surface piece that can be sampled uniformly by area.
struct Patch {
  double area = 0.0;
  std::function<Vec3(Rng&)> sample;
};

Patch sphere_patch(double radius) {
  return {4.0 * kPi * radius * radius, [radius](Rng& rng) { return mul(random_unit(rng), radius); }};
}

Patch triangle_patch(Vec3 a, Vec3 b, Vec3 c) {
  const double area = 0.5 * norm(cross(sub(b, a), sub(c, a)));
  return {area, [a, b, c](Rng& rng) {
            const double r1 = std::sqrt(uniform01(rng));
            const double r2 = uniform01(rng);
            return add(add(mul(a, 1.0 - r1), mul(b, r1 * (1.0 - r2))), mul(c, r1 * r2));
          }};
}

// Axis-aligned rectangle: `center` plus `u` and `v` half-edge vectors.
Patch rect_patch(Vec3 center, Vec3 u, Vec3 v) {
  const double area = 4.0 * norm(cross(u, v));
  return {area, [center, u, v](Rng& rng) {
            return add(center, add(mul(u, uniform(rng, -1.0, 1.0)), mul(v, uniform(rng, -1.0, 1.0))));
          }};
}

void add_box(std::vector<Patch>& out, Vec3 c, Vec3 h) {
  const Vec3 ex{h[0], 0, 0}, ey{0, h[1], 0}, ez{0, 0, h[2]};
  for (double s : {-1.0, 1.0}) {
    out.push_back(rect_patch(add(c, mul(ex, s)), ey, ez));
    out.push_back(rect_patch(add(c, mul(ey, s)), ex, ez));
    out.push_back(rect_patch(add(c, mul(ez, s)), ex, ey));
  }
}

Patch disk_patch(double y, double radius) {
  return {kPi * radius * radius, [y, radius](Rng& rng) {
            const double r = radius * std::sqrt(uniform01(rng));
            const double t = uniform(rng, 0.0, 2.0 * kPi);
            return Vec3{r * std::cos(t), y, r * std::sin(t)};
          }};
}

// Shapes below are built around the y axis and later normalized into the
// unit ball, so only their proportions matter.
std::vector<Patch> build_shape(std::size_t class_id, Rng& rng) {
  std::vector<Patch> parts;
  switch (class_id) {
    case 0:
      parts.push_back(sphere_patch(1.0));
      break;
    case 1:
      add_box(parts, {0, 0, 0}, {uniform(rng, 0.4, 1.0), uniform(rng, 0.4, 1.0), uniform(rng, 0.4, 1.0)});
      break;
    case 2: {
      const double major = 1.0;
      const double minor = uniform(rng, 0.25, 0.45);
      const double area = 4.0 * kPi * kPi * major * minor;
      parts.push_back({area, [major, minor](Rng& r) {
                         for (;;) {
                           const double u = uniform(r, 0.0, 2.0 * kPi);
                           const double v = uniform(r, 0.0, 2.0 * kPi);
                           if (uniform01(r) * (major + minor) <= major + minor * std::cos(v)) {
                             const double ring = major + minor * std::cos(v);
                             return Vec3{ring * std::cos(u), minor * std::sin(v), ring * std::sin(u)};
                           }
                         }
                       }});
      break;
    }
    case 3: {
      const double radius = uniform(rng, 0.5, 0.9);
      const double half = uniform(rng, 0.6, 1.0);
      const double slant = std::sqrt(radius * radius + 4.0 * half * half);
      parts.push_back({kPi * radius * slant, [radius, half](Rng& r) {
                         const double t = std::sqrt(uniform01(r));
                         const double a = uniform(r, 0.0, 2.0 * kPi);
                         return Vec3{t * radius * std::cos(a), half - 2.0 * half * t, t * radius * std::sin(a)};
                       }});
      parts.push_back(disk_patch(-half, radius));
      break;
    }
    case 4: {
      const double base = uniform(rng, 0.5, 0.8);
      const double top = uniform(rng, 0.2, 0.4);
      const double shift = uniform(rng, -0.3, 0.3);
      add_box(parts, {0, -0.35, 0}, {base, 0.35, base});
      add_box(parts, {shift, 0.35 + 0.3, 0}, {top, 0.3, top});
      break;
    }
    case 5: {
      const double radius = uniform(rng, 0.4, 0.8);
      const double half = uniform(rng, 0.5, 1.0);
      parts.push_back({2.0 * kPi * radius * 2.0 * half, [radius, half](Rng& r) {
                         const double a = uniform(r, 0.0, 2.0 * kPi);
                         return Vec3{radius * std::cos(a), uniform(r, -half, half), radius * std::sin(a)};
                       }});
      parts.push_back(disk_patch(-half, radius));
      parts.push_back(disk_patch(half, radius));
      break;
    }
    case 6: {
      const double w = uniform(rng, 0.6, 1.0);
      const double h = uniform(rng, 0.8, 1.4);
      const Vec3 apex{0, h / 2, 0};
      const Vec3 c0{-w, -h / 2, -w}, c1{w, -h / 2, -w}, c2{w, -h / 2, w}, c3{-w, -h / 2, w};
      parts.push_back(triangle_patch(apex, c0, c1));
      parts.push_back(triangle_patch(apex, c1, c2));
      parts.push_back(triangle_patch(apex, c2, c3));
      parts.push_back(triangle_patch(apex, c3, c0));
      parts.push_back(triangle_patch(c0, c1, c2));
      parts.push_back(triangle_patch(c0, c2, c3));
      break;
    }
    case 7: {
      const double t = uniform(rng, 0.15, 0.3);
      add_box(parts, {0, 0, 0}, {1.0, t, t});
      add_box(parts, {0, 0, 0}, {t, 1.0, t});
      add_box(parts, {0, 0, 0}, {t, t, 1.0});
      break;
    }
    default:
      throw std::out_of_range("shape class " + std::to_string(class_id) + " is out of range [0, " +
                              std::to_string(kNumShapeClasses) + ")");
  }
  return parts;
}

CameraPose rig_pose(double azimuth, double elevation, std::size_t height, std::size_t width) {
  const Vec3 eye{kRigRadius * std::cos(elevation) * std::cos(azimuth), kRigRadius * std::sin(elevation),
                 kRigRadius * std::cos(elevation) * std::sin(azimuth)};
  return CameraPose::look_at(eye, {0, 0, 0}, {0, 1, 0}, intrinsics_from_fov(width, height, kRigFovDegrees));
}

}  // namespace

CameraRig CameraRig::circular(std::size_t n, std::size_t height, std::size_t width, double azimuth_offset,
                              double elevation_offset) {
  if (n == 0) throw std::invalid_argument("camera rig needs at least one view");
  CameraRig rig;
  const double elevation = (kRigElevationDegrees + elevation_offset) * kPi / 180.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double az = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n) + azimuth_offset * kPi / 180.0;
    rig.azimuths.push_back(az);
    rig.poses.push_back(rig_pose(az, elevation, height, width));
  }
  return rig;
}

std::string_view shape_class_name(std::size_t class_id) {
  static constexpr std::array<std::string_view, kNumShapeClasses> names{
      "sphere", "box", "torus", "cone", "two_box", "cylinder", "pyramid", "cross"};
  if (class_id >= names.size()) throw std::out_of_range("shape class " + std::to_string(class_id) + " is out of range");
  return names[class_id];
}

ProceduralObject generate_object(std::size_t class_id, std::uint64_t seed) {
  Rng rng(derive_seed(seed, class_id));
  const auto parts = build_shape(class_id, rng);

  ProceduralObject obj;
  obj.class_id = class_id;
  obj.seed = seed;
  obj.size = uniform(rng, 0.75, 1.0);
  const double yaw = uniform(rng, 0.0, 2.0 * kPi);
  std::array<float, 3> tone_a{}, tone_b{};
  for (auto& c : tone_a) c = static_cast<float>(uniform(rng, 0.15, 0.85));
  for (auto& c : tone_b) c = static_cast<float>(uniform(rng, 0.15, 0.85));
  const Vec3 split = random_unit(rng);

  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& p : parts) cumulative.push_back(total += p.area);

  obj.positions.reserve(kPointsPerObject);
  double max_norm = 0.0;
  for (std::size_t i = 0; i < kPointsPerObject; ++i) {
    const double pick = uniform01(rng) * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    const auto index = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), parts.size() - 1);
    const Vec3 p = parts[index].sample(rng);
    max_norm = std::max(max_norm, norm(p));
    obj.positions.push_back(p);
  }

  const double s = obj.size / max_norm;
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  obj.colors.reserve(kPointsPerObject);
  for (auto& p : obj.positions) {
    p = Vec3{s * (cy * p[0] + sy * p[2]), s * p[1], s * (-sy * p[0] + cy * p[2])};
    obj.colors.push_back(dot(p, split) >= 0.0 ? tone_a : tone_b);
  }
  return obj;
}

std::vector<float> render_view(const ProceduralObject& object, const CameraPose& pose, std::size_t height,
                               std::size_t width) {
  const std::size_t plane = height * width;
  std::vector<float> image(3 * plane, 1.0f);
  std::vector<double> zbuf(plane, std::numeric_limits<double>::infinity());
  const double distance = norm(pose.position);
  const double near = std::max(distance - 1.0, 1e-6);
  const double far = distance + 1.0;
  for (std::size_t i = 0; i < object.positions.size(); ++i) {
    const auto p = project(pose, object.positions[i]);
    if (!p.in_front) continue;
    const double col = std::floor(p.u);
    const double row = std::floor(p.v);
    if (col < 0.0 || row < 0.0 || col >= static_cast<double>(width) || row >= static_cast<double>(height)) continue;
    const auto pixel = static_cast<std::size_t>(row) * width + static_cast<std::size_t>(col);
    if (p.depth >= zbuf[pixel]) continue;
    zbuf[pixel] = p.depth;
    const double shade = 1.0 - 0.5 * std::clamp((p.depth - near) / (far - near), 0.0, 1.0);
    for (std::size_t c = 0; c < 3; ++c) {
      image[c * plane + pixel] = static_cast<float>(object.colors[i][c] * shade);
    }
  }
  return image;
}

std::size_t object_class(std::uint64_t seed, std::size_t object_index, std::size_t num_classes) {
  if (num_classes == 0 || num_classes > kNumShapeClasses) {
    throw std::invalid_argument("number of classes must be in [1, " + std::to_string(kNumShapeClasses) + "]");
  }
  Rng rng(derive_seed(seed, kClassStream, object_index));
  return std::uniform_int_distribution<std::size_t>(0, num_classes - 1)(rng);
}

std::uint64_t object_seed(std::uint64_t seed, std::size_t object_index) {
  return derive_seed(seed, kObjectStream, object_index);
}

Dataset generate_dataset(const GenerateOptions& options) {
  if (options.views == 0) throw std::invalid_argument("dataset needs at least one view");
  if (options.image_size == 0) throw std::invalid_argument("image size must be positive");
  Dataset data;
  data.views = options.views;
  data.image = ImageShape{3, options.image_size, options.image_size};
  data.samples.resize(options.num_objects);
  const auto rig = CameraRig::circular(options.views, options.image_size, options.image_size);

  auto make_sample = [&](std::size_t k) {
    const std::size_t id = options.first_object + k;
    const auto class_id = object_class(options.seed, id, options.num_classes);
    const auto object = generate_object(class_id, object_seed(options.seed, id));
    MultiViewSample& s = data.samples[k];
    s.object_id = static_cast<std::uint32_t>(id);
    s.label = static_cast<std::uint32_t>(class_id);
    Rng jitter(derive_seed(options.seed, kJitterStream, id));
    for (std::size_t v = 0; v < options.views; ++v) {
      CameraPose pose = rig.poses[v];
      if (options.pose_jitter > 0.0) {
        const double az = uniform(jitter, -options.pose_jitter, options.pose_jitter) * kPi / 180.0;
        const double el = uniform(jitter, -options.pose_jitter, options.pose_jitter) * kPi / 180.0;
        pose = rig_pose(rig.azimuths[v] + az, kRigElevationDegrees * kPi / 180.0 + el, options.image_size,
                        options.image_size);
      }
      const auto pixels = render_view(object, pose, options.image_size, options.image_size);
      s.poses.push_back(pose);
      s.pixels.insert(s.pixels.end(), pixels.begin(), pixels.end());
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(1, options.num_objects));
  if (workers == 1) {
    for (std::size_t k = 0; k < options.num_objects; ++k) make_sample(k);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < options.num_objects; k += workers) make_sample(k);
      });
    }
  }
  return data;
}

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::random: return "random";
    case SamplerKind::fixed: return "fixed";
    case SamplerKind::same: return "same";
  }
  return "unknown";
}

SamplerKind parse_sampler(std::string_view text) {
  if (text == "random") return SamplerKind::random;
  if (text == "fixed") return SamplerKind::fixed;
  if (text == "same") return SamplerKind::same;
  throw std::invalid_argument("unknown sampler '" + std::string(text) + "' (expected random, fixed or same)");
}

ViewPair sample_pair_random(std::size_t n, std::size_t s, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sampler needs at least one view");
  if (s == 0) throw std::invalid_argument("sampler needs at least one source view");
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  ViewPair pair;
  for (std::size_t i = 0; i < s; ++i) pair.sources.push_back(pick(rng));
  pair.target = pick(rng);
  return pair;
}

ViewPair sample_pair_fixed(std::size_t n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("fixed sampler needs at least two views, got " + std::to_string(n));
  const auto source = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  return ViewPair{{source}, (source + 1) % n};
}

ViewPair sample_pair_same(std::size_t n, std::size_t s, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sampler needs at least one view");
  if (s == 0) throw std::invalid_argument("sampler needs at least one source view");
  const auto view = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  return ViewPair{std::vector<std::size_t>(s, view), view};
}

ViewPair sample_views(SamplerKind kind, std::size_t n, std::size_t s, Rng& rng) {
  if (kind == SamplerKind::random) return sample_pair_random(n, s, rng);
  if (kind == SamplerKind::same) return sample_pair_same(n, s, rng);
  if (s != 1) throw std::invalid_argument("fixed sampler supports exactly one source view");
  return sample_pair_fixed(n, rng);
}

}  // namespace vsa
