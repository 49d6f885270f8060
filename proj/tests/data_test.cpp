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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <vector>

#include "test_util.hpp"
#include "vsa/augment.hpp"
#include "vsa/camera.hpp"
#include "vsa/data.hpp"
#include "vsa/dataset_io.hpp"
#include "vsa/errors.hpp"
#include "vsa/image_io.hpp"

namespace vsa {
namespace {

double norm3(const Vec3& v) { return std::sqrt(dot(v, v)); }

Dataset small_dataset(std::size_t objects, std::size_t views, std::size_t size, std::uint64_t seed = 1) {
  GenerateOptions opt;
  opt.num_objects = objects;
  opt.views = views;
  opt.image_size = size;
  opt.seed = seed;
  return generate_dataset(opt);
}

// Per-row [first, last] non-background columns, or {-1, -1} for empty rows.
std::vector<std::pair<int, int>> row_spans(std::span<const float> image, std::size_t size) {
  std::vector<std::pair<int, int>> spans(size, {-1, -1});
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      const bool ink = image[r * size + c] < 1.0f || image[size * size + r * size + c] < 1.0f ||
                       image[2 * size * size + r * size + c] < 1.0f;
      if (!ink) continue;
      if (spans[r].first < 0) spans[r].first = static_cast<int>(c);
      spans[r].second = static_cast<int>(c);
    }
  }
  return spans;
}

TEST(CameraRigTest, EqualAzimuthStepsAndFixedRadius) {
  for (std::size_t n : {1u, 5u, 12u}) {
    const auto rig = CameraRig::circular(n, 32, 32);
    ASSERT_EQ(rig.size(), n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      EXPECT_NEAR(rig.azimuths[i + 1] - rig.azimuths[i], 2.0 * std::numbers::pi / n, 1e-9);
    }
    for (const auto& pose : rig.poses) {
      EXPECT_NEAR(norm3(pose.position), kRigRadius, 1e-12);
      EXPECT_NEAR(std::asin(pose.position[1] / kRigRadius), kRigElevationDegrees * std::numbers::pi / 180.0, 1e-12);
    }
  }
}

TEST(CameraRigTest, EveryCameraLooksAtTheOrigin) {
  const auto rig = CameraRig::circular(12, 32, 32, 3.0, -2.0);
  for (const auto& pose : rig.poses) {
    const auto f = pose.forward();
    // Distance from the origin to the optical axis, and the axis points inward.
    EXPECT_LT(norm3(cross(pose.position, f)), 1e-6);
    EXPECT_LT(dot(pose.position, f), 0.0);
    const auto p = project(pose, {0.0, 0.0, 0.0});
    EXPECT_NEAR(p.u, 16.0, 1e-9);
    EXPECT_NEAR(p.v, 16.0, 1e-9);
  }
}

TEST(CameraTest, QuaternionRoundTrip) {
  const auto rig = CameraRig::circular(7, 16, 16, 11.0, 5.0);
  for (const auto& pose : rig.poses) {
    const auto m = pose.rotation_matrix();
    EXPECT_NEAR(determinant(m), 1.0, 1e-12);
    const auto back = matrix_from_quat(quat_from_matrix(m));
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(back[i][j], m[i][j], 1e-12);
    }
  }
}

TEST(GenerateObjectTest, DeterministicPerSeed) {
  const auto a = generate_object(0, 42);
  const auto b = generate_object(0, 42);
  EXPECT_EQ(a.positions, b.positions);
  EXPECT_EQ(a.colors, b.colors);
  EXPECT_EQ(a.positions.size(), kPointsPerObject);
  EXPECT_NE(generate_object(0, 43).positions, a.positions);
}

TEST(GenerateObjectTest, SpherePointsLieOnOneRadius) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = generate_object(0, seed);
    ASSERT_EQ(shape_class_name(s.class_id), "sphere");
    for (const auto& p : s.positions) EXPECT_NEAR(norm3(p), s.size, 1e-9);
  }
}

TEST(GenerateObjectTest, EveryClassFitsTheUnitBall) {
  for (std::size_t c = 0; c < kNumShapeClasses; ++c) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto obj = generate_object(c, seed);
      EXPECT_EQ(obj.class_id, c);
      double max_norm = 0.0;
      for (const auto& p : obj.positions) max_norm = std::max(max_norm, norm3(p));
      EXPECT_LE(max_norm, 1.0 + 1e-12);
      EXPECT_NEAR(max_norm, obj.size, 1e-9);
      for (const auto& col : obj.colors) {
        for (float v : col) {
          EXPECT_GE(v, 0.0f);
          EXPECT_LE(v, 1.0f);
        }
      }
    }
  }
  EXPECT_THROW(generate_object(kNumShapeClasses, 0), std::out_of_range);
}

TEST(GenerateObjectTest, ClassSamplingIsUniform) {
  std::vector<int> counts(kNumShapeClasses, 0);
  for (std::size_t k = 0; k < 1000; ++k) ++counts[object_class(77, k, kNumShapeClasses)];
  for (int c : counts) EXPECT_NEAR(c / 1000.0, 1.0 / kNumShapeClasses, 0.05);
}

TEST(RenderTest, EmptyCloudIsWhite) {
  const ProceduralObject empty;
  const auto rig = CameraRig::circular(4, 16, 16);
  const auto image = render_view(empty, rig.poses[1], 16, 16);
  EXPECT_EQ(image, std::vector<float>(3 * 16 * 16, 1.0f));
}

TEST(RenderTest, PointAtOriginLandsInTheCenter) {
  ProceduralObject obj;
  obj.positions = {{0.0, 0.0, 0.0}};
  obj.colors = {{1.0f, 0.5f, 0.25f}};
  const std::size_t size = 33;
  const auto pose = CameraPose::look_at({0.0, 0.0, 3.0}, {0.0, 0.0, 0.0}, {0.0, 1.0, 0.0},
                                        intrinsics_from_fov(size, size, 50.0));
  const auto image = render_view(obj, pose, size, size);
  // Depth 3 between near = 2 and far = 4 gives brightness 1 - 0.5 * 0.5.
  const std::size_t center = 16 * size + 16;
  const std::size_t plane = size * size;
  EXPECT_FLOAT_EQ(image[center], 0.75f);
  EXPECT_FLOAT_EQ(image[plane + center], 0.375f);
  EXPECT_FLOAT_EQ(image[2 * plane + center], 0.1875f);
  const auto inked = std::count_if(image.begin(), image.end(), [](float v) { return v < 1.0f; });
  EXPECT_EQ(inked, 3);
}

TEST(RenderTest, PointsBehindTheCameraAreCulled) {
  ProceduralObject obj;
  obj.positions = {{0.0, 0.0, 5.0}};
  obj.colors = {{0.0f, 0.0f, 0.0f}};
  const auto pose = CameraPose::look_at({0.0, 0.0, 3.0}, {0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, intrinsics_from_fov(8, 8, 50.0));
  EXPECT_EQ(render_view(obj, pose, 8, 8), std::vector<float>(3 * 64, 1.0f));
}

TEST(RenderTest, NearerPointWins) {
  ProceduralObject obj;
  obj.positions = {{0.0, 0.0, -0.5}, {0.0, 0.0, 0.5}};
  obj.colors = {{1.0f, 0.0f, 0.0f}, {0.0f, 1.0f, 0.0f}};
  const auto pose = CameraPose::look_at({0.0, 0.0, 3.0}, {0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, intrinsics_from_fov(9, 9, 50.0));
  const auto image = render_view(obj, pose, 9, 9);
  const std::size_t center = 4 * 9 + 4;
  EXPECT_EQ(image[center], 0.0f);
  EXPECT_GT(image[81 + center], 0.0f);
}

TEST(RenderTest, OppositeViewsOfASphereAreMirrorImages) {
  const auto sphere = generate_object(0, 5);
  const std::size_t size = 32;
  const auto rig = CameraRig::circular(12, size, size);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto a = row_spans(render_view(sphere, rig.poses[i], size, size), size);
    const auto b = row_spans(render_view(sphere, rig.poses[i + 6], size, size), size);
    std::size_t rows = 0;
    for (std::size_t r = 0; r < size; ++r) {
      ASSERT_EQ(a[r].first < 0, b[r].first < 0) << "row " << r;
      if (a[r].first < 0) continue;
      ++rows;
      // Mirroring column c maps it to size - 1 - c.
      EXPECT_LE(std::abs(a[r].first - (static_cast<int>(size) - 1 - b[r].second)), 1) << "row " << r;
      EXPECT_LE(std::abs(a[r].second - (static_cast<int>(size) - 1 - b[r].first)), 1) << "row " << r;
    }
    EXPECT_GT(rows, 10u);
  }
}

TEST(GenerateDatasetTest, LabelsPosesAndPixelRange) {
  const auto data = small_dataset(6, 4, 16);
  ASSERT_EQ(data.size(), 6u);
  const auto rig = CameraRig::circular(4, 16, 16);
  for (const auto& s : data.samples) {
    EXPECT_LT(s.label, kNumShapeClasses);
    EXPECT_EQ(s.pixels.size(), 4 * data.image.numel());
    ASSERT_EQ(s.poses.size(), 4u);
    for (std::size_t v = 0; v < 4; ++v) EXPECT_EQ(s.poses[v], rig.poses[v]);
    for (float p : s.pixels) {
      EXPECT_GE(p, 0.0f);
      EXPECT_LE(p, 1.0f);
    }
    // View i is exactly the rendering from rig pose i.
    const auto obj = generate_object(s.label, object_seed(1, s.object_id));
    for (std::size_t v = 0; v < 4; ++v) {
      const auto view = s.view(v, data.image);
      EXPECT_EQ(std::vector<float>(view.begin(), view.end()), render_view(obj, rig.poses[v], 16, 16));
    }
  }
}

TEST(GenerateDatasetTest, DeterministicAndWorkerIndependent) {
  GenerateOptions opt;
  opt.num_objects = 9;
  opt.views = 3;
  opt.image_size = 16;
  opt.seed = 4;
  const auto a = generate_dataset(opt);
  opt.workers = 4;
  const auto b = generate_dataset(opt);
  EXPECT_EQ(a, b);
  opt.seed = 5;
  EXPECT_NE(generate_dataset(opt), a);
}

TEST(GenerateDatasetTest, SplitsShareTheMasterSeed) {
  GenerateOptions opt;
  opt.num_objects = 6;
  opt.views = 2;
  opt.image_size = 8;
  opt.seed = 2;
  const auto all = generate_dataset(opt);
  opt.num_objects = 3;
  opt.first_object = 3;
  const auto tail = generate_dataset(opt);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(tail.samples[i], all.samples[3 + i]);
}

TEST(GenerateDatasetTest, JitterMovesCamerasButKeepsThemAimed) {
  GenerateOptions opt;
  opt.num_objects = 2;
  opt.views = 4;
  opt.image_size = 16;
  opt.pose_jitter = 10.0;
  const auto data = generate_dataset(opt);
  const auto rig = CameraRig::circular(4, 16, 16);
  EXPECT_NE(data.samples[0].poses[0], rig.poses[0]);
  for (const auto& pose : data.samples[1].poses) EXPECT_LT(norm3(cross(pose.position, pose.forward())), 1e-6);
}

TEST(SamplerTest, RandomPairsAreUniformIncludingDiagonal) {
  Rng rng(1);
  const std::size_t n = 12;
  std::vector<int> counts(n * n, 0);
  const int draws = 120000;
  for (int i = 0; i < draws; ++i) {
    const auto p = sample_pair_random(n, 1, rng);
    ASSERT_EQ(p.sources.size(), 1u);
    ++counts[p.sources[0] * n + p.target];
  }
  const double expected = static_cast<double>(draws) / (n * n);
  for (int c : counts) EXPECT_NEAR(c, expected, 0.1 * expected);
}

TEST(SamplerTest, SingleViewRigIsAutoencoding) {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto p = sample_pair_random(1, 1, rng);
    EXPECT_EQ(p.sources, std::vector<std::size_t>{0});
    EXPECT_EQ(p.target, 0u);
  }
}

TEST(SamplerTest, MultipleSourcesAreIndependent) {
  Rng rng(3);
  int equal = 0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const auto p = sample_pair_random(4, 2, rng);
    ASSERT_EQ(p.sources.size(), 2u);
    equal += p.sources[0] == p.sources[1];
  }
  EXPECT_NEAR(static_cast<double>(equal) / draws, 0.25, 0.02);
}

TEST(SamplerTest, FixedTargetIsTheNextView) {
  Rng rng(4);
  const std::size_t n = 12;
  std::map<std::size_t, std::size_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto p = sample_pair_fixed(n, rng);
    ASSERT_EQ(p.sources.size(), 1u);
    EXPECT_EQ(p.target, (p.sources[0] + 1) % n);
    EXPECT_NE(p.target, p.sources[0]);
    seen[p.sources[0]] = p.target;
  }
  EXPECT_EQ(seen.at(3), 4u);
  EXPECT_EQ(seen.at(11), 0u);
  // Every source was drawn and the targets are a permutation.
  ASSERT_EQ(seen.size(), n);
  std::vector<bool> hit(n, false);
  for (auto [s, t] : seen) hit[t] = true;
  EXPECT_TRUE(std::all_of(hit.begin(), hit.end(), [](bool b) { return b; }));
  EXPECT_THROW(sample_pair_fixed(1, rng), std::invalid_argument);
}

TEST(SamplerTest, DispatchAndNames) {
  Rng rng(5);
  EXPECT_EQ(parse_sampler("fixed"), SamplerKind::fixed);
  EXPECT_EQ(parse_sampler(to_string(SamplerKind::random)), SamplerKind::random);
  EXPECT_THROW(parse_sampler("next"), std::invalid_argument);
  EXPECT_THROW(sample_views(SamplerKind::fixed, 12, 2, rng), std::invalid_argument);
  const auto p = sample_views(SamplerKind::fixed, 12, 1, rng);
  EXPECT_EQ(p.target, (p.sources[0] + 1) % 12);
}

TEST(SamplerTest, SameSamplerRepeatsOneView) {
  Rng rng(8);
  EXPECT_EQ(parse_sampler(to_string(SamplerKind::same)), SamplerKind::same);
  std::vector<int> hits(6, 0);
  for (int i = 0; i < 6000; ++i) {
    const auto p = sample_views(SamplerKind::same, 6, 2, rng);
    ASSERT_EQ(p.sources.size(), 2u);
    EXPECT_EQ(p.sources[0], p.target);
    EXPECT_EQ(p.sources[1], p.target);
    ++hits[p.target];
  }
  for (int h : hits) EXPECT_NEAR(h / 6000.0, 1.0 / 6, 0.03);
}

TEST(AugmentTest, PolicyNames) {
  EXPECT_TRUE(parse_augment_policy("none").empty());
  EXPECT_EQ(parse_augment_policy("rc"), (AugmentPolicy{true, false}));
  EXPECT_EQ(parse_augment_policy("jt"), (AugmentPolicy{false, true}));
  EXPECT_EQ(parse_augment_policy("jt+rc"), (AugmentPolicy{true, true}));
  EXPECT_EQ(to_string(AugmentPolicy{true, true}), "rc+jt");
  EXPECT_THROW(parse_augment_policy("randaugment"), std::invalid_argument);
}

TEST(AugmentTest, EmptyPolicyIsIdentity) {
  const auto data = small_dataset(1, 1, 16);
  const auto view = data.samples[0].view(0, data.image);
  Rng rng(6);
  const auto out = augment_source(view, data.image, AugmentPolicy{}, rng);
  EXPECT_TRUE(std::equal(out.begin(), out.end(), view.begin(), view.end()));
}

TEST(AugmentTest, OutputShapeNeverChanges) {
  const auto data = small_dataset(1, 1, 16);
  const auto view = data.samples[0].view(0, data.image);
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const auto out = augment_source(view, data.image, AugmentPolicy{true, true}, rng);
    ASSERT_EQ(out.size(), view.size());
    for (float v : out) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
}

TEST(AugmentTest, UnitFactorsAndFullCropAreIdentity) {
  const auto data = small_dataset(1, 1, 16);
  const auto view = data.samples[0].view(0, data.image);
  const std::vector<double> ones{1.0, 1.0, 1.0};
  const auto jittered = color_jitter(view, data.image, ones);
  EXPECT_TRUE(std::equal(jittered.begin(), jittered.end(), view.begin(), view.end()));
  const auto cropped = crop_resize(view, data.image, 1.0, 0.3, 0.8);
  EXPECT_TRUE(std::equal(cropped.begin(), cropped.end(), view.begin(), view.end()));
}

TEST(AugmentTest, JitterScalesAndClamps) {
  const ImageShape shape{3, 1, 2};
  const std::vector<float> image{0.5f, 1.0f, 0.5f, 0.2f, 0.9f, 0.0f};
  const std::vector<double> factors{1.2, 0.8, 1.2};
  const auto out = color_jitter(image, shape, factors);
  EXPECT_FLOAT_EQ(out[0], 0.6f);
  EXPECT_FLOAT_EQ(out[1], 1.0f);
  EXPECT_FLOAT_EQ(out[2], 0.4f);
  EXPECT_FLOAT_EQ(out[3], 0.16f);
  EXPECT_FLOAT_EQ(out[4], 1.0f);
  EXPECT_FLOAT_EQ(out[5], 0.0f);
}

TEST(AugmentTest, CropOfALinearRampStaysLinear) {
  // Bilinear resampling reproduces an affine image exactly inside the window.
  const std::size_t size = 10;
  const ImageShape shape{1, size, size};
  std::vector<float> ramp(size * size);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) ramp[r * size + c] = static_cast<float>(c) / 20.0f;
  }
  const auto out = crop_resize(ramp, shape, 0.6, 0.0, 0.0);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c + 1 < size; ++c) EXPECT_LE(out[r * size + c], out[r * size + c + 1] + 1e-6f);
    EXPECT_GE(out[r * size], 0.0f);
    EXPECT_LE(out[r * size + size - 1], 5.4f / 20.0f + 1e-6f);
  }
}

TEST(DatasetIoTest, RoundTripIsBitExact) {
  const test::TempDir dir("dataset");
  GenerateOptions opt;
  opt.num_objects = 10;
  opt.views = 3;
  opt.image_size = 8;
  opt.pose_jitter = 5.0;
  const auto data = generate_dataset(opt);
  write_dataset(dir / "d.vsad", data);
  EXPECT_EQ(read_dataset(dir / "d.vsad"), data);
}

TEST(DatasetIoTest, FileSizeMatchesLayout) {
  const test::TempDir dir("dataset");
  const auto data = small_dataset(10, 3, 8);
  write_dataset(dir / "d.vsad", data);
  const std::size_t per_sample = 4 + 4 + 3 * 11 * 8 + 3 * 3 * 8 * 8 * 4;
  EXPECT_EQ(dataset_sample_bytes(3, data.image), per_sample);
  EXPECT_EQ(std::filesystem::file_size(dir / "d.vsad"), 8 + 4 + 5 * 4 + 10 * per_sample);
}

TEST(DatasetIoTest, CorruptFilesAreRejected) {
  const test::TempDir dir("dataset");
  const auto data = small_dataset(2, 2, 8);
  write_dataset(dir / "d.vsad", data);
  auto bytes = test::read_bytes(dir / "d.vsad");
  auto write = [&](const std::vector<char>& b) {
    std::ofstream(dir / "x.vsad", std::ios::binary).write(b.data(), static_cast<std::streamsize>(b.size()));
  };
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  write(bad_magic);
  EXPECT_THROW(read_dataset(dir / "x.vsad"), FormatError);
  auto bad_version = bytes;
  bad_version[8] = 9;
  write(bad_version);
  EXPECT_THROW(read_dataset(dir / "x.vsad"), FormatError);
  write(std::vector<char>(bytes.begin(), bytes.end() - 3));
  EXPECT_THROW(read_dataset(dir / "x.vsad"), FormatError);
  auto longer = bytes;
  longer.push_back(0);
  write(longer);
  EXPECT_THROW(read_dataset(dir / "x.vsad"), FormatError);
  EXPECT_THROW(read_dataset(dir / "missing.vsad"), IoError);
}

TEST(ImageIoTest, PpmRoundTrip) {
  const test::TempDir dir("ppm");
  const ImageShape shape{3, 2, 3};
  const std::vector<float> chw{0.0f, 0.5f, 1.0f, 0.2f, 0.4f, 0.6f, 1.0f, 1.0f, 1.0f,
                               0.0f, 0.0f, 0.0f, 0.1f, 0.9f, 2.0f, -1.0f, 0.3f, 0.7f};
  const auto rgb = to_rgb(chw, shape);
  EXPECT_EQ(rgb.width, 3u);
  EXPECT_EQ(rgb.height, 2u);
  // Pixel (0, 1): channels 0.5, 1.0, 0.9 -> 128, 255, 230.
  EXPECT_EQ(rgb.rgb[3], 128);
  EXPECT_EQ(rgb.rgb[4], 255);
  EXPECT_EQ(rgb.rgb[5], 230);
  EXPECT_EQ(rgb.rgb[8], 255);  // clamped from 2.0
  const auto strip = hstack({rgb, rgb});
  EXPECT_EQ(strip.width, 6u);
  write_ppm(dir / "a.ppm", strip);
  EXPECT_EQ(read_ppm(dir / "a.ppm"), strip);
  std::ofstream(dir / "bad.ppm") << "P3\n1 1\n255\n0 0 0\n";
  EXPECT_THROW(read_ppm(dir / "bad.ppm"), FormatError);
  std::ofstream(dir / "short.ppm", std::ios::binary) << "P6\n2 2\n255\n" << std::string(5, 'x');
  EXPECT_THROW(read_ppm(dir / "short.ppm"), FormatError);
}

}  // namespace
}  // namespace vsa
