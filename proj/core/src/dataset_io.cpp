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

#include "vsa/dataset_io.hpp"

#include <string>

#include "binary_io.hpp"

namespace vsa {

std::size_t dataset_sample_bytes(std::size_t views, const ImageShape& image) {
  return 2 * sizeof(std::uint32_t) + views * 11 * sizeof(double) + views * image.numel() * sizeof(float);
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  io::Writer w;
  w.put_bytes(std::string_view(kDatasetMagic, sizeof(kDatasetMagic)));
  w.put(kDatasetVersion);
  for (auto v : {data.samples.size(), data.views, data.image.height, data.image.width, data.image.channels}) {
    w.put(static_cast<std::uint32_t>(v));
  }
  for (const auto& s : data.samples) {
    if (s.poses.size() != data.views || s.pixels.size() != data.views * data.image.numel()) {
      throw std::invalid_argument("sample " + std::to_string(s.object_id) + " does not match the dataset geometry");
    }
    w.put(s.object_id);
    w.put(s.label);
    for (const auto& p : s.poses) {
      for (double x : p.position) w.put(x);
      for (double x : p.rotation) w.put(x);
      for (double x : {p.intrinsics.fx, p.intrinsics.fy, p.intrinsics.cx, p.intrinsics.cy}) w.put(x);
    }
    w.put_array(s.pixels.data(), s.pixels.size());
  }
  io::write_file(path, w.bytes());
}

Dataset read_dataset(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  io::Reader r(bytes, "dataset " + path.string());
  if (r.remaining() < sizeof(kDatasetMagic) ||
      r.get_bytes(sizeof(kDatasetMagic)) != std::string_view(kDatasetMagic, sizeof(kDatasetMagic))) {
    r.fail("bad magic (not a dataset file)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kDatasetVersion) {
    r.fail("unsupported format version " + std::to_string(version) + " (expected " + std::to_string(kDatasetVersion) +
           ")");
  }
  Dataset data;
  const std::size_t count = r.get<std::uint32_t>();
  data.views = r.get<std::uint32_t>();
  data.image.height = r.get<std::uint32_t>();
  data.image.width = r.get<std::uint32_t>();
  data.image.channels = r.get<std::uint32_t>();
  if (data.views == 0 || data.image.numel() == 0) r.fail("empty view or image geometry");
  const auto per_sample = dataset_sample_bytes(data.views, data.image);
  if (count * per_sample != r.remaining()) {
    r.fail("expected " + std::to_string(count * per_sample) + " payload bytes for " + std::to_string(count) +
           " samples, found " + std::to_string(r.remaining()));
  }
  data.samples.resize(count);
  for (auto& s : data.samples) {
    s.object_id = r.get<std::uint32_t>();
    s.label = r.get<std::uint32_t>();
    s.poses.resize(data.views);
    for (auto& p : s.poses) {
      for (double& x : p.position) x = r.get<double>();
      for (double& x : p.rotation) x = r.get<double>();
      p.intrinsics.fx = r.get<double>();
      p.intrinsics.fy = r.get<double>();
      p.intrinsics.cx = r.get<double>();
      p.intrinsics.cy = r.get<double>();
    }
    s.pixels.resize(data.views * data.image.numel());
    r.get_array(s.pixels.data(), s.pixels.size());
  }
  r.expect_end();
  return data;
}

}  // namespace vsa
