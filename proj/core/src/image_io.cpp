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

#include "vsa/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

#include "binary_io.hpp"
#include "vsa/errors.hpp"

namespace vsa {

RgbImage to_rgb(std::span<const float> chw, const ImageShape& shape) {
  if (shape.channels != 3 || chw.size() != shape.numel()) {
    throw std::invalid_argument("to_rgb expects a (3, H, W) image");
  }
  RgbImage img{shape.width, shape.height, std::vector<unsigned char>(3 * shape.width * shape.height)};
  const std::size_t plane = shape.width * shape.height;
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const float v = std::clamp(chw[c * plane + i], 0.0f, 1.0f);
      img.rgb[3 * i + c] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
  }
  return img;
}

RgbImage hstack(const std::vector<RgbImage>& images) {
  if (images.empty()) return {};
  RgbImage out;
  out.height = images.front().height;
  for (const auto& im : images) {
    if (im.height != out.height) throw std::invalid_argument("hstack: images differ in height");
    out.width += im.width;
  }
  out.rgb.resize(3 * out.width * out.height);
  std::size_t offset = 0;
  for (const auto& im : images) {
    for (std::size_t row = 0; row < im.height; ++row) {
      std::copy_n(im.rgb.begin() + static_cast<std::ptrdiff_t>(3 * row * im.width), 3 * im.width,
                  out.rgb.begin() + static_cast<std::ptrdiff_t>(3 * (row * out.width + offset)));
    }
    offset += im.width;
  }
  return out;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  if (image.rgb.size() != 3 * image.width * image.height) throw std::invalid_argument("write_ppm: bad pixel buffer");
  const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<char> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), image.rgb.begin(), image.rgb.end());
  io::write_file(path, bytes);
}

RgbImage read_ppm(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) -> void { throw FormatError("image " + path.string() + ": " + what); };
  auto skip_space = [&] {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        return;
      }
    }
  };
  auto number = [&]() -> std::size_t {
    skip_space();
    std::size_t v = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos])) && pos - start < 9) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos++] - '0');
    }
    if (pos == start) fail("malformed header");
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') fail("not a binary PPM (P6)");
  pos = 2;
  RgbImage img;
  img.width = number();
  img.height = number();
  const auto maxval = number();
  if (maxval != 255) fail("unsupported maxval " + std::to_string(maxval));
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) fail("malformed header");
  ++pos;
  const std::size_t n = 3 * img.width * img.height;
  if (bytes.size() - pos != n) fail("expected " + std::to_string(n) + " pixel bytes, found " +
                                    std::to_string(bytes.size() - pos));
  img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

}  // namespace vsa
