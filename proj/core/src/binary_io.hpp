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

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "vsa/errors.hpp"

namespace vsa::io {

// Little-endian encoder into a byte buffer.
class Writer {
 public:
  template <typename U>
  void put(U value) {
    static_assert(std::is_arithmetic_v<U>);
    if constexpr (std::is_floating_point_v<U>) {
      using Bits = std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint64_t>;
      put(std::bit_cast<Bits>(value));
    } else {
      using Unsigned = std::make_unsigned_t<U>;
      auto bits = static_cast<Unsigned>(value);
      for (std::size_t i = 0; i < sizeof(U); ++i) {
        bytes_.push_back(static_cast<char>(bits & 0xFF));
        if constexpr (sizeof(U) > 1) bits = static_cast<Unsigned>(bits >> 8);
      }
    }
  }

  void put_bytes(std::string_view raw) { bytes_.insert(bytes_.end(), raw.begin(), raw.end()); }
  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s);
  }
  template <typename U>
  void put_array(const U* values, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
      const auto* raw = reinterpret_cast<const char*>(values);
      bytes_.insert(bytes_.end(), raw, raw + count * sizeof(U));
    } else {
      for (std::size_t i = 0; i < count; ++i) put(values[i]);
    }
  }

  const std::vector<char>& bytes() const { return bytes_; }
  std::size_t size() const { return bytes_.size(); }

 private:
  std::vector<char> bytes_;
};

// Bounds-checked little-endian decoder. Every overrun throws FormatError.
class Reader {
 public:
  Reader(const std::vector<char>& bytes, std::string context) : bytes_(bytes), context_(std::move(context)) {}

  template <typename U>
  U get() {
    static_assert(std::is_arithmetic_v<U>);
    if constexpr (std::is_floating_point_v<U>) {
      using Bits = std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint64_t>;
      return std::bit_cast<U>(get<Bits>());
    } else {
      require(sizeof(U));
      using Unsigned = std::make_unsigned_t<U>;
      Unsigned bits = 0;
      for (std::size_t i = 0; i < sizeof(U); ++i) {
        bits = static_cast<Unsigned>(bits | (static_cast<Unsigned>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i)));
      }
      pos_ += sizeof(U);
      return static_cast<U>(bits);
    }
  }

  std::string get_bytes(std::size_t count) {
    require(count);
    std::string out(bytes_.data() + pos_, count);
    pos_ += count;
    return out;
  }
  std::string get_string(std::size_t max_length = 1u << 24) {
    const auto n = get<std::uint32_t>();
    if (n > max_length) fail("string length " + std::to_string(n) + " is implausible");
    return get_bytes(n);
  }
  template <typename U>
  void get_array(U* out, std::size_t count) {
    require(count * sizeof(U));
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out, bytes_.data() + pos_, count * sizeof(U));
      pos_ += count * sizeof(U);
    } else {
      for (std::size_t i = 0; i < count; ++i) out[i] = get<U>();
    }
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  void expect_end() const {
    if (pos_ != bytes_.size()) fail(std::to_string(bytes_.size() - pos_) + " trailing bytes");
  }
  [[noreturn]] void fail(const std::string& what) const { throw FormatError(context_ + ": " + what); }

 private:
  void require(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail("truncated file");
  }

  const std::vector<char>& bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<char>& bytes);

}  // namespace vsa::io
