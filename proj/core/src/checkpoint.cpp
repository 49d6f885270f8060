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

#include "vsa/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <map>

#include "binary_io.hpp"

namespace vsa {

namespace {

void put_config(io::Writer& w, const VsaConfig& c) {
  for (auto v : {c.image_size, c.patch_size, c.channels, c.enc_dim, c.enc_depth, c.enc_heads, c.dec_dim, c.dec_depth,
                 c.dec_cross, c.dec_heads, c.n_views, c.num_source_views}) {
    w.put(static_cast<std::uint32_t>(v));
  }
  w.put(static_cast<std::uint32_t>(c.pose_mode));
  w.put(c.mask_ratio);
}

VsaConfig get_config(io::Reader& r) {
  VsaConfig c;
  for (auto* field : {&c.image_size, &c.patch_size, &c.channels, &c.enc_dim, &c.enc_depth, &c.enc_heads, &c.dec_dim,
                      &c.dec_depth, &c.dec_cross, &c.dec_heads, &c.n_views, &c.num_source_views}) {
    *field = r.get<std::uint32_t>();
  }
  const auto mode = r.get<std::uint32_t>();
  if (mode > static_cast<std::uint32_t>(PoseMode::ray)) r.fail("unknown pose mode " + std::to_string(mode));
  c.pose_mode = static_cast<PoseMode>(mode);
  c.mask_ratio = r.get<double>();
  return c;
}

std::uint64_t fnv1a(const std::vector<char>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char b : bytes) {
    h ^= static_cast<unsigned char>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

const NamedArray* CheckpointFile::find(const std::string& name) const {
  const auto it = std::find_if(tensors.begin(), tensors.end(), [&](const NamedArray& a) { return a.name == name; });
  return it == tensors.end() ? nullptr : &*it;
}

std::vector<char> encode_config(const VsaConfig& config) {
  io::Writer w;
  put_config(w, config);
  return w.bytes();
}

std::uint64_t config_fingerprint(const VsaConfig& config) { return fnv1a(encode_config(config)); }

void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& checkpoint) {
  io::Writer w;
  w.put_bytes(std::string_view(kCheckpointMagic, sizeof(kCheckpointMagic)));
  w.put(kCheckpointVersion);
  put_config(w, checkpoint.config);
  w.put(config_fingerprint(checkpoint.config));
  w.put(checkpoint.step);
  w.put(checkpoint.seed);
  w.put_string(checkpoint.run_config);
  w.put(static_cast<std::uint32_t>(checkpoint.tensors.size()));
  for (const auto& t : checkpoint.tensors) {
    if (shape_numel(t.shape) != t.values.size()) {
      throw ShapeError("checkpoint tensor '" + t.name + "' has inconsistent shape " + shape_str(t.shape));
    }
    w.put_string(t.name);
    w.put(static_cast<std::uint32_t>(t.shape.size()));
    for (auto e : t.shape) w.put(static_cast<std::uint64_t>(e));
    w.put_array(t.values.data(), t.values.size());
  }
  io::write_file(path, w.bytes());
}

CheckpointFile read_checkpoint(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  io::Reader r(bytes, "checkpoint " + path.string());
  if (r.remaining() < sizeof(kCheckpointMagic) ||
      r.get_bytes(sizeof(kCheckpointMagic)) != std::string_view(kCheckpointMagic, sizeof(kCheckpointMagic))) {
    r.fail("bad magic (not a checkpoint file)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    r.fail("unsupported format version " + std::to_string(version) + " (expected " +
           std::to_string(kCheckpointVersion) + ")");
  }
  CheckpointFile ck;
  ck.config = get_config(r);
  if (r.get<std::uint64_t>() != config_fingerprint(ck.config)) r.fail("config fingerprint mismatch");
  ck.step = r.get<std::uint64_t>();
  ck.seed = r.get<std::uint64_t>();
  ck.run_config = r.get_string();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = r.get_string(4096);
    const auto rank = r.get<std::uint32_t>();
    if (rank == 0 || rank > 8) r.fail("tensor '" + a.name + "' has invalid rank " + std::to_string(rank));
    std::uint64_t total = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const auto e = r.get<std::uint64_t>();
      if (e == 0 || e > (1ULL << 32)) r.fail("tensor '" + a.name + "' has invalid extent");
      a.shape.push_back(static_cast<std::size_t>(e));
      total *= e;
    }
    if (total * sizeof(float) > r.remaining()) r.fail("truncated file");
    a.values.resize(static_cast<std::size_t>(total));
    r.get_array(a.values.data(), a.values.size());
    ck.tensors.push_back(std::move(a));
  }
  r.expect_end();
  return ck;
}

template <typename T>
NamedArray to_named_array(const std::string& name, const Tensor<T>& tensor) {
  NamedArray a{name, tensor.shape(), {}};
  a.values.reserve(tensor.numel());
  for (auto v : tensor.data()) a.values.push_back(static_cast<float>(v));
  return a;
}

template <typename T>
Tensor<T> from_named_array(const NamedArray& array) {
  std::vector<T> values(array.values.begin(), array.values.end());
  return Tensor<T>(array.shape, std::move(values));
}

template <typename T>
std::vector<NamedArray> export_weights(VsaWeights<T>& weights) {
  std::vector<NamedArray> out;
  weights.visit([&](const std::string& name, Tensor<T>& t) { out.push_back(to_named_array(name, t)); });
  return out;
}

template <typename T>
VsaWeights<T> import_weights(const VsaConfig& config, const std::vector<NamedArray>& arrays) {
  std::map<std::string, const NamedArray*> by_name;
  for (const auto& a : arrays) by_name[a.name] = &a;
  auto weights = VsaWeights<T>::init(config, 0);
  weights.visit([&](const std::string& name, Tensor<T>& t) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("checkpoint is missing parameter '" + name + "'");
    if (it->second->shape != t.shape()) {
      throw FormatError("checkpoint parameter '" + name + "' has shape " + shape_str(it->second->shape) +
                        ", expected " + shape_str(t.shape()));
    }
    auto dst = t.mutable_data();
    std::copy(it->second->values.begin(), it->second->values.end(), dst.begin());
  });
  return weights;
}

template NamedArray to_named_array<float>(const std::string&, const Tensor<float>&);
template NamedArray to_named_array<double>(const std::string&, const Tensor<double>&);
template Tensor<float> from_named_array<float>(const NamedArray&);
template Tensor<double> from_named_array<double>(const NamedArray&);
template std::vector<NamedArray> export_weights<float>(VsaWeights<float>&);
template std::vector<NamedArray> export_weights<double>(VsaWeights<double>&);
template VsaWeights<float> import_weights<float>(const VsaConfig&, const std::vector<NamedArray>&);
template VsaWeights<double> import_weights<double>(const VsaConfig&, const std::vector<NamedArray>&);

}  // namespace vsa
