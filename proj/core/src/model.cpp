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

#include "vsa/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vsa {

std::string_view to_string(PoseMode mode) {
  switch (mode) {
    case PoseMode::discrete:
      return "discrete";
    case PoseMode::ray:
      return "ray";
  }
  return "unknown";
}

PoseMode parse_pose_mode(std::string_view text) {
  if (text == "discrete") return PoseMode::discrete;
  if (text == "ray") return PoseMode::ray;
  throw std::invalid_argument("unknown pose mode '" + std::string(text) + "' (expected discrete or ray)");
}

void VsaConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid model config: " + what); };
  if (patch_size == 0 || image_size == 0 || image_size % patch_size != 0) {
    fail("image_size " + std::to_string(image_size) + " is not a multiple of patch_size " + std::to_string(patch_size));
  }
  if (channels == 0) fail("channels must be positive");
  if (enc_dim == 0 || enc_dim % 2 != 0) fail("enc_dim must be even and positive");
  if (enc_heads == 0 || enc_dim % enc_heads != 0) fail("enc_dim must be divisible by enc_heads");
  if (dec_dim == 0 || dec_heads == 0 || dec_dim % dec_heads != 0) fail("dec_dim must be divisible by dec_heads");
  if (enc_depth == 0) fail("enc_depth must be at least 1");
  if (dec_cross == 0) fail("dec_cross must be at least 1: without cross-attention the decoder never sees the source");
  if (dec_cross > dec_depth) {
    fail("dec_cross (" + std::to_string(dec_cross) + ") exceeds dec_depth (" + std::to_string(dec_depth) + ")");
  }
  if (n_views == 0) fail("n_views must be positive");
  if (num_source_views == 0) fail("num_source_views must be positive");
  if (!(mask_ratio >= 0.0 && mask_ratio < 1.0)) fail("mask_ratio must lie in [0, 1)");
}

template <typename T>
VsaWeights<T> VsaWeights<T>::init(const VsaConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(derive_seed(seed, 0x5745494748545331ULL));
  VsaWeights w;
  w.patch_embed = Linear<T>::init(config.patch_dim(), config.enc_dim, rng);
  w.pos_embed = sincos_pos_embed<T>(config.num_patches(), config.enc_dim);
  for (std::size_t i = 0; i < config.enc_depth; ++i) w.encoder.push_back(BlockWeights<T>::init(config.enc_dim, rng));
  w.encoder_norm = Norm<T>::init(config.enc_dim);
  w.enc_to_dec = Linear<T>::init(config.enc_dim, config.dec_dim, rng);
  for (std::size_t i = 0; i < config.dec_cross; ++i) {
    w.cross_blocks.push_back(BlockWeights<T>::init(config.dec_dim, rng, /*cross=*/true));
  }
  for (std::size_t i = config.dec_cross; i < config.dec_depth; ++i) {
    w.self_blocks.push_back(BlockWeights<T>::init(config.dec_dim, rng));
  }
  w.decoder_norm = Norm<T>::init(config.dec_dim);
  if (config.pose_mode == PoseMode::discrete) {
    std::vector<T> table(config.n_views * config.num_patches() * config.dec_dim);
    for (auto& x : table) x = static_cast<T>(truncated_normal(rng, kInitStd));
    w.pose_table = Tensor<T>(Shape{config.n_views, config.num_patches(), config.dec_dim}, std::move(table));
    w.pose_table.set_requires_grad();
  } else {
    w.ray_lift = Linear<T>::init(6, config.dec_dim, rng);
  }
  w.pixel_head = Linear<T>::init(config.dec_dim, config.patch_dim(), rng);
  return w;
}

template <typename T>
void VsaWeights<T>::visit(const ParamVisitor<T>& fn) {
  patch_embed.visit("patch_embed", fn);
  for (std::size_t i = 0; i < encoder.size(); ++i) encoder[i].visit("encoder." + std::to_string(i), fn);
  encoder_norm.visit("encoder_norm", fn);
  enc_to_dec.visit("enc_to_dec", fn);
  for (std::size_t i = 0; i < cross_blocks.size(); ++i) cross_blocks[i].visit("cross." + std::to_string(i), fn);
  for (std::size_t i = 0; i < self_blocks.size(); ++i) self_blocks[i].visit("self." + std::to_string(i), fn);
  decoder_norm.visit("decoder_norm", fn);
  if (pose_table.defined()) fn("pose_table", pose_table);
  if (ray_lift.weight.defined()) ray_lift.visit("ray_lift", fn);
  pixel_head.visit("pixel_head", fn);
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> VsaWeights<T>::named_parameters() {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  visit([&](const std::string& name, Tensor<T>& t) { out.emplace_back(name, t); });
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> VsaWeights<T>::encoder_parameters() {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  auto collect = [&](const std::string& name, Tensor<T>& t) { out.emplace_back(name, t); };
  patch_embed.visit("patch_embed", collect);
  for (std::size_t i = 0; i < encoder.size(); ++i) encoder[i].visit("encoder." + std::to_string(i), collect);
  encoder_norm.visit("encoder_norm", collect);
  return out;
}

template <typename T>
std::size_t VsaWeights<T>::parameter_count() {
  std::size_t n = 0;
  visit([&](const std::string&, Tensor<T>& t) { n += t.numel(); });
  return n;
}

template <typename T>
VsaWeights<T> VsaWeights<T>::clone() {
  VsaWeights copy = *this;
  copy.visit([](const std::string&, Tensor<T>& t) {
    const bool grad = t.requires_grad();
    t = t.detach();
    t.set_requires_grad(grad);
  });
  return copy;
}

std::size_t kept_count(std::size_t n, double ratio) {
  const auto m = static_cast<std::size_t>(std::llround((1.0 - ratio) * static_cast<double>(n)));
  return std::clamp<std::size_t>(m, 1, n);
}

std::vector<std::size_t> sample_keep_indices(std::size_t n, double ratio, Rng& rng) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw std::invalid_argument("mask ratio must lie in [0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (ratio == 0.0) return order;
  const auto keep = kept_count(n, ratio);
  // Partial Fisher-Yates: the first `keep` slots become a uniform subset.
  for (std::size_t i = 0; i < keep; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

template <typename T>
MaskResult<T> mask_patches(const Tensor<T>& tokens, double ratio, Rng& rng) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw std::invalid_argument("mask ratio must lie in [0, 1)");
  const bool batched = tokens.rank() == 3;
  if (!batched && tokens.rank() != 2) throw ShapeError("mask_patches: expected (N, d) or (b, N, d)");
  const auto b = batched ? tokens.dim(0) : 1;
  const auto n = tokens.dim(-2);
  MaskResult<T> out;
  for (std::size_t i = 0; i < b; ++i) out.kept_indices.push_back(sample_keep_indices(n, ratio, rng));
  if (ratio == 0.0) {
    out.kept = tokens;
    return out;
  }
  const auto as3 = batched ? tokens : reshape(tokens, Shape{1, n, tokens.dim(-1)});
  auto kept = gather_rows(as3, out.kept_indices);
  out.kept = batched ? kept : reshape(kept, Shape{kept.dim(1), kept.dim(2)});
  return out;
}

namespace {

template <typename T>
Tensor<T> as_image_batch(const Tensor<T>& images, const VsaConfig& config) {
  if (images.rank() != 3 && images.rank() != 4) {
    throw ShapeError("expected (c, H, W) or (b, c, H, W) images, got " + shape_str(images.shape()));
  }
  const auto batched =
      images.rank() == 4 ? images : reshape(images, Shape{1, images.dim(0), images.dim(1), images.dim(2)});
  if (batched.dim(1) != config.channels || batched.dim(2) != config.image_size || batched.dim(3) != config.image_size) {
    throw ShapeError("image shape " + shape_str(images.shape()) + " does not match the configured " +
                     std::to_string(config.channels) + "x" + std::to_string(config.image_size) + "x" +
                     std::to_string(config.image_size));
  }
  return batched;
}

template <typename T>
Tensor<T> embed_patches(const Tensor<T>& images, const VsaConfig& config, const VsaWeights<T>& weights) {
  const auto batch = as_image_batch(images, config);
  return add(weights.patch_embed(patchify(batch, config.patch_size)), weights.pos_embed);
}

template <typename T>
Tensor<T> run_encoder(Tensor<T> x, const VsaConfig& config, const VsaWeights<T>& weights) {
  const auto attn = config.encoder_attention();
  for (const auto& block : weights.encoder) x = self_attention_block(x, block, attn);
  return weights.encoder_norm(x);
}

}  // namespace

template <typename T>
EncodeResult<T> encode(const Tensor<T>& images, const VsaConfig& config, const VsaWeights<T>& weights,
                       double mask_ratio, Rng& rng) {
  auto tokens = embed_patches(images, config, weights);
  auto masked = mask_patches(tokens, mask_ratio, rng);
  return EncodeResult<T>{run_encoder(masked.kept, config, weights), std::move(masked.kept_indices)};
}

template <typename T>
Tensor<T> pooled_features(const Tensor<T>& images, const VsaConfig& config, const VsaWeights<T>& weights) {
  return mean_axis(run_encoder(embed_patches(images, config, weights), config, weights), 1);
}

template <typename T>
Tensor<T> pool_ray_field(const Tensor<T>& field, std::size_t patch) {
  if (field.rank() != 3 || field.dim(2) != 6) throw ShapeError("pool_ray_field: expected (H, W, 6)");
  const auto height = field.dim(0), width = field.dim(1);
  if (patch == 0 || height % patch != 0 || width % patch != 0) throw ShapeError("pool_ray_field: bad patch size");
  const auto gh = height / patch, gw = width / patch;
  const auto src = field.data();
  std::vector<T> values(gh * gw * 6, T(0));
  const double inv = 1.0 / static_cast<double>(patch * patch);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      T* dst = values.data() + ((r / patch) * gw + c / patch) * 6;
      for (std::size_t k = 0; k < 6; ++k) dst[k] += static_cast<T>(src[(r * width + c) * 6 + k] * inv);
    }
  }
  return Tensor<T>(Shape{gh * gw, 6}, std::move(values));
}

template <typename T>
Tensor<T> pose_embedding(std::span<const PoseInput> poses, const VsaConfig& config, const VsaWeights<T>& weights) {
  if (poses.empty()) throw std::invalid_argument("pose_embedding: no poses");
  if (config.pose_mode == PoseMode::discrete) {
    std::vector<std::size_t> rows;
    for (const auto& p : poses) {
      if (p.view_index >= config.n_views) {
        throw std::out_of_range("view index " + std::to_string(p.view_index) + " out of range for " +
                                std::to_string(config.n_views) + " views");
      }
      rows.push_back(p.view_index);
    }
    return index_select(weights.pose_table, 0, rows);
  }
  const auto n = config.num_patches();
  std::vector<T> pooled;
  pooled.reserve(poses.size() * n * 6);
  for (const auto& p : poses) {
    const auto field = camera_ray_field<T>(p.camera, config.image_size, config.image_size);
    const auto cells = pool_ray_field(field, config.patch_size);
    pooled.insert(pooled.end(), cells.data().begin(), cells.data().end());
  }
  return weights.ray_lift(Tensor<T>(Shape{poses.size(), n, 6}, std::move(pooled)));
}

template <typename T>
FusedSources<T> fuse_sources(const std::vector<Tensor<T>>& values, const std::vector<Tensor<T>>& keys) {
  if (values.empty() || values.size() != keys.size()) {
    throw std::invalid_argument("fuse_sources: need one key per value, got " + std::to_string(values.size()) +
                                " values and " + std::to_string(keys.size()) + " keys");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].rank() != keys[i].rank() || values[i].dim(-2) != keys[i].dim(-2)) {
      throw ShapeError("fuse_sources: view " + std::to_string(i) + " has value " + shape_str(values[i].shape()) +
                       " but key " + shape_str(keys[i].shape()));
    }
  }
  if (values.size() == 1) return FusedSources<T>{values.front(), keys.front()};
  const auto axis = values.front().rank() - 2;
  return FusedSources<T>{concat(values, axis), concat(keys, axis)};
}

template <typename T>
Tensor<T> decode(const Tensor<T>& value, const Tensor<T>& key, const Tensor<T>& query, const VsaConfig& config,
                 const VsaWeights<T>& weights) {
  if (config.dec_cross > config.dec_depth || config.dec_cross == 0) {
    throw std::invalid_argument("decode: dec_cross must lie in [1, dec_depth]");
  }
  if (value.rank() != 3 || value.dim(2) != config.enc_dim) {
    throw ShapeError("decode: value must be (b, L, enc_dim), got " + shape_str(value.shape()));
  }
  if (key.rank() != 3 || key.dim(1) != value.dim(1)) {
    throw ShapeError("decode: key " + shape_str(key.shape()) + " is not aligned with value " + shape_str(value.shape()));
  }
  if (query.rank() != 3 || query.dim(1) != config.num_patches()) {
    throw ShapeError("decode: query must cover " + std::to_string(config.num_patches()) + " patches, got " +
                     shape_str(query.shape()));
  }
  const auto attn = config.decoder_attention();
  auto x = weights.enc_to_dec(value);
  for (const auto& block : weights.cross_blocks) {
    const auto& block_key = x.dim(1) == key.dim(1) ? key : query;
    x = cross_attention_block(x, block_key, query, block, attn);
  }
  for (const auto& block : weights.self_blocks) x = self_attention_block(x, block, attn);
  return weights.pixel_head(weights.decoder_norm(x));
}

template <typename T>
Tensor<T> synthesize(const std::vector<Tensor<T>>& sources, const std::vector<std::vector<PoseInput>>& source_poses,
                     std::span<const PoseInput> target_poses, const VsaConfig& config, const VsaWeights<T>& weights,
                     double mask_ratio, Rng& rng) {
  if (sources.size() != config.num_source_views || source_poses.size() != sources.size()) {
    throw std::invalid_argument("synthesize: expected " + std::to_string(config.num_source_views) +
                                " source views, got " + std::to_string(sources.size()));
  }
  std::vector<Tensor<T>> values, keys;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    auto encoded = encode(sources[i], config, weights, mask_ratio, rng);
    if (source_poses[i].size() != encoded.tokens.dim(0)) {
      throw std::invalid_argument("synthesize: source pose count does not match the batch");
    }
    auto key = pose_key<T>(source_poses[i], config, weights);
    if (encoded.tokens.dim(1) != key.dim(1)) key = gather_rows(key, encoded.kept_indices);
    values.push_back(std::move(encoded.tokens));
    keys.push_back(std::move(key));
  }
  const auto fused = fuse_sources(values, keys);
  const auto query = pose_query<T>(target_poses, config, weights);
  if (query.dim(0) != fused.value.dim(0)) throw std::invalid_argument("synthesize: target pose count does not match the batch");
  const auto patches = decode(fused.value, fused.key, query, config, weights);
  return unpatchify(patches, config.image_size, config.image_size, config.patch_size);
}

#define VSA_INSTANTIATE_MODEL(T)                                                                                   \
  template struct VsaWeights<T>;                                                                                   \
  template MaskResult<T> mask_patches(const Tensor<T>&, double, Rng&);                                             \
  template EncodeResult<T> encode(const Tensor<T>&, const VsaConfig&, const VsaWeights<T>&, double, Rng&);         \
  template Tensor<T> pooled_features(const Tensor<T>&, const VsaConfig&, const VsaWeights<T>&);                    \
  template Tensor<T> pose_embedding(std::span<const PoseInput>, const VsaConfig&, const VsaWeights<T>&);           \
  template Tensor<T> pool_ray_field(const Tensor<T>&, std::size_t);                                                \
  template FusedSources<T> fuse_sources(const std::vector<Tensor<T>>&, const std::vector<Tensor<T>>&);             \
  template Tensor<T> decode(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const VsaConfig&,                \
                            const VsaWeights<T>&);                                                                 \
  template Tensor<T> synthesize(const std::vector<Tensor<T>>&, const std::vector<std::vector<PoseInput>>&,         \
                                std::span<const PoseInput>, const VsaConfig&, const VsaWeights<T>&, double, Rng&);

VSA_INSTANTIATE_MODEL(float)
VSA_INSTANTIATE_MODEL(double)

#undef VSA_INSTANTIATE_MODEL

}  // namespace vsa
