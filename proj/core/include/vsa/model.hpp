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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vsa/blocks.hpp"
#include "vsa/camera.hpp"
#include "vsa/rng.hpp"
#include "vsa/tensor.hpp"

namespace vsa {

/// How camera poses become decoder key/query tokens.
enum class PoseMode : std::uint32_t {
  discrete = 0,  // learnable (n, patches, dec_dim) table indexed by rig view
  ray = 1,       // per-pixel ray field concat(o, d), pooled per patch and lifted
};

std::string_view to_string(PoseMode mode);
PoseMode parse_pose_mode(std::string_view text);

/// Architecture of a view-synthesis autoencoder. The decoder fields are the
/// ablation axes: depth, width, number of cross-attention blocks, number of
/// source views and the encoder masking ratio.
struct VsaConfig {
  std::size_t image_size = 32;
  std::size_t patch_size = 8;
  std::size_t channels = 3;
  std::size_t enc_dim = 192;
  std::size_t enc_depth = 4;
  std::size_t enc_heads = 3;
  std::size_t dec_dim = 384;
  std::size_t dec_depth = 4;
  /// Leading decoder blocks that cross-attend to the source; the remaining
  /// dec_depth - dec_cross blocks are self-attention.
  std::size_t dec_cross = 2;
  std::size_t dec_heads = 8;
  std::size_t n_views = 12;
  std::size_t num_source_views = 1;
  double mask_ratio = 0.0;
  PoseMode pose_mode = PoseMode::discrete;

  std::size_t grid() const { return image_size / patch_size; }
  std::size_t num_patches() const { return grid() * grid(); }
  std::size_t patch_dim() const { return channels * patch_size * patch_size; }
  AttentionConfig encoder_attention() const { return {enc_dim, enc_heads}; }
  AttentionConfig decoder_attention() const { return {dec_dim, dec_heads}; }

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
  bool operator==(const VsaConfig&) const = default;
};

/// A camera viewpoint as the model consumes it: the rig index for the
/// discrete table, the full camera for ray encoding.
struct PoseInput {
  std::size_t view_index = 0;
  CameraPose camera;
};

template <typename T>
struct VsaWeights {
  Linear<T> patch_embed;
  Tensor<T> pos_embed;  // fixed sin/cos, neither trained nor serialized
  std::vector<BlockWeights<T>> encoder;
  Norm<T> encoder_norm;
  Linear<T> enc_to_dec;
  std::vector<BlockWeights<T>> cross_blocks;
  std::vector<BlockWeights<T>> self_blocks;
  Norm<T> decoder_norm;
  Tensor<T> pose_table;  // discrete mode
  Linear<T> ray_lift;    // ray mode
  Linear<T> pixel_head;

  static VsaWeights init(const VsaConfig& config, std::uint64_t seed);

  /// Visits every trainable tensor in a fixed order with a stable name.
  void visit(const ParamVisitor<T>& fn);
  std::vector<std::pair<std::string, Tensor<T>>> named_parameters();
  /// Parameters feeding the encoder output (patch embedding, blocks, norm).
  std::vector<std::pair<std::string, Tensor<T>>> encoder_parameters();
  std::size_t parameter_count();
  /// Deep copy with independent storage.
  VsaWeights clone();
};

template <typename T>
struct MaskResult {
  Tensor<T> kept;                                      // (b, M, d) or (M, d)
  std::vector<std::vector<std::size_t>> kept_indices;  // ascending, per batch entry
};

template <typename T>
struct EncodeResult {
  Tensor<T> tokens;  // (b, M, enc_dim)
  std::vector<std::vector<std::size_t>> kept_indices;
};

/// round((1 - ratio) * n), at least one.
std::size_t kept_count(std::size_t n, double ratio);
/// Uniform sample without replacement, returned in ascending order.
std::vector<std::size_t> sample_keep_indices(std::size_t n, double ratio, Rng& rng);

/// Random MAE-style masking of an (N, d) or (b, N, d) token sequence. Kept
/// tokens stay in their original order; nothing is inserted in place of the
/// dropped ones. Throws std::invalid_argument unless 0 <= ratio < 1.
template <typename T>
MaskResult<T> mask_patches(const Tensor<T>& tokens, double ratio, Rng& rng);

/// patchify -> linear embed -> + position embedding -> mask -> encoder blocks
/// -> final norm. Accepts (c, H, W) or (b, c, H, W).
template <typename T>
EncodeResult<T> encode(const Tensor<T>& images, const VsaConfig& config, const VsaWeights<T>& weights,
                       double mask_ratio, Rng& rng);

/// Unmasked encoder tokens averaged over patches: (b, enc_dim).
template <typename T>
Tensor<T> pooled_features(const Tensor<T>& images, const VsaConfig& config, const VsaWeights<T>& weights);

/// Pose token sequence (b, patches, dec_dim). Keys and queries share this
/// embedding; they differ only in which pose is passed.
template <typename T>
Tensor<T> pose_embedding(std::span<const PoseInput> poses, const VsaConfig& config, const VsaWeights<T>& weights);

template <typename T>
Tensor<T> pose_key(std::span<const PoseInput> poses, const VsaConfig& config, const VsaWeights<T>& weights) {
  return pose_embedding(poses, config, weights);
}
template <typename T>
Tensor<T> pose_query(std::span<const PoseInput> poses, const VsaConfig& config, const VsaWeights<T>& weights) {
  return pose_embedding(poses, config, weights);
}

/// Averages an (H, W, 6) ray field over each patch: (patches, 6).
template <typename T>
Tensor<T> pool_ray_field(const Tensor<T>& field, std::size_t patch);

template <typename T>
struct FusedSources {
  Tensor<T> value;
  Tensor<T> key;
};

/// Concatenates per-view values and keys along the sequence axis in view
/// order. Each view's value and key must have the same length.
template <typename T>
FusedSources<T> fuse_sources(const std::vector<Tensor<T>>& values, const std::vector<Tensor<T>>& keys);

/// Decoder. `value` holds encoder tokens (b, Lk, enc_dim); `key` the source
/// pose tokens (b, Lk, dec_dim); `query` the target pose tokens
/// (b, patches, dec_dim). Returns per-patch pixels (b, patches, c*p*p).
///
/// All cross-attention blocks share `key` and `query`; the value of block
/// j > 0 is the output of block j - 1. When that output's length (the query
/// length) differs from the key length (masked or multi-view sources), the
/// chained block keys it with the query tokens it is aligned to.
template <typename T>
Tensor<T> decode(const Tensor<T>& value, const Tensor<T>& key, const Tensor<T>& query, const VsaConfig& config,
                 const VsaWeights<T>& weights);

/// Full view synthesis. `sources[i]` is a (b, c, H, W) batch of images for
/// source slot i with poses `source_poses[i]` (b entries each). Every source
/// goes through the same encoder. Returns (b, c, H, W).
template <typename T>
Tensor<T> synthesize(const std::vector<Tensor<T>>& sources, const std::vector<std::vector<PoseInput>>& source_poses,
                     std::span<const PoseInput> target_poses, const VsaConfig& config, const VsaWeights<T>& weights,
                     double mask_ratio, Rng& rng);

/// Pixel MSE over the whole target image.
template <typename T>
Tensor<T> vsa_loss(const Tensor<T>& synthesized, const Tensor<T>& target) {
  return mse(synthesized, target);
}

}  // namespace vsa
