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

#include "vsa/diagnostics.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

#include "vsa/blocks.hpp"
#include "vsa/camera.hpp"
#include "vsa/data.hpp"
#include "vsa/gradcheck.hpp"
#include "vsa/model.hpp"
#include "vsa/ops.hpp"
#include "vsa/rng.hpp"

namespace vsa {

namespace {

using D = Tensor<double>;

D random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  const auto n = shape_numel(shape);
  std::vector<double> v(n);
  for (auto& x : v) x = lo + (hi - lo) * uniform01(rng);
  return D(std::move(shape), std::move(v));
}

class Suite {
 public:
  Suite(double tolerance, std::uint64_t seed) : tolerance_(tolerance), seed_(seed) {}

  // `build` creates the leaves and returns the scalar function over them.
  void check(const std::string& name,
             const std::function<std::function<D()>(Rng&, std::vector<D>&)>& build) {
    Rng rng(derive_seed(seed_, items_.size()));
    std::vector<D> leaves;
    const auto f = build(rng, leaves);
    const auto r = finite_diff_check(f, leaves);
    items_.push_back(CheckItem{name, r.max_rel_error, tolerance_, r.entries_checked});
  }

  std::vector<CheckItem> take() { return std::move(items_); }

 private:
  double tolerance_;
  std::uint64_t seed_;
  std::vector<CheckItem> items_;
};

void op_suite(Suite& s) {
  auto unary = [&](const std::string& name, Shape shape, std::function<D(const D&)> op, double lo = -1.0,
                   double hi = 1.0) {
    s.check(name, [=](Rng& rng, std::vector<D>& leaves) {
      leaves = {random_tensor(shape, rng, lo, hi)};
      const auto w = random_tensor(op(leaves[0].detach()).shape(), rng);
      return [=] { return sum(mul(op(leaves[0]), w)); };
    });
  };
  auto binary = [&](const std::string& name, Shape sa, Shape sb, std::function<D(const D&, const D&)> op) {
    s.check(name, [=](Rng& rng, std::vector<D>& leaves) {
      leaves = {random_tensor(sa, rng), random_tensor(sb, rng)};
      const auto w = random_tensor(op(leaves[0].detach(), leaves[1].detach()).shape(), rng);
      return [=] { return sum(mul(op(leaves[0], leaves[1]), w)); };
    });
  };

  binary("add", {3, 4}, {3, 4}, [](const D& a, const D& b) { return add(a, b); });
  binary("add_broadcast", {2, 3, 4}, {4}, [](const D& a, const D& b) { return add(a, b); });
  binary("sub", {2, 5}, {2, 5}, [](const D& a, const D& b) { return sub(a, b); });
  binary("mul", {3, 4}, {3, 4}, [](const D& a, const D& b) { return mul(a, b); });
  binary("mul_broadcast", {2, 3, 4}, {3, 4}, [](const D& a, const D& b) { return mul(a, b); });
  unary("scale", {3, 4}, [](const D& x) { return scale(x, 2.5); });
  binary("matmul", {3, 4}, {4, 2}, [](const D& a, const D& b) { return matmul(a, b); });
  binary("matmul_batched", {2, 3, 4}, {2, 4, 5}, [](const D& a, const D& b) { return matmul(a, b); });
  binary("matmul_shared_rhs", {2, 3, 4}, {4, 5}, [](const D& a, const D& b) { return matmul(a, b); });
  binary("matmul_broadcast_batch", {2, 1, 3, 4}, {3, 4, 2}, [](const D& a, const D& b) { return matmul(a, b); });
  unary("reshape", {2, 6}, [](const D& x) { return reshape(x, Shape{3, 4}); });
  unary("permute", {2, 3, 4}, [](const D& x) { return permute(x, {2, 0, 1}); });
  unary("transpose", {2, 3, 4}, [](const D& x) { return transpose(x, 1, 2); });
  unary("softmax", {3, 5}, [](const D& x) { return softmax_lastdim(x); }, -2.0, 2.0);
  s.check("layer_norm", [](Rng& rng, std::vector<D>& leaves) {
    leaves = {random_tensor({3, 6}, rng, -2.0, 2.0), random_tensor({6}, rng, 0.5, 1.5), random_tensor({6}, rng)};
    const auto w = random_tensor({3, 6}, rng);
    return [=] { return sum(mul(layer_norm(leaves[0], leaves[1], leaves[2]), w)); };
  });
  unary("gelu", {4, 5}, [](const D& x) { return gelu(x); }, -3.0, 3.0);
  binary("concat", {2, 3}, {2, 2}, [](const D& a, const D& b) { return concat<double>({a, b}, 1); });
  unary("slice", {4, 3}, [](const D& x) { return slice(x, 0, 1, 3); });
  unary("index_select", {4, 3}, [](const D& x) {
    const std::vector<std::size_t> idx{2, 0, 2};
    return index_select<double>(x, 0, idx);
  });
  unary("gather_rows", {2, 4, 3}, [](const D& x) { return gather_rows(x, {{0, 3}, {1, 1}}); });
  unary("mean_axis", {2, 3, 4}, [](const D& x) { return mean_axis(x, 1); });
  unary("sum", {3, 4}, [](const D& x) { return sum(x); });
  unary("mean", {3, 4}, [](const D& x) { return mean(x); });
  s.check("mse", [](Rng& rng, std::vector<D>& leaves) {
    leaves = {random_tensor({3, 4}, rng)};
    const auto target = random_tensor({3, 4}, rng);
    return [=] { return mse(leaves[0], target); };
  });
  s.check("cross_entropy", [](Rng& rng, std::vector<D>& leaves) {
    leaves = {random_tensor({4, 5}, rng, -2.0, 2.0)};
    return [=] {
      const std::vector<int> labels{0, 3, 4, 1};
      return cross_entropy(leaves[0], labels);
    };
  });
}

constexpr double kBlockAmplitude = 0.4;
constexpr double kModelAmplitude = 0.3;
constexpr double kProjectionScale = 0.01;
constexpr double kTargetOffset = 0.01;

// Replaces every parameter by uniform noise so zero-initialized projections
// do not hide upstream gradients.
void randomize(const std::function<void(const ParamVisitor<double>&)>& visit, Rng& rng, double amplitude) {
  visit([&](const std::string&, D& t) {
    for (auto& x : t.mutable_data()) x = amplitude * (2.0 * uniform01(rng) - 1.0);
  });
}

// Small projection weights keep the checked scalar near zero, so roundoff in
// the central differences stays well below the gradients being checked.
D projection(const Shape& shape, Rng& rng) { return random_tensor(shape, rng, -kProjectionScale, kProjectionScale); }

void append_params(BlockWeights<double>& w, std::vector<D>& leaves) {
  w.visit("block", [&](const std::string&, D& t) { leaves.push_back(t); });
}

void block_suite(Suite& s) {
  const AttentionConfig cfg{8, 2};
  s.check("attention", [cfg](Rng& rng, std::vector<D>& leaves) {
    leaves = {random_tensor({2, 3, 8}, rng), random_tensor({2, 4, 8}, rng), random_tensor({2, 4, 8}, rng)};
    const auto w = random_tensor({2, 3, 8}, rng);
    return [=] { return sum(mul(attention(leaves[0], leaves[1], leaves[2], cfg), w)); };
  });
  s.check("self_attention_block", [cfg](Rng& rng, std::vector<D>& leaves) {
    auto block = BlockWeights<double>::init(8, rng);
    randomize([&](const ParamVisitor<double>& fn) { block.visit("b", fn); }, rng, kBlockAmplitude);
    leaves = {random_tensor({2, 3, 8}, rng)};
    append_params(block, leaves);
    const auto w = projection({2, 3, 8}, rng);
    return [=] { return sum(mul(self_attention_block(leaves[0], block, cfg), w)); };
  });
  s.check("cross_attention_block", [cfg](Rng& rng, std::vector<D>& leaves) {
    auto block = BlockWeights<double>::init(8, rng, true);
    randomize([&](const ParamVisitor<double>& fn) { block.visit("b", fn); }, rng, kBlockAmplitude);
    leaves = {random_tensor({2, 4, 8}, rng), random_tensor({2, 4, 8}, rng), random_tensor({2, 3, 8}, rng)};
    append_params(block, leaves);
    const auto w = projection({2, 3, 8}, rng);
    return [=] { return sum(mul(cross_attention_block(leaves[0], leaves[1], leaves[2], block, cfg), w)); };
  });
  s.check("patchify_unpatchify", [](Rng& rng, std::vector<D>& leaves) {
    leaves = {random_tensor({2, 3, 4, 4}, rng)};
    const auto w1 = random_tensor({2, 4, 12}, rng);
    const auto w2 = random_tensor({2, 3, 4, 4}, rng);
    return [=] {
      const auto p = patchify(leaves[0], 2);
      return add(sum(mul(p, w1)), sum(mul(unpatchify(p, 4, 4, 2), w2)));
    };
  });

  VsaConfig tiny;
  tiny.image_size = 8;
  tiny.patch_size = 4;
  tiny.enc_dim = 8;
  tiny.enc_depth = 1;
  tiny.enc_heads = 2;
  tiny.dec_dim = 8;
  tiny.dec_depth = 1;
  tiny.dec_cross = 1;
  tiny.dec_heads = 2;
  tiny.n_views = 4;
  for (auto mode : {PoseMode::discrete, PoseMode::ray}) {
    s.check(std::string("pose_embedding_") + std::string(to_string(mode)), [tiny, mode](Rng& rng, std::vector<D>& leaves) {
      auto config = tiny;
      config.pose_mode = mode;
      auto weights = VsaWeights<double>::init(config, rng());
      const auto rig = CameraRig::circular(config.n_views, config.image_size, config.image_size);
      std::vector<PoseInput> poses{{1, rig.poses[1]}, {3, rig.poses[3]}};
      if (mode == PoseMode::discrete) {
        leaves = {weights.pose_table};
      } else {
        leaves = {weights.ray_lift.weight, weights.ray_lift.bias};
      }
      const auto w = random_tensor({2, config.num_patches(), config.dec_dim}, rng);
      return [=] { return sum(mul(pose_embedding<double>(poses, config, weights), w)); };
    });
  }
  s.check("mask_patches", [](Rng& rng, std::vector<D>& leaves) {
    leaves = {random_tensor({2, 6, 4}, rng)};
    const auto w = random_tensor({2, 3, 4}, rng);
    const std::uint64_t mask_seed = rng();
    return [=] {
      Rng mask_rng(mask_seed);
      return sum(mul(mask_patches(leaves[0], 0.5, mask_rng).kept, w));
    };
  });
}

// The reference configuration is checked once; the remaining variants use a
// smaller model to keep the full suite fast.
VsaConfig model_config(bool reference) {
  VsaConfig config;
  config.image_size = reference ? 16 : 8;
  config.patch_size = reference ? 8 : 4;
  config.enc_dim = reference ? 32 : 8;
  config.enc_depth = 1;
  config.enc_heads = 2;
  config.dec_dim = reference ? 32 : 8;
  config.dec_depth = 2;
  config.dec_cross = 1;
  config.dec_heads = 2;
  config.n_views = 4;
  return config;
}

void model_suite(Suite& s) {
  struct Variant {
    std::string name;
    bool reference;
    PoseMode mode;
    std::size_t sources;
    double mask;
  };
  for (const auto& v : {Variant{"model_reference", true, PoseMode::discrete, 1, 0.0},
                        Variant{"model_masked", false, PoseMode::discrete, 1, 0.5},
                        Variant{"model_two_sources", false, PoseMode::discrete, 2, 0.0},
                        Variant{"model_ray", false, PoseMode::ray, 1, 0.0}}) {
    s.check(v.name, [v](Rng& rng, std::vector<D>& leaves) {
      auto config = model_config(v.reference);
      config.num_source_views = v.sources;
      config.mask_ratio = v.mask;
      config.pose_mode = v.mode;
      auto weights = VsaWeights<double>::init(config, rng());
      randomize([&](const ParamVisitor<double>& fn) { weights.visit(fn); }, rng, kModelAmplitude);
      for (auto& [name, t] : weights.named_parameters()) leaves.push_back(t);

      const std::size_t b = v.reference ? 1 : 2;
      const std::size_t side = config.image_size;
      const auto rig = CameraRig::circular(config.n_views, side, side);
      std::vector<D> sources;
      std::vector<std::vector<PoseInput>> source_poses;
      for (std::size_t i = 0; i < v.sources; ++i) {
        sources.push_back(random_tensor({b, 3, side, side}, rng, 0.0, 1.0));
        std::vector<PoseInput> poses;
        for (std::size_t j = 0; j < b; ++j) poses.push_back({i + j, rig.poses[i + j]});
        source_poses.push_back(std::move(poses));
      }
      std::vector<PoseInput> targets;
      for (std::size_t j = 0; j < b; ++j) targets.push_back({2 + j, rig.poses[2 + j]});
      const std::uint64_t mask_seed = rng();
      auto forward = [=] {
        Rng mask_rng(mask_seed);
        return synthesize(sources, source_poses, targets, config, weights, config.mask_ratio, mask_rng);
      };
      // Target = current prediction plus a small offset, so the loss and its
      // roundoff stay small next to the gradients.
      D target;
      {
        NoGradGuard<double> guard;
        target = add(forward(), random_tensor({b, 3, side, side}, rng, -kTargetOffset, kTargetOffset));
      }
      return [=] { return mse(forward(), target); };
    });
  }
}

class FaultScope {
 public:
  explicit FaultScope(const std::string& op) {
    if (!op.empty()) set_backward_fault(op, 1.5);
  }
  ~FaultScope() { set_backward_fault(""); }
  FaultScope(const FaultScope&) = delete;
  FaultScope& operator=(const FaultScope&) = delete;
};

}  // namespace

std::string_view to_string(CheckLevel level) {
  switch (level) {
    case CheckLevel::ops:
      return "ops";
    case CheckLevel::blocks:
      return "blocks";
    case CheckLevel::model:
      return "model";
  }
  return "unknown";
}

CheckLevel parse_check_level(std::string_view text) {
  if (text == "ops") return CheckLevel::ops;
  if (text == "blocks") return CheckLevel::blocks;
  if (text == "model") return CheckLevel::model;
  throw std::invalid_argument("unknown check level '" + std::string(text) + "' (expected ops, blocks or model)");
}

bool CheckReport::passed() const {
  return !items.empty() && std::all_of(items.begin(), items.end(), [](const CheckItem& i) { return i.passed(); });
}

std::vector<std::string> differentiable_op_names() {
  return {"add",    "sub",        "mul",  "scale",        "matmul",      "reshape",   "permute", "softmax",
          "layer_norm", "gelu",   "concat", "index_select", "gather_rows", "mean_axis", "sum",     "mse",
          "cross_entropy"};
}

CheckReport run_gradcheck(CheckLevel level, std::uint64_t seed, const std::string& inject_fault) {
  if (!inject_fault.empty()) {
    const auto names = differentiable_op_names();
    if (std::find(names.begin(), names.end(), inject_fault) == names.end()) {
      throw std::invalid_argument("cannot inject a fault into unknown op '" + inject_fault + "'");
    }
  }
  FaultScope fault(inject_fault);
  CheckReport report;
  report.level = level;
  switch (level) {
    case CheckLevel::ops: {
      Suite s(kOpsTolerance, seed);
      op_suite(s);
      report.items = s.take();
      break;
    }
    case CheckLevel::blocks: {
      Suite s(kBlocksTolerance, seed);
      block_suite(s);
      report.items = s.take();
      break;
    }
    case CheckLevel::model: {
      Suite s(kModelTolerance, seed);
      model_suite(s);
      report.items = s.take();
      break;
    }
  }
  return report;
}

}  // namespace vsa
