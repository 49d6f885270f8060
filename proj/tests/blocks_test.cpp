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

#include <cmath>
#include <vector>

#include "test_util.hpp"
#include "vsa/blocks.hpp"
#include "vsa/gradcheck.hpp"
#include "vsa/ops.hpp"

namespace vsa {
namespace {

using D = Tensor<double>;
using test::random_tensor;
using test::values_of;

void zero_all(BlockWeights<double>& w) {
  w.visit("b", [](const std::string&, D& t) {
    for (auto& x : t.mutable_data()) x = 0.0;
  });
}

void randomize(BlockWeights<double>& w, Rng& rng, double amplitude) {
  w.visit("b", [&](const std::string&, D& t) {
    for (auto& x : t.mutable_data()) x = amplitude * (2.0 * uniform01(rng) - 1.0);
  });
}

TEST(AttentionConfigTest, HeadsMustDivideWidth) {
  EXPECT_NO_THROW((AttentionConfig{64, 8}.validate()));
  EXPECT_EQ((AttentionConfig{64, 8}.head_dim()), 8u);
  EXPECT_THROW((AttentionConfig{64, 5}.validate()), std::invalid_argument);
  EXPECT_THROW((AttentionConfig{0, 1}.validate()), std::invalid_argument);
}

TEST(AttentionTest, OutputLengthFollowsQuery) {
  Rng rng(1);
  const AttentionConfig cfg{16, 4};
  const auto out = attention(random_tensor({1, 49, 16}, rng), random_tensor({1, 98, 16}, rng),
                             random_tensor({1, 98, 16}, rng), cfg);
  EXPECT_EQ(out.shape(), (Shape{1, 49, 16}));
}

TEST(AttentionTest, SingleKeyBroadcastsItsValue) {
  Rng rng(2);
  const AttentionConfig cfg{8, 2};
  const auto v = random_tensor({2, 1, 8}, rng);
  const auto out = attention(random_tensor({2, 5, 8}, rng), random_tensor({2, 1, 8}, rng), v, cfg);
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t d = 0; d < 8; ++d) EXPECT_NEAR(out.at((b * 5 + i) * 8 + d), v.at(b * 8 + d), 1e-15);
    }
  }
}

TEST(AttentionTest, IdenticalKeysGiveUniformWeights) {
  Rng rng(3);
  const AttentionConfig cfg{8, 2};
  const auto row = random_tensor({1, 1, 8}, rng);
  const auto k = concat<double>({row, row, row, row}, 1);
  const auto w = attention_weights(random_tensor({1, 3, 8}, rng), k, cfg);
  ASSERT_EQ(w.shape(), (Shape{1, 2, 3, 4}));
  for (double p : w.data()) EXPECT_NEAR(p, 0.25, 1e-15);
}

TEST(AttentionTest, WeightsAreDistributions) {
  Rng rng(4);
  const AttentionConfig cfg{12, 3};
  const auto w = attention_weights(random_tensor({2, 5, 12}, rng, -4.0, 4.0), random_tensor({2, 7, 12}, rng, -4.0, 4.0), cfg);
  for (std::size_t row = 0; row < 2 * 3 * 5; ++row) {
    double total = 0.0;
    for (std::size_t j = 0; j < 7; ++j) {
      EXPECT_GE(w.at(row * 7 + j), 0.0);
      total += w.at(row * 7 + j);
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(AttentionTest, SelfAttentionIsAttentionOnOneStream) {
  Rng rng(5);
  const AttentionConfig cfg{8, 2};
  const auto x = random_tensor({1, 6, 8}, rng);
  EXPECT_EQ(attention(x, x, x, cfg).shape(), x.shape());
}

TEST(AttentionTest, MismatchedStreamsThrow) {
  Rng rng(6);
  const AttentionConfig cfg{8, 2};
  EXPECT_THROW(attention(random_tensor({1, 3, 8}, rng), random_tensor({1, 4, 6}, rng), random_tensor({1, 4, 6}, rng), cfg),
               ShapeError);
  EXPECT_THROW(attention(random_tensor({1, 3, 8}, rng), random_tensor({1, 4, 8}, rng), random_tensor({1, 5, 8}, rng), cfg),
               ShapeError);
}

TEST(SelfAttentionBlockTest, PreservesShape) {
  Rng rng(7);
  const auto w = BlockWeights<double>::init(64, rng);
  const auto x = random_tensor({2, 16, 64}, rng);
  EXPECT_EQ(self_attention_block(x, w, {64, 4}).shape(), x.shape());
}

TEST(SelfAttentionBlockTest, ZeroWeightsAreIdentity) {
  Rng rng(8);
  auto w = BlockWeights<double>::init(16, rng);
  zero_all(w);
  const auto x = random_tensor({2, 5, 16}, rng);
  EXPECT_EQ(values_of(self_attention_block(x, w, {16, 2})), values_of(x));
}

TEST(SelfAttentionBlockTest, FreshBlockIsIdentity) {
  Rng rng(9);
  const auto w = BlockWeights<double>::init(16, rng);
  const auto x = random_tensor({1, 4, 16}, rng);
  EXPECT_EQ(values_of(self_attention_block(x, w, {16, 2})), values_of(x));
}

TEST(SelfAttentionBlockTest, GradientMatchesFiniteDifferences) {
  Rng rng(10);
  auto w = BlockWeights<double>::init(8, rng);
  randomize(w, rng, 0.4);
  std::vector<D> leaves{random_tensor({2, 3, 8}, rng)};
  w.visit("b", [&](const std::string&, D& t) { leaves.push_back(t); });
  const auto proj = random_tensor({2, 3, 8}, rng, -0.01, 0.01);
  const auto r = finite_diff_check([&] { return sum(mul(self_attention_block(leaves[0], w, {8, 2}), proj)); }, leaves);
  EXPECT_LT(r.max_rel_error, 1e-4);
}

TEST(CrossAttentionBlockTest, OutputLengthIsQueryLength) {
  Rng rng(11);
  const auto w = BlockWeights<double>::init(32, rng, true);
  const AttentionConfig cfg{32, 4};
  const auto single = cross_attention_block(random_tensor({1, 16, 32}, rng), random_tensor({1, 16, 32}, rng),
                                            random_tensor({1, 16, 32}, rng), w, cfg);
  EXPECT_EQ(single.shape(), (Shape{1, 16, 32}));
  const auto fused = cross_attention_block(random_tensor({1, 32, 32}, rng), random_tensor({1, 32, 32}, rng),
                                           random_tensor({1, 16, 32}, rng), w, cfg);
  EXPECT_EQ(fused.shape(), (Shape{1, 16, 32}));
}

TEST(CrossAttentionBlockTest, QueryDeterminesShapeOverGrid) {
  Rng rng(12);
  auto w = BlockWeights<double>::init(8, rng, true);
  randomize(w, rng, 0.3);
  const AttentionConfig cfg{8, 2};
  for (std::size_t lq : {1u, 4u, 16u, 49u}) {
    for (std::size_t lk : {1u, 16u, 32u, 64u}) {
      const auto query = random_tensor({2, lq, 8}, rng);
      const auto key = random_tensor({2, lk, 8}, rng);
      const auto value = random_tensor({2, lk, 8}, rng);
      // Two chained blocks: the second block's value is the first's output,
      // keyed by the query tokens it is aligned to.
      auto out = cross_attention_block(value, key, query, w, cfg);
      out = cross_attention_block(out, query, query, w, cfg);
      EXPECT_EQ(out.shape(), (Shape{2, lq, 8})) << lq << " x " << lk;
    }
  }
}

TEST(CrossAttentionBlockTest, KeyValueLengthMismatchThrows) {
  Rng rng(13);
  const auto w = BlockWeights<double>::init(8, rng, true);
  EXPECT_THROW(cross_attention_block(random_tensor({1, 4, 8}, rng), random_tensor({1, 5, 8}, rng),
                                     random_tensor({1, 3, 8}, rng), w, {8, 2}),
               ShapeError);
  const auto plain = BlockWeights<double>::init(8, rng);
  EXPECT_THROW(cross_attention_block(random_tensor({1, 4, 8}, rng), random_tensor({1, 4, 8}, rng),
                                     random_tensor({1, 3, 8}, rng), plain, {8, 2}),
               std::invalid_argument);
}

TEST(CrossAttentionBlockTest, ZeroWeightsPassQueryThrough) {
  Rng rng(14);
  auto w = BlockWeights<double>::init(8, rng, true);
  zero_all(w);
  const auto query = random_tensor({1, 3, 8}, rng);
  const auto out =
      cross_attention_block(random_tensor({1, 6, 8}, rng), random_tensor({1, 6, 8}, rng), query, w, {8, 2});
  EXPECT_EQ(values_of(out), values_of(query));
}

TEST(CrossAttentionBlockTest, GradientMatchesFiniteDifferences) {
  Rng rng(15);
  auto w = BlockWeights<double>::init(8, rng, true);
  randomize(w, rng, 0.4);
  std::vector<D> leaves{random_tensor({2, 4, 8}, rng), random_tensor({2, 4, 8}, rng), random_tensor({2, 3, 8}, rng)};
  w.visit("b", [&](const std::string&, D& t) { leaves.push_back(t); });
  const auto proj = random_tensor({2, 3, 8}, rng, -0.01, 0.01);
  const auto r = finite_diff_check(
      [&] { return sum(mul(cross_attention_block(leaves[0], leaves[1], leaves[2], w, {8, 2}), proj)); }, leaves);
  EXPECT_LT(r.max_rel_error, 1e-4);
}

TEST(BlockWeightsTest, ProjectionShapesAndMlpRatio) {
  Rng rng(16);
  auto w = BlockWeights<double>::init(24, rng, true);
  EXPECT_EQ(w.q.weight.shape(), (Shape{24, 24}));
  EXPECT_EQ(w.k.weight.shape(), (Shape{24, 24}));
  EXPECT_EQ(w.v.weight.shape(), (Shape{24, 24}));
  EXPECT_EQ(w.proj.weight.shape(), (Shape{24, 24}));
  EXPECT_EQ(w.fc1.weight.shape(), (Shape{24, 24 * kMlpRatio}));
  EXPECT_EQ(w.fc2.weight.shape(), (Shape{24 * kMlpRatio, 24}));
  EXPECT_TRUE(w.is_cross());
  for (double b : w.q.bias.data()) EXPECT_EQ(b, 0.0);
  for (double x : w.q.weight.data()) EXPECT_LE(std::abs(x), 2.0 * kInitStd);
}

TEST(PatchifyTest, ExtentArithmetic) {
  Rng rng(17);
  EXPECT_EQ(patchify(random_tensor({3, 32, 32}, rng), 8).shape(), (Shape{16, 192}));
  EXPECT_EQ(patchify(random_tensor({3, 8, 8}, rng), 8).shape(), (Shape{1, 192}));
  EXPECT_EQ(patchify(random_tensor({2, 3, 16, 16}, rng), 4).shape(), (Shape{2, 16, 48}));
}

TEST(PatchifyTest, LayoutIsGridThenChannelRowColumn) {
  // image[c][y][x] = 100c + 10y + x on a 4x4 grid with 2x2 patches.
  D image({2, 4, 4});
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t y = 0; y < 4; ++y) {
      for (std::size_t x = 0; x < 4; ++x) image.mutable_data()[(c * 4 + y) * 4 + x] = 100.0 * c + 10.0 * y + x;
    }
  }
  const auto p = patchify(image, 2);
  ASSERT_EQ(p.shape(), (Shape{4, 8}));
  // Patch 1 is the top-right cell: rows 0-1, columns 2-3.
  const std::vector<double> expected{2, 3, 12, 13, 102, 103, 112, 113};
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(p.at(8 + i), expected[i]);
}

TEST(PatchifyTest, RoundTripIsExact) {
  Rng rng(18);
  for (std::size_t p : {1u, 2u, 4u, 8u}) {
    const auto image = random_tensor({3, 8, 8}, rng);
    EXPECT_EQ(values_of(unpatchify(patchify(image, p), 8, 8, p)), values_of(image));
  }
  const auto batch = random_tensor({2, 3, 16, 16}, rng);
  EXPECT_EQ(values_of(unpatchify(patchify(batch, 8), 16, 16, 8)), values_of(batch));
  const auto single = random_tensor({1, 48}, rng);
  EXPECT_EQ(unpatchify(single, 4, 4, 4).shape(), (Shape{3, 4, 4}));
}

TEST(PatchifyTest, BadExtentsThrow) {
  Rng rng(19);
  EXPECT_THROW(patchify(random_tensor({3, 10, 10}, rng), 4), ShapeError);
  EXPECT_THROW(unpatchify(random_tensor({3, 48}, rng), 8, 8, 4), ShapeError);
}

TEST(SinCosTest, ShapeRangeAndDeterminism) {
  const auto e = sincos_pos_embed<double>(16, 64);
  EXPECT_EQ(e.shape(), (Shape{16, 64}));
  for (double v : e.data()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(values_of(e), values_of(sincos_pos_embed<double>(16, 64)));
  // Distinct grid cells get distinct embeddings.
  EXPECT_NE(values_of(slice(e, 0, 0, 1)), values_of(slice(e, 0, 5, 6)));
  EXPECT_THROW(sincos_pos_embed<double>(16, 63), std::invalid_argument);
  EXPECT_THROW(sincos_pos_embed<double>(15, 64), std::invalid_argument);
}

}  // namespace
}  // namespace vsa
