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
#include <limits>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "vsa/gradcheck.hpp"
#include "vsa/ops.hpp"
#include "vsa/tensor.hpp"

namespace vsa {
namespace {

using D = Tensor<double>;
using test::random_tensor;
using test::values_of;

D identity(std::size_t n) {
  D eye({n, n});
  for (std::size_t i = 0; i < n; ++i) eye.mutable_data()[i * n + i] = 1.0;
  return eye;
}

TEST(TensorTest, ValueCountMustMatchShape) {
  EXPECT_THROW(D({2, 3}, std::vector<double>(5)), ShapeError);
  EXPECT_THROW(D(Shape{}), ShapeError);
  EXPECT_THROW(D({2, 0}), ShapeError);
  const D t({2, 3}, std::vector<double>(6, 1.0));
  EXPECT_EQ(t.numel(), shape_numel(t.shape()));
}

TEST(TensorTest, CopiesShareStorageAndDetachDoesNot) {
  D a({2}, std::vector<double>{1.0, 2.0});
  D b = a;
  b.mutable_data()[0] = 5.0;
  EXPECT_EQ(a.at(0), 5.0);
  D c = a.detach();
  c.mutable_data()[1] = -1.0;
  EXPECT_EQ(a.at(1), 2.0);
  EXPECT_FALSE(c.same_storage(a));
}

TEST(MatmulTest, HandComputedProduct) {
  const D a({2, 2}, {1, 2, 3, 4});
  const D b({2, 2}, {5, 6, 7, 8});
  EXPECT_EQ(values_of(matmul(a, b)), (std::vector<double>{19, 22, 43, 50}));
}

TEST(MatmulTest, IdentityLeavesOperandUnchanged) {
  Rng rng(1);
  for (std::size_t n : {1u, 3u, 7u}) {
    const auto a = random_tensor({4, n}, rng);
    EXPECT_EQ(values_of(matmul(a, identity(n))), values_of(a));
    EXPECT_EQ(values_of(matmul(identity(4), a)), values_of(a));
  }
}

TEST(MatmulTest, GradientMatchesFiniteDifferences) {
  Rng rng(2);
  std::vector<D> leaves{random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)};
  const auto r = finite_diff_check([&] { return sum(matmul(leaves[0], leaves[1])); }, leaves);
  EXPECT_LT(r.max_rel_error, 1e-6);
  EXPECT_EQ(r.entries_checked, 20u);
}

TEST(MatmulTest, BackwardIsTransposedProducts) {
  Rng rng(3);
  auto a = random_tensor({3, 4}, rng).set_requires_grad();
  auto b = random_tensor({4, 2}, rng).set_requires_grad();
  {
    Tape<double> tape;
    tape.backward(sum(matmul(a, b)));
  }
  // d/dA sum(AB) = 1 B^T: row sums of B; d/dB = A^T 1: column sums of A.
  const auto ga = a.grad();
  const auto gb = b.grad();
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t p = 0; p < 4; ++p) EXPECT_DOUBLE_EQ(ga[i * 4 + p], b.at(p * 2) + b.at(p * 2 + 1));
  }
  for (std::size_t p = 0; p < 4; ++p) {
    const double col = a.at(p) + a.at(4 + p) + a.at(8 + p);
    EXPECT_NEAR(gb[p * 2], col, 1e-15);
    EXPECT_NEAR(gb[p * 2 + 1], col, 1e-15);
  }
}

TEST(MatmulTest, BroadcastsBatchAxes) {
  Rng rng(4);
  const auto a = random_tensor({2, 1, 3, 4}, rng);
  const auto b = random_tensor({5, 4, 2}, rng);
  EXPECT_EQ(matmul(a, b).shape(), (Shape{2, 5, 3, 2}));
  const auto x = random_tensor({6, 3, 4}, rng);
  const auto w = random_tensor({4, 2}, rng);
  const auto shared = matmul(x, w);
  EXPECT_EQ(shared.shape(), (Shape{6, 3, 2}));
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(values_of(slice(shared, 0, i, i + 1)), values_of(matmul(reshape(slice(x, 0, i, i + 1), {3, 4}), w)));
  }
}

TEST(MatmulTest, MismatchNamesTheExtents) {
  Rng rng(5);
  try {
    matmul(random_tensor({3, 4}, rng), random_tensor({5, 2}, rng));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("(3, 4)"), std::string::npos) << what;
    EXPECT_NE(what.find("(5, 2)"), std::string::npos) << what;
  }
  EXPECT_THROW(matmul(random_tensor({2, 3, 4}, rng), random_tensor({3, 4, 2}, rng)), ShapeError);
}

TEST(SoftmaxTest, EqualLogitsGiveUniform) {
  const auto s = softmax_lastdim(D({2}, {0.0, 0.0}));
  EXPECT_EQ(values_of(s), (std::vector<double>{0.5, 0.5}));
}

TEST(SoftmaxTest, LargeLogitsDoNotOverflow) {
  const auto s = softmax_lastdim(D({2}, {1000.0, 0.0}));
  EXPECT_NEAR(s.at(0), 1.0, 1e-12);
  EXPECT_NEAR(s.at(1), 0.0, 1e-12);
  const auto f = softmax_lastdim(Tensor<float>({3}, {1e30f, -1e30f, 0.0f}));
  for (float v : f.data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(SoftmaxTest, GradientMatchesFiniteDifferences) {
  Rng rng(6);
  std::vector<D> leaves{random_tensor({5}, rng, -2.0, 2.0)};
  const auto w = random_tensor({5}, rng);
  const auto r = finite_diff_check([&] { return sum(mul(softmax_lastdim(leaves[0]), w)); }, leaves);
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(SoftmaxTest, RowsAreDistributions) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_tensor({4, 9}, rng, -30.0, 30.0);
    const auto s = softmax_lastdim(x);
    for (std::size_t r = 0; r < 4; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < 9; ++c) {
        EXPECT_GE(s.at(r * 9 + c), 0.0);
        total += s.at(r * 9 + c);
      }
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
  }
}

TEST(LayerNormTest, ConstantSliceCollapsesToBeta) {
  const D gamma({3}, 1.0);
  const D beta({3}, 0.0);
  EXPECT_EQ(values_of(layer_norm(D({3}, {3.0, 3.0, 3.0}), gamma, beta)), (std::vector<double>{0.0, 0.0, 0.0}));
  const D shifted({3}, {0.5, -1.0, 2.0});
  EXPECT_EQ(values_of(layer_norm(D({3}, {3.0, 3.0, 3.0}), gamma, shifted)), values_of(shifted));
}

TEST(LayerNormTest, NormalizedInputIsNearlyUnchanged) {
  const auto y = layer_norm(D({2}, {1.0, -1.0}), D({2}, 1.0), D({2}, 0.0));
  EXPECT_NEAR(y.at(0), 1.0, 1e-6);
  EXPECT_NEAR(y.at(1), -1.0, 1e-6);
}

TEST(LayerNormTest, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  std::vector<D> leaves{random_tensor({3, 6}, rng, -2.0, 2.0), random_tensor({6}, rng, 0.5, 1.5),
                        random_tensor({6}, rng)};
  const auto w = random_tensor({3, 6}, rng);
  const auto r =
      finite_diff_check([&] { return sum(mul(layer_norm(leaves[0], leaves[1], leaves[2]), w)); }, leaves);
  EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(LayerNormTest, SlicesHaveZeroMeanUnitVariance) {
  Rng rng(9);
  const std::size_t d = 16;
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_tensor({5, d}, rng, -50.0, 80.0);
    const auto y = layer_norm(x, D({d}, 1.0), D({d}, 0.0));
    for (std::size_t r = 0; r < 5; ++r) {
      double mean = 0.0, var = 0.0;
      for (std::size_t c = 0; c < d; ++c) mean += y.at(r * d + c);
      mean /= d;
      for (std::size_t c = 0; c < d; ++c) var += (y.at(r * d + c) - mean) * (y.at(r * d + c) - mean);
      var /= d;
      EXPECT_LT(std::abs(mean), 1e-6);
      EXPECT_LT(std::abs(var - 1.0), 1e-4);
    }
  }
}

TEST(GeluTest, FixedPointsAndAsymptotes) {
  const auto y = gelu(D({3}, {0.0, 10.0, -10.0}));
  EXPECT_EQ(y.at(0), 0.0);
  EXPECT_NEAR(y.at(1), 10.0, 1e-6);
  EXPECT_NEAR(y.at(2), 0.0, 1e-6);
}

TEST(ConcatTest, ExtentsAddAlongAxis) {
  Rng rng(10);
  const auto a = random_tensor({4, 16, 64}, rng);
  const auto b = random_tensor({4, 16, 64}, rng);
  EXPECT_EQ(concat<double>({a, b}, 1).shape(), (Shape{4, 32, 64}));
  EXPECT_EQ(values_of(concat<double>({a}, 1)), values_of(a));
}

TEST(ConcatTest, SplitAfterConcatIsIdentity) {
  Rng rng(11);
  const auto a = random_tensor({3, 2, 5}, rng);
  const auto b = random_tensor({3, 4, 5}, rng);
  const auto c = concat<double>({a, b}, 1);
  EXPECT_EQ(values_of(slice(c, 1, 0, 2)), values_of(a));
  EXPECT_EQ(values_of(slice(c, 1, 2, 6)), values_of(b));
}

TEST(ConcatTest, BackwardOfSumIsAllOnes) {
  Rng rng(12);
  auto a = random_tensor({2, 3}, rng).set_requires_grad();
  auto b = random_tensor({2, 1}, rng).set_requires_grad();
  {
    Tape<double> tape;
    tape.backward(sum(concat<double>({a, b}, 1)));
  }
  EXPECT_EQ(a.grad(), std::vector<double>(6, 1.0));
  EXPECT_EQ(b.grad(), std::vector<double>(2, 1.0));
  std::vector<D> leaves{a, b};
  EXPECT_LT(finite_diff_check([&] { return sum(concat<double>({leaves[0], leaves[1]}, 1)); }, leaves).max_rel_error,
            1e-9);
}

TEST(ConcatTest, MismatchedExtentsThrow) {
  Rng rng(13);
  EXPECT_THROW(concat<double>({random_tensor({2, 3}, rng), random_tensor({3, 3}, rng)}, 1), ShapeError);
}

TEST(MseTest, Examples) {
  Rng rng(14);
  const auto x = random_tensor({3, 4}, rng);
  EXPECT_EQ(mse(x, x).item(), 0.0);
  EXPECT_EQ(mse(D({2}, {1.0, 1.0}), D({2}, {0.0, 0.0})).item(), 1.0);
  EXPECT_THROW(mse(x, random_tensor({4, 3}, rng)), ShapeError);
}

TEST(MseTest, GradientIsScaledResidual) {
  Rng rng(15);
  auto pred = random_tensor({3, 4}, rng).set_requires_grad();
  auto target = random_tensor({3, 4}, rng).set_requires_grad();
  {
    Tape<double> tape;
    tape.backward(mse(pred, target));
  }
  const auto g = pred.grad();
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(g[i], 2.0 * (pred.at(i) - target.at(i)) / 12.0, 1e-15);
  EXPECT_FALSE(target.has_grad());
  std::vector<D> leaves{pred};
  const auto t = target.detach();
  EXPECT_LT(finite_diff_check([&] { return mse(leaves[0], t); }, leaves).max_rel_error, 1e-6);
}

TEST(BackwardTest, SumGivesOnes) {
  auto w = D({3}, {0.3, -1.0, 2.0}).set_requires_grad();
  {
    Tape<double> tape;
    tape.backward(sum(w));
  }
  EXPECT_EQ(w.grad(), (std::vector<double>{1.0, 1.0, 1.0}));
}

TEST(BackwardTest, GradientHasLeafShape) {
  Rng rng(16);
  auto w = random_tensor({2, 3, 4}, rng).set_requires_grad();
  {
    Tape<double> tape;
    tape.backward(mean(gelu(w)));
  }
  EXPECT_EQ(w.grad().size(), w.numel());
}

TEST(BackwardTest, TwoLayerMlpMatchesFiniteDifferences) {
  Rng rng(17);
  const auto x = random_tensor({5, 4}, rng);
  const auto y = random_tensor({5, 3}, rng);
  std::vector<D> leaves{random_tensor({4, 8}, rng), random_tensor({8}, rng), random_tensor({8, 3}, rng),
                        random_tensor({3}, rng)};
  const auto r = finite_diff_check(
      [&] {
        const auto h = gelu(add(matmul(x, leaves[0]), leaves[1]));
        return mse(add(matmul(h, leaves[2]), leaves[3]), y);
      },
      leaves);
  EXPECT_LT(r.max_rel_error, 1e-4);
}

TEST(BackwardTest, RepeatedCallsAccumulate) {
  Rng rng(18);
  auto w = random_tensor({4, 3}, rng).set_requires_grad();
  const auto x = random_tensor({2, 4}, rng);
  Tape<double> tape;
  const auto loss = sum(gelu(matmul(x, w)));
  tape.backward(loss);
  const auto once = w.grad();
  tape.backward(loss);
  const auto twice = w.grad();
  // The second pass adds into the stored gradient, so only rounding separates it from 2x.
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(twice[i], 2.0 * once[i], 1e-14 * std::abs(once[i]));
}

TEST(BackwardTest, RejectsNonScalarOrForeignLoss) {
  Rng rng(19);
  auto w = random_tensor({3}, rng).set_requires_grad();
  Tape<double> tape;
  EXPECT_THROW(tape.backward(gelu(w)), ShapeError);
  D detached;
  {
    Tape<double> other;
    detached = sum(w);
  }
  EXPECT_THROW(tape.backward(detached), std::invalid_argument);
  EXPECT_THROW(tape.backward(D()), std::invalid_argument);
}

TEST(TapeTest, BackwardRunsInReverseRecordingOrder) {
  Tape<double> tape;
  std::vector<int> order;
  auto x = D::scalar(1.0).set_requires_grad();
  auto a = D::scalar(2.0);
  auto b = D::scalar(3.0);
  tape.record("first", {x.node_ptr()}, a.node_ptr(), [&] { order.push_back(1); });
  tape.record("second", {a.node_ptr()}, b.node_ptr(), [&] {
    order.push_back(2);
    a.node_ptr()->grad.assign(1, 1.0);
  });
  EXPECT_EQ(tape.size(), 2u);
  tape.backward(b);
  EXPECT_EQ(order, (std::vector<int>{2, 1}));
}

TEST(TapeTest, NoGradGuardSuspendsRecording) {
  auto w = D({2}, {1.0, 2.0}).set_requires_grad();
  Tape<double> tape;
  {
    NoGradGuard<double> guard;
    sum(w);
    EXPECT_EQ(tape.size(), 0u);
  }
  sum(w);
  EXPECT_EQ(tape.size(), 1u);
}

TEST(FiniteDiffTest, LinearLayerMse) {
  Rng rng(20);
  const auto x = random_tensor({6, 5}, rng);
  const auto y = random_tensor({6, 2}, rng);
  std::vector<D> leaves{random_tensor({5, 2}, rng), random_tensor({2}, rng)};
  const auto r = finite_diff_check([&] { return mse(add(matmul(x, leaves[0]), leaves[1]), y); }, leaves);
  EXPECT_LT(r.max_rel_error, 1e-6);
  EXPECT_EQ(r.entries_checked, 12u);
}

TEST(FiniteDiffTest, BrokenRuleIsCaught) {
  Rng rng(21);
  const auto x = random_tensor({6, 5}, rng);
  const auto y = random_tensor({6, 2}, rng);
  std::vector<D> leaves{random_tensor({5, 2}, rng), random_tensor({2}, rng)};
  set_backward_fault("matmul", 1.5);
  const auto r = finite_diff_check([&] { return mse(add(matmul(x, leaves[0]), leaves[1]), y); }, leaves);
  set_backward_fault("");
  EXPECT_GT(r.max_rel_error, 1e-1);
  EXPECT_EQ(r.worst_leaf, 0u);
}

TEST(FiniteDiffTest, ConstantFunctionHasZeroError) {
  Rng rng(22);
  std::vector<D> leaves{random_tensor({3}, rng)};
  const auto r = finite_diff_check([&] { return scale(sum(leaves[0]), 0.0); }, leaves);
  EXPECT_EQ(r.max_rel_error, 0.0);
}

TEST(FiniteDiffTest, RestoresLeafValues) {
  Rng rng(23);
  std::vector<D> leaves{random_tensor({4}, rng)};
  const auto before = values_of(leaves[0]);
  finite_diff_check([&] { return sum(gelu(leaves[0])); }, leaves);
  EXPECT_EQ(values_of(leaves[0]), before);
}

TEST(OpsTest, FiniteInputsGiveFiniteOutputs) {
  const Tensor<float> x({2, 4}, {1e30f, -1e30f, 3e38f, 0.0f, 1e-30f, 1e-30f, 1e-30f, 1e-30f});
  const Tensor<float> ones({4}, 1.0f);
  const Tensor<float> zeros({4}, 0.0f);
  for (float v : softmax_lastdim(x).data()) EXPECT_TRUE(std::isfinite(v));
  for (float v : layer_norm(Tensor<float>({4}, {5e3f, 5e3f, 5e3f, 5e3f}), ones, zeros).data()) {
    EXPECT_TRUE(std::isfinite(v));
  }
  for (float v : gelu(Tensor<float>({3}, {-80.0f, 0.0f, 80.0f})).data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(OpsTest, DeterministicBitForBit) {
  Rng rng(24);
  const auto a = random_tensor<float>({3, 33, 47}, rng);
  const auto b = random_tensor<float>({47, 29}, rng);
  const auto g = random_tensor<float>({29}, rng);
  auto run = [&] { return values_of(layer_norm(gelu(matmul(a, b)), g, g)); };
  EXPECT_EQ(run(), run());
  EXPECT_EQ(values_of(softmax_lastdim(a)), values_of(softmax_lastdim(a)));
}

}  // namespace
}  // namespace vsa
