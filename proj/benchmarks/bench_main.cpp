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

#include <benchmark/benchmark.h>

#include "vsa/blocks.hpp"
#include "vsa/data.hpp"
#include "vsa/model.hpp"
#include "vsa/ops.hpp"

namespace {

using vsa::Tensor;

Tensor<float> filled(const vsa::Shape& shape, vsa::Rng& rng) {
  std::vector<float> v(vsa::shape_numel(shape));
  for (auto& x : v) x = static_cast<float>(vsa::uniform01(rng) - 0.5);
  return Tensor<float>(shape, std::move(v));
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  vsa::Rng rng(1);
  const auto a = filled({n, n}, rng);
  const auto b = filled({n, n}, rng);
  vsa::NoGradGuard<float> no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(vsa::matmul(a, b));
  state.counters["flops"] =
      benchmark::Counter(2.0 * n * n * n, benchmark::Counter::kIsIterationInvariantRate, benchmark::Counter::kIs1000);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(192)->Arg(384);

void BM_SelfBlockForward(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  vsa::Rng rng(2);
  const auto w = vsa::BlockWeights<float>::init(dim, rng);
  const auto x = filled({32, 16, dim}, rng);
  const vsa::AttentionConfig cfg{dim, dim / 64 == 0 ? 2 : dim / 64};
  vsa::NoGradGuard<float> no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(vsa::self_attention_block(x, w, cfg));
}
BENCHMARK(BM_SelfBlockForward)->Arg(128)->Arg(384);

void BM_SelfBlockBackward(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  vsa::Rng rng(3);
  auto w = vsa::BlockWeights<float>::init(dim, rng);
  const auto x = filled({32, 16, dim}, rng);
  const vsa::AttentionConfig cfg{dim, dim / 64 == 0 ? 2 : dim / 64};
  w.visit("", [](const std::string&, Tensor<float>& p) { p.set_requires_grad(); });
  for (auto _ : state) {
    vsa::Tape<float> tape;
    tape.backward(vsa::sum(vsa::self_attention_block(x, w, cfg)));
  }
}
BENCHMARK(BM_SelfBlockBackward)->Arg(128)->Arg(384);

void BM_Render(benchmark::State& state) {
  const auto object = vsa::generate_object(3, 7);
  const auto rig = vsa::CameraRig::circular(12, 32, 32);
  std::size_t v = 0;
  for (auto _ : state) benchmark::DoNotOptimize(vsa::render_view(object, rig.poses[v++ % 12], 32, 32));
}
BENCHMARK(BM_Render);

}  // namespace

BENCHMARK_MAIN();
