// Copyright 2026 The dibell Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Micro benchmarks for the per-sample hot paths.

#include <random>

#include <benchmark/benchmark.h>

#include "dibell/network.hpp"
#include "dibell/npa.hpp"
#include "dibell/sampler.hpp"
#include "dibell/separation.hpp"

using namespace dibell;

namespace {

const SamplingContext& context(int m) {
  static const SamplingContext c22(Scenario(2, 2));
  static const SamplingContext c32(Scenario(3, 2));
  return m == 2 ? c22 : c32;
}

std::vector<Behavior> draws(const SamplingContext& ctx, std::size_t n) {
  std::vector<Behavior> out;
  std::mt19937_64 rng(1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = ctx.facets()[i % ctx.facets().size()];
    out.push_back(sample_behavior(f.facet.inequality, f.spanning, f.pr_box, rng));
  }
  return out;
}

void BM_BellLp(benchmark::State& state) {
  const auto& ctx = context(static_cast<int>(state.range(0)));
  const auto b = draws(ctx, 64);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(find_optimal_bell_inequality(b[i++ % b.size()], ctx.polytope()));
  }
}
BENCHMARK(BM_BellLp)->Arg(2)->Arg(3)->Unit(benchmark::kMicrosecond);

void BM_GuessingSdp(benchmark::State& state) {
  const auto& ctx = context(static_cast<int>(state.range(0)));
  const auto ch = canonical_chsh(ctx.scenario());
  for (auto _ : state) {
    benchmark::DoNotOptimize(bound_guessing_probability(0.15, ch, 1, ctx.moments()));
  }
}
BENCHMARK(BM_GuessingSdp)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_Q2Membership(benchmark::State& state) {
  const auto& ctx = context(static_cast<int>(state.range(0)));
  const auto b = draws(ctx, 16);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(q2_membership(b[i++ % b.size()], ctx.moments()));
  }
}
BENCHMARK(BM_Q2Membership)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  const auto kind = static_cast<nn::ModelKind>(state.range(0));
  const nn::Network net(nn::NetworkSpec::defaults(kind, Scenario(2, 2)), 1);
  const std::vector<double> x(16, 0.25);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
}
BENCHMARK(BM_Forward)
    ->Arg(static_cast<int>(nn::ModelKind::pguess))
    ->Arg(static_cast<int>(nn::ModelKind::nn1))
    ->Arg(static_cast<int>(nn::ModelKind::nn2))
    ->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
