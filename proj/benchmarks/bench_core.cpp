// Copyright 2026 The MergeSched Authors.
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

#include <benchmark/benchmark.h>

#include <vector>

#include "mergesched/compressors.hpp"
#include "mergesched/profiles.hpp"
#include "mergesched/rng.hpp"
#include "mergesched/scheduler.hpp"
#include "mergesched/simulator.hpp"

namespace ms = mergesched;

namespace {

std::vector<float> gradient(std::size_t n) {
  ms::SplitMix rng(42);
  std::vector<float> g(n);
  for (auto& v : g) v = static_cast<float>(rng.normal());
  return g;
}

ms::ModelProfile profile(std::size_t n) {
  return ms::synth_profile(n, ms::Distribution::log_uniform(100, 1e6),
                           ms::Distribution::uniform(0.05, 0.5), 7);
}

const ms::CostParams kCosts{0.02, 1e-6, 0.1, 4e-6, 0.0};

void EncodeDecode(benchmark::State& state, ms::Algorithm algo) {
  const auto spec = ms::CompressorSpec::make(algo);
  const auto g = gradient(static_cast<std::size_t>(state.range(0)));
  ms::StreamKey key{};
  for (auto _ : state) {
    auto p = ms::encode(spec, g, key);
    auto d = ms::decode(spec, p);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK_CAPTURE(EncodeDecode, identity, ms::Algorithm::kIdentity)->Range(1 << 10, 1 << 20);
BENCHMARK_CAPTURE(EncodeDecode, topk, ms::Algorithm::kTopK)->Range(1 << 10, 1 << 20);
BENCHMARK_CAPTURE(EncodeDecode, efsignsgd, ms::Algorithm::kEfSignSgd)->Range(1 << 10, 1 << 20);
BENCHMARK_CAPTURE(EncodeDecode, qsgd, ms::Algorithm::kQsgd)->Range(1 << 10, 1 << 20);

void SimulateIteration(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = profile(n);
  const auto part = ms::Partition::layer_wise(n);
  const auto spec = ms::CompressorSpec::make(ms::Algorithm::kDgcLite);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ms::simulate_iteration(p, part, spec, kCosts, true));
  }
}
BENCHMARK(SimulateIteration)->Arg(161)->Arg(314)->Arg(4096);

void HeuristicSearch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = profile(n);
  const auto spec = ms::CompressorSpec::make(ms::Algorithm::kDgcLite);
  for (auto _ : state) {
    auto eval = ms::analytic_evaluator(p, spec, kCosts);
    benchmark::DoNotOptimize(ms::heuristic_search(eval, ms::SearchConfig{}));
  }
}
BENCHMARK(HeuristicSearch)->Arg(161)->Arg(314)->Arg(4096);

void ExhaustiveSearch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = profile(n);
  const auto spec = ms::CompressorSpec::make(ms::Algorithm::kDgcLite);
  for (auto _ : state) {
    auto eval = ms::analytic_evaluator(p, spec, kCosts);
    benchmark::DoNotOptimize(ms::exhaustive_search(eval, n));
  }
}
BENCHMARK(ExhaustiveSearch)->Arg(12)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
