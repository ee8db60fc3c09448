// Copyright 2026 The misalign-tomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Restart pools run serially and through OpenMP. Both paths return
// identical results; only wall time differs.

#include <numbers>

#include <benchmark/benchmark.h>

#include "misalign/worstcase.hpp"

using namespace misalign;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

OptimizerOptions pool(benchmark::State& state, Execution ex) {
  OptimizerOptions o;
  o.restarts = static_cast<int>(state.range(0));
  o.seed = 3;
  o.execution = ex;
  o.use_fixtures = false;
  return o;
}

template <Execution ex>
void BM_FidelityPool(benchmark::State& state) {
  const OptimizerOptions o = pool(state, ex);
  for (auto _ : state) benchmark::DoNotOptimize(minimize_fidelity(1.0 * kDeg, 0.0, o).best_value);
  state.SetItemsProcessed(state.iterations() * o.restarts);
}

template <Execution ex>
void BM_WitnessPool(benchmark::State& state) {
  const OptimizerOptions o = pool(state, ex);
  const WitnessSpec w = ghz_witness(4);
  for (auto _ : state) benchmark::DoNotOptimize(minimize_witness(w, 3.0 * kDeg, PlanMode::Local, o).best_value);
  state.SetItemsProcessed(state.iterations() * o.restarts);
}

}  // namespace

BENCHMARK(BM_FidelityPool<Execution::Serial>)->Name("fidelity/serial")->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FidelityPool<Execution::Parallel>)->Name("fidelity/parallel")->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WitnessPool<Execution::Serial>)->Name("witness/serial")->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WitnessPool<Execution::Parallel>)->Name("witness/parallel")->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
