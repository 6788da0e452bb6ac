// Copyright 2026 The Shield Authors
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

#include <memory>
#include <random>

#include <benchmark/benchmark.h>

#include "shield/backup_cbf.h"
#include "shield/dynamics.h"
#include "shield/qp.h"
#include "shield/scenarios.h"
#include "shield/shields.h"
#include "shield/thread_pool.h"
#include "shield/validity.h"

namespace shield {
namespace {

const Scenario& ReachAvoid() {
  static const Scenario* s = new Scenario(BuildScenario(BuiltinScenario("reach-avoid")));
  return *s;
}

const Scenario& Slice() {
  static const Scenario* s = new Scenario(BuildScenario(BuiltinScenario("di-slice")));
  return *s;
}

State SliceState() {
  State x(4);
  x << -3.0, 1.5, 2.0, 0.0;
  return x;
}

void BM_SolveQp(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  QpProblem p;
  p.u_nom = Input(2);
  p.u_nom << 3.0, -2.0;
  p.bounds = InputBounds::Symmetric(2, 2.0);
  for (int j = 0; j < state.range(0); ++j) {
    Input a(2);
    a << unit(rng), unit(rng);
    p.constraints.push_back({a, -0.5});
  }
  for (auto _ : state) benchmark::DoNotOptimize(SolveQp(p));
}
BENCHMARK(BM_SolveQp)->Arg(4)->Arg(25)->Arg(121);

void BM_PropagateSensitivity(benchmark::State& state) {
  const Scenario& s = Slice();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        PropagateSensitivity(s.sys.model, s.sys.backup, SliceState(), 0.0, 12.0, s.sys.dt));
  }
}
BENCHMARK(BM_PropagateSensitivity)->Unit(benchmark::kMillisecond);

void BM_EvaluateCandidate(benchmark::State& state) {
  const Scenario& s = Slice();
  for (auto _ : state) {
    benchmark::DoNotOptimize(EvaluateCandidate(s.sys, SliceState(), 0.0, 1.0));
  }
}
BENCHMARK(BM_EvaluateCandidate)->Unit(benchmark::kMillisecond);

void BM_BcbfFilterStep(benchmark::State& state) {
  const BackupCbfContext ctx = Slice().Bcbf();
  for (auto _ : state) benchmark::DoNotOptimize(BcbfFilterStep(ctx, 0.0, SliceState()));
}
BENCHMARK(BM_BcbfFilterStep)->Unit(benchmark::kMillisecond);

void BM_MpsStep(benchmark::State& state) {
  const Scenario& s = ReachAvoid();
  const ShieldContext ctx = s.Shield();
  const State x = SampleInitialState(s.config, 0);
  for (auto _ : state) benchmark::DoNotOptimize(MpsStep(ctx, 0.0, x));
}
BENCHMARK(BM_MpsStep)->Unit(benchmark::kMillisecond);

void BM_GkSearch(benchmark::State& state) {
  const Scenario& s = ReachAvoid();
  const ShieldContext ctx = s.Shield();
  const State x = SampleInitialState(s.config, 0);
  for (auto _ : state) benchmark::DoNotOptimize(GkSearch(ctx, 0.0, x));
}
BENCHMARK(BM_GkSearch)->Unit(benchmark::kMillisecond);

void BM_GkSearchParallel(benchmark::State& state) {
  const Scenario& s = ReachAvoid();
  const ShieldContext ctx = s.Shield();
  const State x = SampleInitialState(s.config, 0);
  ThreadPool pool(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(GkSearchParallel(ctx, 0.0, x, pool));
}
BENCHMARK(BM_GkSearchParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace shield

BENCHMARK_MAIN();
