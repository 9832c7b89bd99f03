/*
 * Copyright 2026 The attrib-audit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Serial reference against OpenMP execution for the data-parallel kernels.

#include <benchmark/benchmark.h>

#include "attrib/attribution.hpp"
#include "attrib/forge.hpp"
#include "attrib/querytest.hpp"
#include "attrib/rng.hpp"
#include "attrib/suites.hpp"

namespace {

using attrib::Exec;

Exec ExecArg(const benchmark::State& state) {
  return state.range(0) == 0 ? Exec::kSerial : Exec::kParallel;
}

void BM_ShapExact(benchmark::State& state) {
  attrib::Rng rng = attrib::MakeRng(1, 0);
  const attrib::Model model = attrib::RandomMlp(rng, 10, 32, 1);
  const attrib::Baseline baseline = attrib::RandomEmpirical(rng, 10, 8);
  const auto x = attrib::RandomPoint(rng, 10, -1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(attrib::ShapExact(model, baseline, x, ExecArg(state)));
  }
}
BENCHMARK(BM_ShapExact)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ShapSampled(benchmark::State& state) {
  attrib::Rng rng = attrib::MakeRng(2, 0);
  const attrib::Model model = attrib::RandomMlp(rng, 12, 32, 1);
  const attrib::Baseline baseline = attrib::RandomEmpirical(rng, 12, 100);
  const auto x = attrib::RandomPoint(rng, 12, -1.0, 1.0);
  const attrib::MethodSettings settings;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        attrib::ShapSampled(model, baseline, x, settings, ExecArg(state)));
  }
}
BENCHMARK(BM_ShapSampled)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_QueryEmpiricalRates(benchmark::State& state) {
  attrib::QueryPlan plan;
  plan.p = 2;
  plan.n = 200;
  plan.epsilon = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(attrib::EmpiricalRates(plan, 2000, ExecArg(state)));
  }
}
BENCHMARK(BM_QueryEmpiricalRates)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_RandomPolynomial(benchmark::State& state) {
  const attrib::Baseline baseline(attrib::UniformBox{{-1.5}, {1.5}});
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        attrib::RandomPolynomialMc(2, baseline, 1 << 20, 0, ExecArg(state)));
  }
}
BENCHMARK(BM_RandomPolynomial)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
