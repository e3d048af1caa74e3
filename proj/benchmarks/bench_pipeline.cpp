/*
 * Copyright 2026 The retinarisk Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include "retinarisk/endpoint.hpp"
#include "retinarisk/simulate.hpp"

using namespace retinarisk;

namespace {

void BM_Simulate(benchmark::State& state) {
  SimConfig c;
  c.n_patients = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(c, static_cast<unsigned>(state.range(1))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Args({25000, 1})->Args({25000, 0})->Unit(benchmark::kMillisecond);

void BM_LabelCohort(benchmark::State& state) {
  SimConfig c;
  c.n_patients = 25000;
  const SimulationOutput s = simulate(c, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(label_cohort(s.cohort, OutcomeThreshold::MildPlus, {},
                                          static_cast<unsigned>(state.range(0))));
  }
}
BENCHMARK(BM_LabelCohort)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

}  // namespace
