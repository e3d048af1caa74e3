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

#include <random>

#include "retinarisk/metrics.hpp"

using namespace retinarisk;

namespace {

PredictionSet make_preds(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nz;
  std::vector<double> s;
  std::vector<bool> y;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i % 5 == 0;
    s.push_back(1.0 / (1.0 + std::exp(-(nz(rng) + (pos ? 1.0 : 0.0)))));
    y.push_back(pos);
  }
  return PredictionSet::from_vectors(s, y);
}

void BM_AucDelong(benchmark::State& state) {
  const PredictionSet p = make_preds(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(auc_delong(p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AucDelong)->RangeMultiplier(10)->Range(1000, 1000000);

void BM_PpvNpvCurve(benchmark::State& state) {
  const PredictionSet p = make_preds(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ppv_npv_curve(p));
}
BENCHMARK(BM_PpvNpvCurve)->Arg(50000);

void BM_Calibration(benchmark::State& state) {
  const PredictionSet p = make_preds(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(calibration_table(p, 10));
}
BENCHMARK(BM_Calibration)->Arg(50000);

}  // namespace
