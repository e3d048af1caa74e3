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

#include <memory>
#include <random>

#include "retinarisk/survival.hpp"

using namespace retinarisk;

namespace {

struct Data {
  std::vector<double> t;
  std::unique_ptr<bool[]> e;
  Eigen::MatrixXd x;
  std::size_t n;
};

Data make(std::size_t n, int p) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nz;
  std::exponential_distribution<double> ex(1.0);
  Data d{{}, std::make_unique<bool[]>(n), Eigen::MatrixXd(static_cast<Eigen::Index>(n), p), n};
  for (std::size_t i = 0; i < n; ++i) {
    double lp = 0.0;
    for (int j = 0; j < p; ++j) {
      d.x(static_cast<Eigen::Index>(i), j) = nz(rng);
      lp += 0.2 * d.x(static_cast<Eigen::Index>(i), j);
    }
    const double t = ex(rng) / std::exp(lp), c = ex(rng) * 2;
    d.t.push_back(std::ceil(std::min(t, c) * 365));  // whole days, with ties
    d.e[i] = t <= c;
  }
  return d;
}

void BM_CoxFit(benchmark::State& state) {
  const Data d = make(static_cast<std::size_t>(state.range(0)), 4);
  const std::span<const bool> ev(d.e.get(), d.n);
  for (auto _ : state) benchmark::DoNotOptimize(cox_fit(d.t, ev, d.x));
}
BENCHMARK(BM_CoxFit)->Arg(5000)->Arg(50000)->Unit(benchmark::kMillisecond);

void BM_KaplanMeier(benchmark::State& state) {
  const Data d = make(static_cast<std::size_t>(state.range(0)), 1);
  const std::span<const bool> ev(d.e.get(), d.n);
  for (auto _ : state) benchmark::DoNotOptimize(kaplan_meier(d.t, ev));
}
BENCHMARK(BM_KaplanMeier)->Arg(50000);

}  // namespace
