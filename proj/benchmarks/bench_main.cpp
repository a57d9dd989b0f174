// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "disam/domain_objective.hpp"
#include "disam/optimizers.hpp"
#include "disam/problems.hpp"
#include "disam/rng.hpp"

namespace {

using namespace disam;

struct Setup {
  SoftmaxMLP mlp;
  std::vector<Sample> batch;
  ParamVector w;

  explicit Setup(int hidden) : mlp(2, hidden, 3) {
    const auto data = generate_shifted_clusters(ShiftedClusterSpec{});
    for (int d = 0; d < data.num_domains(); ++d)
      for (int i = 0; i < 8; ++i) batch.push_back(data.domains[d][i]);
    CounterRng rng(1);
    w = mlp.initial_params(rng);
  }
};

void BM_MlpEval(benchmark::State& state) {
  const Setup s(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(s.mlp.eval(s.w, s.batch));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.batch.size()));
}
BENCHMARK(BM_MlpEval)->Arg(16)->Arg(64)->Arg(256);

void BM_Step(benchmark::State& state) {
  const Setup s(16);
  const auto mode = static_cast<OptimizerMode>(state.range(0));
  std::optional<PerturbationSpec> spec;
  if (mode == OptimizerMode::kSam) spec = PerturbationSpec{0.05, 0.1, PerturbationMode::kSam, 0.0};
  if (mode == OptimizerMode::kDisam) spec = PerturbationSpec{0.05, 0.1, PerturbationMode::kDisam, 0.0};
  auto st = make_optimizer_state(s.w, mode, 0.1, Schedule::kInvSqrt, spec);
  for (auto _ : state) benchmark::DoNotOptimize(step(st, s.mlp, s.batch));
  state.SetLabel(std::string(to_string(mode)));
}
BENCHMARK(BM_Step)
    ->Arg(static_cast<int>(OptimizerMode::kErm))
    ->Arg(static_cast<int>(OptimizerMode::kSam))
    ->Arg(static_cast<int>(OptimizerMode::kDisam));

void BM_DisamPerturbationGradient(benchmark::State& state) {
  const Setup s(64);
  const auto report = s.mlp.eval(s.w, s.batch);
  for (auto _ : state) benchmark::DoNotOptimize(disam_perturbation_gradient(report, 0.1));
}
BENCHMARK(BM_DisamPerturbationGradient);

}  // namespace
BENCHMARK_MAIN();
