#include <benchmark/benchmark.h>

#include "chronocl/config.hpp"
#include "chronocl/metrics.hpp"
#include "chronocl/runner.hpp"
#include "chronocl/strategies.hpp"

using namespace chronocl;

namespace {

Batch make_batch(int dim, int n, Rng& rng) {
  Batch batch;
  for (int i = 0; i < n; ++i) {
    LabeledSample s = sample_real(dim, rng);
    s.label = i % 2;
    batch.samples.push_back(std::move(s));
  }
  return batch;
}

void BM_Auc(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    labels[i] = i % 2;
  }
  for (auto _ : state) benchmark::DoNotOptimize(auc(scores, labels));
  state.SetComplexityN(n);
}
BENCHMARK(BM_Auc)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_LossGrad(benchmark::State& state) {
  Rng rng(2);
  ModelArch arch;
  const ModelState model = ModelState::random_init(arch, rng);
  const Batch batch = make_batch(arch.input_dim, 16, rng);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(model, batch));
}
BENCHMARK(BM_LossGrad);

void BM_StrategyStep(benchmark::State& state) {
  const StrategyKind kind = static_cast<StrategyKind>(state.range(0));
  Rng rng(3);
  ModelArch arch;
  Rng init(4);
  StrategyState strategy =
      make_strategy_state(default_strategy_config(kind, 10), arch, 16, init);
  Rng strat_rng(5);
  const Batch batch = make_batch(arch.input_dim, 16, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(strategy_step(strategy, batch, strat_rng));
  }
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_StrategyStep)->DenseRange(0, 7, 1);

void BM_RunSimulation(benchmark::State& state) {
  SimulationConfig cfg = default_config();
  cfg.execution.monthly_batches = static_cast<int>(state.range(0));
  cfg.strategy =
      default_strategy_config(StrategyKind::Replay, cfg.execution.monthly_batches);
  for (auto _ : state) {
    cfg.seed += 1;
    benchmark::DoNotOptimize(run_simulation(cfg));
  }
}
BENCHMARK(BM_RunSimulation)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
