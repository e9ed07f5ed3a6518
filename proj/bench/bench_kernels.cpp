// Serial reference against the OpenMP path for the two parallel kernels.
// Set OMP_NUM_THREADS to control the thread count.

#include <benchmark/benchmark.h>

#include <cmath>

#include "doslab/report.hpp"
#include "doslab/sim.hpp"
#include "doslab/threshold.hpp"

namespace {

using namespace doslab;

SimConfig table_one_config(int replications) {
  const StudySettings s;
  const auto ch = s.channel(1.0, 1.0);
  const auto t = optimize_backoff(ch, s.contention());
  SimConfig cfg{ch, s.contention(), LinearBackoffPolicy{t.sigma_star, t.x_star}};
  cfg.num_transmissions = 20000;
  cfg.num_replications = replications;
  cfg.seed = 1;
  return cfg;
}

void BM_Replications(benchmark::State& state, Execution exec) {
  const auto cfg = table_one_config(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_replications(cfg, exec));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) *
                          static_cast<std::int64_t>(cfg.num_transmissions));
}

void BM_TrainingSweep(benchmark::State& state, Execution exec) {
  const auto taus = log_grid(0.02, 10.0, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sweep_training_time(1.0, 10.0, taus, std::exp(-1.0), SnrConvention::kTabulated, {}, exec));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Replications, serial, Execution::kSerial)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Replications, parallel, Execution::kParallel)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TrainingSweep, serial, Execution::kSerial)->Arg(41)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TrainingSweep, parallel, Execution::kParallel)->Arg(41)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
