#include <benchmark/benchmark.h>

#include <cstdint>
#include <utility>
#include <vector>

#include "vatensor/likelihood.hpp"
#include "vatensor/sampler.hpp"
#include "vatensor/synth.hpp"
#include "vatensor/types.hpp"

namespace va = vatensor;

namespace {

struct Bench {
  va::VADataset data;
  va::LatentState state;
  va::ModelParams params;
  std::vector<int> s_row;

  Bench(va::ModelFamily family, int C, int p, int K, int r, int h, int n_train,
        int n_target) {
    va::SimConfig sim;
    sim.C = C;
    sim.p = p;
    sim.K = K;
    sim.r = r;
    sim.h = h;
    sim.n_train = n_train;
    sim.n_target = n_target;
    sim.seed = 7;
    data = va::generate(sim).data;

    va::ModelConfig cfg;
    cfg.family = family;
    cfg.C = C;
    cfg.K = K;
    cfg.r = r;
    cfg.h = family == va::ModelFamily::kCTucker ? h : 1;
    cfg = va::with_defaults(cfg);
    std::tie(state, params) = va::initialize(data, cfg);
    s_row.resize(p);
    for (int j = 0; j < p; ++j) s_row[j] = state.s_at(0, j);
  }

  std::span<const std::int8_t> row(int i) const {
    return std::span<const std::int8_t>(data.x).subspan(
        static_cast<std::size_t>(i) * data.p, static_cast<std::size_t>(data.p));
  }
};

// Full survey scale: 20 causes, 80 symptoms, 5 groups of 3 classes.
const Bench& coupled_scale() {
  static Bench b(va::ModelFamily::kCTucker, 20, 80, 3, 5, 3, 2000, 1000);
  return b;
}

const Bench& independent_scale() {
  static Bench b(va::ModelFamily::kGroupParafac, 20, 80, 3, 5, 1, 2000, 1000);
  return b;
}

void BM_RowLoglikCoupled(benchmark::State& state) {
  const Bench& b = coupled_scale();
  int i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(va::row_loglik_ctucker(b.row(i), 0, b.params, b.s_row));
    i = (i + 1) % b.data.n;
  }
}
BENCHMARK(BM_RowLoglikCoupled);

void BM_RowLoglikIndependent(benchmark::State& state) {
  const Bench& b = independent_scale();
  int i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(va::row_loglik_gip(b.row(i), 0, b.params, b.s_row));
    i = (i + 1) % b.data.n;
  }
}
BENCHMARK(BM_RowLoglikIndependent);

void BM_LogPhiTables(benchmark::State& state) {
  const Bench& b = coupled_scale();
  for (auto _ : state) {
    benchmark::DoNotOptimize(va::build_log_phi(b.params));
  }
}
BENCHMARK(BM_LogPhiTables);

void BM_CauseConditional(benchmark::State& state) {
  const Bench& b = coupled_scale();
  int i = b.data.n - 1;  // a target row
  for (auto _ : state) {
    benchmark::DoNotOptimize(va::y_conditional(b.data, i, b.state, b.params));
  }
}
BENCHMARK(BM_CauseConditional);

// One full Gibbs sweep, amortized over a short chain on a mid-size problem.
void BM_GibbsSweep(benchmark::State& state) {
  va::SimConfig sim;
  sim.C = 10;
  sim.p = 40;
  sim.K = 3;
  sim.r = 5;
  sim.h = 3;
  sim.n_train = 600;
  sim.n_target = 300;
  sim.seed = 11;
  va::VADataset data = va::generate(sim).data;

  va::ModelConfig cfg;
  cfg.C = 10;
  cfg.K = 3;
  cfg.r = 5;
  cfg.h = 3;
  cfg.mcmc.iterations = 20;
  cfg.mcmc.burn_in = 10;
  cfg.mcmc.store_s = false;
  for (auto _ : state) {
    benchmark::DoNotOptimize(va::run_chain(data, cfg));
  }
  state.SetItemsProcessed(state.iterations() * cfg.mcmc.iterations);
}
BENCHMARK(BM_GibbsSweep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
