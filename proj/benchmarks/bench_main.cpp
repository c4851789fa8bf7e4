#include <benchmark/benchmark.h>

#include "at2/analysis.hpp"
#include "at2/rng.hpp"
#include "at2/scenario.hpp"

namespace {

using namespace at2;
using scn::Scenario;
using scn::run_scenario;

// End-to-end simulator churn: deterministic transfer stack, every process
// settles one transfer, tracing disabled.
void bm_scenario_at2d(benchmark::State& state) {
  Scenario s;
  s.protocol = "at2d";
  s.n = static_cast<std::uint32_t>(state.range(0));
  s.trace = "off";
  std::uint64_t seed = 1;
  for (auto _ : state) {
    s.seed = seed++;
    benchmark::DoNotOptimize(run_scenario(s));
  }
  state.SetItemsProcessed(state.iterations() * s.n);
}
BENCHMARK(bm_scenario_at2d)->Arg(4)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

// Probabilistic stack over the same harness; message complexity dominates.
void bm_scenario_gossip(benchmark::State& state) {
  Scenario s;
  s.protocol = "gossip";
  s.n = static_cast<std::uint32_t>(state.range(0));
  s.f = 0.1;
  s.prob.G = 10;
  s.trace = "off";
  std::uint64_t seed = 1;
  for (auto _ : state) {
    s.seed = seed++;
    benchmark::DoNotOptimize(run_scenario(s));
  }
  state.SetItemsProcessed(state.iterations() * s.n);
}
BENCHMARK(bm_scenario_gossip)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void bm_er_connectivity(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(analysis::er_connectivity(n, 0.2));
}
BENCHMARK(bm_er_connectivity)->Arg(16)->Arg(64)->Arg(256)->Arg(1024);

void bm_er_connectivity_mc(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  Rng rng(42);
  for (auto _ : state)
    benchmark::DoNotOptimize(analysis::er_connectivity_mc(n, 0.2, 1000, rng));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(bm_er_connectivity_mc)->Arg(16)->Arg(64);

void bm_threshold_contagion(benchmark::State& state) {
  analysis::ContagionParams p;
  p.nodes = static_cast<std::uint32_t>(state.range(0));
  p.pool = p.nodes + 2;
  p.R = 4;
  p.R_hat = 2;
  p.phantoms = 2;
  p.rounds = 3;
  p.seeds_per_round = 1;
  for (auto _ : state) benchmark::DoNotOptimize(analysis::threshold_contagion(p));
}
BENCHMARK(bm_threshold_contagion)->Arg(8)->Arg(16)->Arg(32);

void bm_gossip_totality_bound(benchmark::State& state) {
  const auto N = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(analysis::gossip_totality_bound(N, 0.1, 10.0));
}
BENCHMARK(bm_gossip_totality_bound)->Arg(100)->Arg(400)->Arg(1600);

void bm_pcb_consistency_bound(benchmark::State& state) {
  analysis::PdeParams p;
  p.N = static_cast<std::uint32_t>(state.range(0));
  p.f = 0.1;
  p.G = 15;
  p.E = 30;
  p.E_hat = 24;
  p.R = 30;
  p.R_hat = 12;
  p.D = 30;
  p.D_hat = 20;
  for (auto _ : state) benchmark::DoNotOptimize(analysis::pcb_consistency_bound(p));
}
BENCHMARK(bm_pcb_consistency_bound)->Arg(50)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
